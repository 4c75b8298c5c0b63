#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tspulse::fft {

/// In-place unnormalised complex DFT (sign -1 forward, +1 inverse).
/// Iterative radix-2 for power-of-two lengths, direct summation otherwise.
void transform(std::vector<std::complex<double>>& a, bool inverse);

/// Real input of even length S -> S/2+1 bins, out_re/out_im sized S/2+1.
/// Throws ArgumentError for odd S.
void rfft(std::span<const double> x, std::span<double> out_re, std::span<double> out_im);

/// Inverse of rfft for n samples from n/2+1 bins. Imaginary parts of the DC
/// and Nyquist bins do not contribute.
void irfft(std::span<const double> re, std::span<const double> im, std::span<double> out);

struct Spectrum {
  std::vector<double> re;
  std::vector<double> im;
};

Spectrum rfft(std::span<const double> x);
std::vector<double> irfft(std::span<const double> re, std::span<const double> im, std::size_t n);

}  // namespace tspulse::fft
