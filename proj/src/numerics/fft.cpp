#include "tspulse/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tspulse/error.hpp"

namespace tspulse::fft {
namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles evaluated directly per index rather than by recurrence, so
      // the error does not grow with the transform length.
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(len);
      const std::complex<double> w(std::cos(ang), std::sin(ang));
      for (std::size_t i = 0; i < n; i += len) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

void direct(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s{};
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) /
                         static_cast<double>(n);
      s += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = s;
  }
  a.swap(out);
}

}  // namespace

void transform(std::vector<std::complex<double>>& a, bool inverse) {
  if (a.size() <= 1) return;
  if (is_pow2(a.size())) {
    radix2(a, inverse);
  } else {
    direct(a, inverse);
  }
}

void rfft(std::span<const double> x, std::span<double> out_re, std::span<double> out_im) {
  const std::size_t n = x.size();
  if (n == 0 || n % 2 != 0) {
    throw ArgumentError("rfft requires an even, non-zero length (got " + std::to_string(n) + ")");
  }
  const std::size_t bins = n / 2 + 1;
  if (out_re.size() != bins || out_im.size() != bins) {
    throw ArgumentError("rfft output spans must hold S/2+1 bins");
  }
  std::vector<std::complex<double>> buf(x.begin(), x.end());
  transform(buf, false);
  for (std::size_t k = 0; k < bins; ++k) {
    out_re[k] = buf[k].real();
    out_im[k] = buf[k].imag();
  }
}

void irfft(std::span<const double> re, std::span<const double> im, std::span<double> out) {
  const std::size_t n = out.size();
  if (n == 0 || n % 2 != 0) {
    throw ArgumentError("irfft requires an even, non-zero output length");
  }
  const std::size_t bins = n / 2 + 1;
  if (re.size() != bins || im.size() != bins) {
    throw ArgumentError("irfft expects " + std::to_string(bins) + " bins, got " +
                        std::to_string(re.size()) + "/" + std::to_string(im.size()));
  }
  std::vector<std::complex<double>> buf(n);
  buf[0] = {re[0], 0.0};
  buf[n / 2] = {re[n / 2], 0.0};
  for (std::size_t k = 1; k < n / 2; ++k) {
    buf[k] = {re[k], im[k]};
    buf[n - k] = {re[k], -im[k]};
  }
  transform(buf, true);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = buf[t].real() * inv;
}

Spectrum rfft(std::span<const double> x) {
  Spectrum s;
  s.re.resize(x.size() / 2 + 1);
  s.im.resize(x.size() / 2 + 1);
  rfft(x, s.re, s.im);
  return s;
}

std::vector<double> irfft(std::span<const double> re, std::span<const double> im, std::size_t n) {
  std::vector<double> out(n);
  irfft(re, im, out);
  return out;
}

}  // namespace tspulse::fft
