#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_helpers.hpp"
#include "tspulse/error.hpp"
#include "tspulse/fft.hpp"

using namespace tspulse;

namespace {

// O(S^2) DFT straight from the definition sum_t x_t exp(-2 pi i k t / S).
void naive_dft(const std::vector<double>& x, std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = x.size();
  re.assign(n / 2 + 1, 0.0);
  im.assign(n / 2 + 1, 0.0);
  for (std::size_t k = 0; k <= n / 2; ++k)
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * double(k * t) / double(n);
      re[k] += x[t] * std::cos(ang);
      im[k] += x[t] * std::sin(ang);
    }
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  auto t = tsptest::random_tensor({n}, seed);
  return {t.data().begin(), t.data().end()};
}

}  // namespace

TEST(Fft, MatchesNaiveDft) {
  for (std::size_t n : {2u, 4u, 16u, 64u, 12u, 30u}) {
    auto x = random_vec(n, n);
    std::vector<double> nre, nim;
    naive_dft(x, nre, nim);
    auto sp = fft::rfft(x);
    for (std::size_t k = 0; k <= n / 2; ++k) {
      EXPECT_NEAR(sp.re[k], nre[k], 1e-10) << "n=" << n << " k=" << k;
      EXPECT_NEAR(sp.im[k], nim[k], 1e-10) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Fft, PureCosinePeaksAtItsBin) {
  std::vector<double> x(64);
  for (std::size_t t = 0; t < 64; ++t) x[t] = std::cos(2.0 * std::numbers::pi * 3.0 * t / 64.0);
  auto sp = fft::rfft(x);
  std::size_t best = 0;
  for (std::size_t k = 0; k < sp.re.size(); ++k)
    if (std::abs(sp.re[k]) > std::abs(sp.re[best])) best = k;
  EXPECT_EQ(best, 3u);
  EXPECT_NEAR(sp.im[3], 0.0, 1e-10);
}

TEST(Fft, ZeroInZeroOut) {
  std::vector<double> x(32, 0.0);
  auto sp = fft::rfft(x);
  for (std::size_t k = 0; k < sp.re.size(); ++k) {
    EXPECT_EQ(sp.re[k], 0.0);
    EXPECT_EQ(sp.im[k], 0.0);
  }
  auto back = fft::irfft(sp.re, sp.im, 32);
  for (double v : back) EXPECT_EQ(v, 0.0);
}

TEST(Fft, RoundtripAllSizes) {
  for (std::size_t n : {16u, 64u, 512u}) {
    auto x = random_vec(n, 1000 + n);
    auto sp = fft::rfft(x);
    auto back = fft::irfft(sp.re, sp.im, n);
    double err = 0.0;
    for (std::size_t t = 0; t < n; ++t) err = std::max(err, std::abs(back[t] - x[t]));
    EXPECT_LT(err, 1e-10) << n;
  }
}

TEST(Fft, Linearity) {
  const std::size_t n = 64;
  auto x = random_vec(n, 1), y = random_vec(n, 2);
  const double a = 1.7, b = -0.3;
  std::vector<double> z(n);
  for (std::size_t t = 0; t < n; ++t) z[t] = a * x[t] + b * y[t];
  auto fx = fft::rfft(x), fy = fft::rfft(y), fz = fft::rfft(z);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    EXPECT_NEAR(fz.re[k], a * fx.re[k] + b * fy.re[k], 1e-10);
    EXPECT_NEAR(fz.im[k], a * fx.im[k] + b * fy.im[k], 1e-10);
  }
}

TEST(Fft, Errors) {
  std::vector<double> odd(7, 1.0);
  EXPECT_THROW(fft::rfft(odd), ArgumentError);
  std::vector<double> re(5), im(5);
  EXPECT_THROW(fft::irfft(re, im, 16), ArgumentError);
}
