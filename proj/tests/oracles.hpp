#pragma once

// Test-side reference computations. Nothing here calls into the library's
// numerical routines; inputs are plain numbers or map coefficient lists.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nacifs/conformal.hpp"
#include "nacifs/symbolic.hpp"

namespace oracle {

using C = std::complex<double>;

struct Poly {
  C a, b, c;
  C operator()(C z) const { return a * z + b + c * z * z; }
  C deriv(C z) const { return a + 2.0 * c * z; }
};

/// psi_{a_1} o ... o psi_{a_n}(z) evaluated innermost first, with |derivative|.
inline std::pair<C, double> compose(const std::vector<std::vector<Poly>>& gens,
                                    const std::vector<int>& letters, int offset, C z) {
  double d = 1.0;
  for (int k = static_cast<int>(letters.size()) - 1; k >= 0; --k) {
    const Poly& p = gens[static_cast<std::size_t>(offset + k)][static_cast<std::size_t>(letters[k])];
    d *= std::abs(p.deriv(z));
    z = p(z);
  }
  return {z, d};
}

inline double moran_dimension(int d, double ratio) { return std::log(d) / std::log(1.0 / ratio); }

inline double bernoulli_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) h -= x * std::log(x);
  return h;
}

/// t_n for the uniform measure on a 2-branch system with per-generation ratios.
inline double periodic_moran_t(const std::vector<double>& ratios, int n) {
  double chi = 0.0;
  for (int k = 0; k < n; ++k) chi += std::log(1.0 / ratios[static_cast<std::size_t>(k) % ratios.size()]);
  return (n * std::log(2.0)) / chi;
}

/// Probability mass of the exterior Poisson kernel of |w| = R seen from z on
/// each of `bins` equal angular bins starting at angle 0, by composite Simpson.
inline std::vector<double> exterior_kernel_bins(C z, double radius, int bins) {
  std::vector<double> out(static_cast<std::size_t>(bins));
  const double r2 = std::norm(z);
  auto density = [&](double th) {
    return (r2 - radius * radius) / std::norm(z - std::polar(radius, th)) /
           (2.0 * std::numbers::pi);
  };
  const int sub = 400;
  for (int b = 0; b < bins; ++b) {
    const double lo = 2.0 * std::numbers::pi * b / bins;
    const double h = 2.0 * std::numbers::pi / bins / sub;
    double s = density(lo) + density(lo + sub * h);
    for (int i = 1; i < sub; ++i) s += density(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    out[static_cast<std::size_t>(b)] = s * h / 3.0;
  }
  return out;
}

/// First hitting point of |w| = R by planar Brownian motion from |z| > R,
/// simulated by exterior walk-on-spheres with an independent generator.
/// Absorbs within abs_tol * R; a walker beyond far * R is relocated to a
/// uniform angle on the circle (the hitting law from there is uniform to
/// within R / (far R)).
inline double exterior_hit_angle(C z, double radius, std::mt19937_64& rng, double abs_tol = 1e-6,
                                 double far = 1e9) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  for (;;) {
    const double r = std::abs(z);
    const double gap = r - radius;
    if (gap < abs_tol * radius) return std::arg(z);
    if (r > far * radius) return u(rng);
    z += std::polar(gap, u(rng));
  }
}

inline double chi_square_two_sample(const std::vector<std::int64_t>& a,
                                    const std::vector<std::int64_t>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i] - b[i]);
    const double t = static_cast<double>(a[i] + b[i]);
    if (t > 0) s += d * d / t;
  }
  return s;
}

inline double chi_square_goodness(const std::vector<std::int64_t>& obs, const std::vector<double>& p,
                                  double total) {
  double s = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double e = total * p[i];
    s += (static_cast<double>(obs[i]) - e) * (static_cast<double>(obs[i]) - e) / e;
  }
  return s;
}

/// Largest sibling discrepancy over every quadruple (X, X', Y, Z) with
/// 1 <= |X| <= depth - k - tail, |Y| = k, 1 <= |Z| <= tail.
inline double brute_asi(const nacifs::Functional& nu, int k, int tail) {
  using nacifs::Word;
  const int room = nu.depth() - k - tail;
  double sup = 0.0;
  for (int len = 1; len <= room; ++len) {
    std::vector<Word> xs;
    nacifs::for_each_word(nu.alphabet(), nu.offset(), len, [&](const Word& x) { xs.push_back(x); });
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t j = i + 1; j < xs.size(); ++j) {
        nacifs::for_each_word(nu.alphabet(), nu.offset() + len, k, [&](const Word& y) {
          const Word xy = nacifs::concat(xs[i], y);
          const Word xpy = nacifs::concat(xs[j], y);
          for (int zl = 1; zl <= tail; ++zl) {
            nacifs::for_each_word(nu.alphabet(), xy.end(), zl, [&](const Word& z) {
              const double l1 = nu.log_value(nacifs::concat(xy, z)) - nu.log_value(xy);
              const double l2 = nu.log_value(nacifs::concat(xpy, z)) - nu.log_value(xpy);
              sup = std::max(sup, std::abs(l1 - l2));
            });
          }
        });
      }
    }
  }
  return sup;
}

inline std::filesystem::path tmp_dir(const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(NACIFS_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
