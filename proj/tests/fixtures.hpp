#pragma once

#include <random>
#include <vector>

#include "nacifs/conformal.hpp"
#include "nacifs/system_io.hpp"
#include "oracles.hpp"

namespace fixture {

using nacifs::Complex;
using nacifs::ConformalMap;
using nacifs::DomainSpec;
using nacifs::GenerationSpec;
using nacifs::SystemSpec;

inline GenerationSpec pair(double a0, double a1, double b = 0.5) {
  return GenerationSpec{{ConformalMap::similarity({a0, 0.0}, {-b, 0.0}),
                         ConformalMap::similarity({a1, 0.0}, {b, 0.0})}};
}

inline SystemSpec symmetric(int horizon = 64) {
  return SystemSpec::autonomous(DomainSpec::make(0.1), pair(0.3, 0.3), horizon);
}

inline SystemSpec moran_quarter(int horizon = 64) {
  return SystemSpec::autonomous(DomainSpec::make(0.1), pair(0.25, 0.25), horizon);
}

inline SystemSpec asymmetric(int horizon = 64) {
  return SystemSpec::autonomous(DomainSpec::make(0.1), pair(0.25, 0.35), horizon);
}

inline SystemSpec periodic_quarter_ninth(int horizon = 64) {
  return SystemSpec(DomainSpec::make(0.1), nacifs::SystemMode::Periodic, {},
                    {pair(0.25, 0.25), pair(1.0 / 9.0, 1.0 / 9.0)}, horizon);
}

inline SystemSpec quadratic(int horizon = 64) {
  GenerationSpec g{{ConformalMap::quadratic({0.3, 0}, {-0.5, 0}, {0.02, 0}),
                    ConformalMap::quadratic({0.3, 0}, {0.5, 0}, {0.0, 0.02})}};
  return SystemSpec::autonomous(DomainSpec::make(0.1), g, horizon);
}

/// Random valid 2- or 3-branch generation with small quadratic terms.
inline GenerationSpec random_generation(std::mt19937_64& rng, bool quadratic_terms = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int d = 2 + static_cast<int>(u(rng) * 2.0);
  GenerationSpec g;
  const double phase = u(rng) * 6.283185307179586;
  for (int i = 0; i < d; ++i) {
    const double am = 0.15 + 0.07 * u(rng);
    const Complex a = std::polar(am, (u(rng) - 0.5));
    const Complex b = std::polar(0.5 + 0.02 * (u(rng) - 0.5), phase + 6.283185307179586 * i / d);
    if (quadratic_terms) {
      const Complex c = std::polar(0.01 * u(rng), 6.283185307179586 * u(rng));
      g.maps.push_back(ConformalMap::quadratic(a, b, c));
    } else {
      g.maps.push_back(ConformalMap::similarity(a, b));
    }
  }
  return g;
}

inline SystemSpec random_system(std::mt19937_64& rng, int horizon, bool quadratic_terms = true) {
  std::vector<GenerationSpec> gens;
  for (int n = 0; n < horizon; ++n) gens.push_back(random_generation(rng, quadratic_terms));
  return SystemSpec::explicit_system(DomainSpec::make(0.1), std::move(gens));
}

inline std::vector<std::vector<oracle::Poly>> polys(const SystemSpec& s, int generations) {
  std::vector<std::vector<oracle::Poly>> out;
  for (int n = 0; n < generations; ++n) {
    std::vector<oracle::Poly> g;
    for (const auto& m : s.generation(n).maps) g.push_back({m.a, m.b, m.c});
    out.push_back(g);
  }
  return out;
}

inline nacifs::Word random_word(std::mt19937_64& rng, const nacifs::Alphabet& alphabet, int offset,
                                int length) {
  nacifs::Word w(offset, {});
  for (int k = 0; k < length; ++k) {
    std::uniform_int_distribution<int> pick(0, alphabet.degree(offset + k) - 1);
    w.branches.push_back(pick(rng));
  }
  return w;
}

}  // namespace fixture
