#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <memory>

#include "fixtures.hpp"
#include "nacifs/errors.hpp"
#include "nacifs/harmonic.hpp"
#include "nacifs/symbolic.hpp"

using namespace nacifs;

namespace {

DenseTable two_leaves(double v0, double v1) {
  return DenseTable(Alphabet::uniform(2, 1), 0, {{std::log(v0 + v1)}, {std::log(v0), std::log(v1)}});
}

DenseTable constant_table(int degree, int depth, double log_value) {
  const Alphabet al = Alphabet::uniform(degree, depth);
  std::vector<std::vector<double>> levels;
  for (int l = 0; l <= depth; ++l) levels.emplace_back(al.count(0, l), log_value);
  return DenseTable(al, 0, levels);
}

Alphabet random_alphabet(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> deg(2, 3);
  std::vector<int> d;
  for (int i = 0; i < depth; ++i) d.push_back(deg(rng));
  return Alphabet(d);
}

/// Positive functional with independent log-normal values on every word.
DenseTable random_functional(std::mt19937_64& rng, const Alphabet& al, int depth) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> levels;
  for (int l = 0; l <= depth; ++l) {
    std::vector<double> v;
    for (std::size_t i = 0; i < al.count(0, l); ++i) v.push_back(g(rng));
    levels.push_back(v);
  }
  return DenseTable(al, 0, levels);
}

/// Probability measure with random leaf masses.
DenseTable random_measure(std::mt19937_64& rng, const Alphabet& al, int depth) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> leaves;
  double total = 0.0;
  for (std::size_t i = 0; i < al.count(0, depth); ++i) {
    leaves.push_back(u(rng));
    total += leaves.back();
  }
  for (double& v : leaves) v /= total;
  return DenseTable::from_leaves(al, 0, depth, leaves, true);
}

}  // namespace

TEST(Relative, Examples) {
  const UniformMeasure mu(Alphabet::uniform(2, 8));
  EXPECT_NEAR(relative(mu, Word(0, {1}), Word(1, {0, 1, 1})), 0.125, 1e-15);
  const DenseTable t = two_leaves(1.0, 3.0);
  EXPECT_NEAR(relative(t, Word(), Word(0, {1})), 3.0 / 4.0, 1e-15);
  EXPECT_THROW(relative(mu, Word(0, {1}), Word(1, std::vector<int>(8, 0))), Error);
}

TEST(Bracket, CountsCylinders) {
  const DenseTable one = constant_table(2, 3, 0.0);
  EXPECT_NEAR(bracket(one, one, 3), 8.0, 1e-15);
}

TEST(Bracket, MassOfMeasureIsOne) {
  const BernoulliMeasure mu(Alphabet::uniform(2, 10), {{0.6, 0.4}});
  const DenseTable one = constant_table(2, 10, 0.0);
  EXPECT_NEAR(bracket(mu, one, 7), 1.0, 1e-14);
  EXPECT_NEAR(mass(mu, 7), 1.0, 1e-14);
}

TEST(Bracket, LogRatioTwoTerm) {
  const DenseTable nu = two_leaves(1.0, 3.0);
  const DenseTable nupp = two_leaves(1.0, 1.0);
  const double v = bracket_with(nu, 1, Word(), [&](const Word& y) {
    return nupp.log_value(y) - nu.log_value(y);
  });
  EXPECT_NEAR(v, -3.0 * std::log(3.0), 1e-14);
  EXPECT_NEAR(v, -3.2958, 1e-4);
}

TEST(Jensen, ProportionalPairIsEquality) {
  const BernoulliMeasure nu(Alphabet::uniform(2, 6), {{0.3, 0.7}});
  std::vector<std::vector<double>> levels = DenseTable::tabulate(nu, 4).levels();
  for (auto& l : levels) {
    for (double& v : l) v += std::log(2.0);
  }
  const DenseTable twice(nu.alphabet(), 0, levels);
  const auto r = jensen_check(nu, twice, 4);
  EXPECT_TRUE(r.holds);
  EXPECT_TRUE(r.equality);
  EXPECT_NEAR(r.rhs, std::log(2.0), 1e-12);
}

TEST(Jensen, StrictTwoTerm) {
  const auto r = jensen_check(two_leaves(1.0, 3.0), two_leaves(1.0, 1.0), 1);
  EXPECT_NEAR(r.lhs, -3.0 * std::log(3.0), 1e-12);
  EXPECT_NEAR(r.rhs, 4.0 * std::log(0.5), 1e-12);
  EXPECT_TRUE(r.holds);
  EXPECT_FALSE(r.equality);
}

TEST(Jensen, IdenticalPair) {
  const BernoulliMeasure nu(Alphabet::uniform(3, 5), {{0.2, 0.3, 0.5}});
  const auto r = jensen_check(nu, nu, 3);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_NEAR(r.rhs, 0.0, 1e-15);
  EXPECT_TRUE(r.equality);
}

TEST(Dcal, Examples) {
  const Alphabet al = Alphabet::uniform(2, 8);
  const BernoulliMeasure half(al, {{0.5, 0.5}});
  const BernoulliMeasure tilted(al, {{0.6, 0.4}});
  EXPECT_EQ(dcal_distance(half, half, 4).value, 0.0);
  const auto d = dcal_distance(half, tilted, 4);
  EXPECT_NEAR(d.value, std::log(1.25), 1e-14);
  EXPECT_EQ(d.horizon, 4);

  std::mt19937_64 rng(3);
  const DenseTable f = random_functional(rng, al, 5);
  std::vector<std::vector<double>> scaled = f.levels();
  for (auto& l : scaled) {
    for (double& v : l) v += std::log(7.5);
  }
  EXPECT_NEAR(dcal_distance(f, DenseTable(al, 0, scaled), 4).value, 0.0, 1e-14);
  EXPECT_THROW(dcal_distance(f, f, 5), Error);
}

TEST(Asi, BernoulliIsExactlyZero) {
  const BernoulliMeasure mu(Alphabet::uniform(3, 12), {{0.2, 0.3, 0.5}, {0.6, 0.3, 0.1}});
  for (int k = 0; k <= 5; ++k) EXPECT_EQ(asi_discrepancy(mu, k, 2, 2000, 9), 0.0);
}

TEST(Asi, SimilarityDiametersAreExactlyZero) {
  const DerivProxyDiameter s(fixture::asymmetric(12));
  for (int k = 0; k <= 5; ++k) EXPECT_EQ(asi_discrepancy(s, k, 2, 2000, 9), 0.0);
  const DerivProxyDiameter p(fixture::periodic_quarter_ninth(12));
  for (int k = 0; k <= 5; ++k) EXPECT_EQ(asi_discrepancy(p, k, 2, 2000, 9), 0.0);
}

TEST(Asi, QuadraticDiametersDecayAndMatchEnumeration) {
  const DerivProxyDiameter s(fixture::quadratic(8));
  double prev = 1e300;
  for (int k = 1; k <= 4; ++k) {
    const double sampled = asi_discrepancy(s, k, 1, 20000, 4);
    const double brute = oracle::brute_asi(s, k, 1);
    EXPECT_LE(sampled, brute * (1.0 + 1e-12));
    EXPECT_GE(sampled, 0.8 * brute);
    EXPECT_LT(brute, prev);
    EXPECT_GT(brute, 0.0);
    prev = brute;
  }
}

TEST(Asi, DeterministicInSeed) {
  const DerivProxyDiameter s(fixture::quadratic(10));
  EXPECT_EQ(asi_discrepancy(s, 2, 2, 500, 17), asi_discrepancy(s, 2, 2, 500, 17));
  EXPECT_THROW(asi_discrepancy(s, 9, 1, 10, 1), Error);
}

TEST(AsiFit, PlantedGeometricDecay) {
  std::vector<AsiRow> rows;
  for (int k = 1; k <= 6; ++k) rows.push_back({k, 0.5 * std::pow(0.8, k), 100, 0.0, false});
  const AsiFit fit = fit_geometric_decay(rows);
  EXPECT_FALSE(fit.degenerate);
  EXPECT_NEAR(fit.C, 0.5, 1e-6);
  EXPECT_NEAR(fit.q, 0.8, 1e-6);
  EXPECT_NEAR(fit.residual, 0.0, 1e-9);
}

TEST(AsiFit, GrowthIsDegenerate) {
  std::vector<AsiRow> rows;
  for (int k = 1; k <= 4; ++k) rows.push_back({k, 0.1 * std::pow(1.5, k), 100, 0.0, false});
  EXPECT_TRUE(fit_geometric_decay(rows).degenerate);
  EXPECT_TRUE(fit_geometric_decay({}).degenerate);
}

TEST(AsiReport, CsvAndJson) {
  const DerivProxyDiameter s(fixture::quadratic(10));
  const AsiReport rep = asi_report(s, {1, 2, 3}, 1, 2000, 5, "diam");
  ASSERT_EQ(rep.rows.size(), 3u);
  const auto dir = oracle::tmp_dir("asi_csv");
  write_asi_csv(rep, dir / "asi.csv");
  std::ifstream in(dir / "asi.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "k,beta_hat,samples");
  const auto j = asi_summary_json(rep);
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_TRUE(j.contains("fit"));
}

TEST(Alpha, BernoulliEntropyFunctionalIsFlat) {
  auto mu = std::make_shared<BernoulliMeasure>(Alphabet::uniform(2, 10), std::vector<std::vector<double>>{{0.6, 0.4}});
  const Reciprocal s(mu);
  const auto r = alpha_diagnostic(*mu, s, 4, 3);
  EXPECT_NEAR(r.alpha, 0.0, 1e-13);
  EXPECT_EQ(r.g.size(), 4u);
  EXPECT_EQ(r.g[3].size(), 8u);
}

TEST(Alpha, SimilarityUniformIsFlat) {
  const SystemSpec sys = fixture::asymmetric(10);
  const UniformMeasure mu(sys.alphabet());
  const DerivProxyDiameter s(sys);
  EXPECT_NEAR(alpha_diagnostic(mu, s, 4, 3).alpha, 0.0, 1e-13);
}

TEST(Alpha, SymmetricHarmonicWithinError) {
  WalkerConfig cfg;
  cfg.walkers = 40000;
  cfg.seed = 12;
  const MeasureEstimate est = estimate_direct(fixture::symmetric(), 0, 7, 3, cfg);
  auto mu = std::make_shared<EstimatedMeasure>(est);
  const Reciprocal s(mu);
  const int n = 2;
  const auto r = alpha_diagnostic(*mu, s, n, 1);
  const double se0 = conditional_entropy_stderr(est, Word(0, {0}), n);
  const double se1 = conditional_entropy_stderr(est, Word(0, {1}), n);
  EXPECT_LE(r.alpha, 3.0 * std::hypot(se0, se1));
}

TEST(Witness, SquareRootIndex) {
  EXPECT_EQ(CompatibilityWitness::p(1), 1);
  EXPECT_EQ(CompatibilityWitness::p(15), 3);
  EXPECT_EQ(CompatibilityWitness::p(16), 4);
  for (int n = 1; n < 5000; ++n) {
    const int p = CompatibilityWitness::p(n);
    ASSERT_LE(p, n);
    ASSERT_LE(p * p, n);
    ASSERT_GT((p + 1) * (p + 1), n);
  }
}

TEST(Witness, LinearGrowthWithGeometricDecayIsCompatible) {
  const auto w = CompatibilityWitness::linear(2.0);
  const auto beta = [](int n) { return 0.5 * std::pow(0.8, n); };
  EXPECT_TRUE(w.converging(4000, beta));
  const auto r = w.ratios(100, beta);
  EXPECT_EQ(r.size(), 100u);
  EXPECT_NEAR(r[15], std::max(2.0 * 4, 2.0 * 16 * 0.5 * std::pow(0.8, 4)) / 16, 1e-12);
}

TEST(Witness, QuadraticGrowthIsNot) {
  std::vector<double> g;
  for (int n = 0; n <= 400; ++n) g.push_back(static_cast<double>(n) * n);
  const auto w = CompatibilityWitness::custom(g);
  EXPECT_FALSE(w.converging(400, [](int) { return 1.0; }));
}

TEST(SampleWords, FollowConditionals) {
  const BernoulliMeasure mu(Alphabet::uniform(2, 10), {{0.6, 0.4}});
  const auto words = sample_words(mu, 10, 5000, 3);
  double zeros = 0.0;
  for (const auto& w : words) {
    for (int a : w.branches) zeros += a == 0;
  }
  const double p = zeros / 50000.0;
  EXPECT_NEAR(p, 0.6, 4.0 * std::sqrt(0.24 / 50000.0));
  EXPECT_EQ(sample_words(mu, 10, 10, 3), sample_words(mu, 10, 10, 3));
}

TEST(DenseTable, CsvRoundTrip) {
  std::mt19937_64 rng(4);
  const Alphabet al({2, 3, 2, 3});
  const DenseTable t = random_measure(rng, al, 4);
  const auto dir = oracle::tmp_dir("dense_csv");
  write_dense_table_csv(t, dir / "t.csv");
  const DenseTable back = read_dense_table_csv(dir / "t.csv", true);
  EXPECT_EQ(back.levels(), t.levels());
  EXPECT_TRUE(back.is_measure());
}

TEST(DenseTable, FromLeavesSumsChildren) {
  const Alphabet al({2, 3});
  const DenseTable t = DenseTable::from_leaves(al, 0, 2, {1, 2, 3, 4, 5, 6}, false);
  EXPECT_NEAR(std::exp(t.log_value(Word(0, {0}))), 6.0, 1e-14);
  EXPECT_NEAR(std::exp(t.log_value(Word(0, {1}))), 15.0, 1e-14);
  EXPECT_NEAR(std::exp(t.log_value(Word())), 21.0, 1e-14);
}

// ---------------------------------------------------------------------------
// Properties over random functionals

TEST(Properties, Cocycle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Alphabet al = random_alphabet(rng, 7);
    const DenseTable nu = random_functional(rng, al, 7);
    std::uniform_int_distribution<int> len(0, 2);
    const Word x = fixture::random_word(rng, al, 0, len(rng));
    const Word y = fixture::random_word(rng, al, x.end(), len(rng));
    const Word z = fixture::random_word(rng, al, y.end(), len(rng));
    const double lhs = relative(nu, x, concat(y, z));
    const double rhs = relative(nu, x, y) * relative(nu, concat(x, y), z);
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-12);
  }
}

TEST(Properties, Telescoping) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    const Alphabet al = random_alphabet(rng, 7);
    const DenseTable nu = random_measure(rng, al, 7);
    const DenseTable s = random_functional(rng, al, 7);
    std::uniform_int_distribution<int> pick(0, 2);
    const Word x = fixture::random_word(rng, al, 0, pick(rng));
    const int n = 1 + pick(rng);
    const int p = 1 + pick(rng) % 2;
    const double lhs = log_bracket(nu, s, n + p, x);
    double tail = 0.0;
    for_each_word(al, x.end(), n, [&](const Word& y) {
      tail += relative(nu, x, y) * log_bracket(nu, s, p, concat(x, y));
    });
    const double rhs = log_bracket(nu, s, n, x) + tail;
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Properties, JensenHoldsOnRandomPairs) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 2000; ++trial) {
    const Alphabet al = random_alphabet(rng, 4);
    const DenseTable nu = random_functional(rng, al, 4);
    const DenseTable nup = random_functional(rng, al, 4);
    const int n = 1 + static_cast<int>(rng() % 4);
    const auto r = jensen_check(nu, nup, n);
    ASSERT_TRUE(r.holds) << r.lhs << " " << r.rhs;
    ASSERT_FALSE(r.equality);
  }
}

TEST(Properties, DcalTriangle) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    const Alphabet al = random_alphabet(rng, 5);
    const DenseTable a = random_functional(rng, al, 5);
    const DenseTable b = random_functional(rng, al, 5);
    const DenseTable c = random_functional(rng, al, 5);
    const double ab = dcal_distance(a, b, 3).value;
    EXPECT_EQ(ab, dcal_distance(b, a, 3).value);
    EXPECT_LE(dcal_distance(a, c, 3).value, ab + dcal_distance(b, c, 3).value + 1e-12);
  }
}

TEST(Properties, MeasuresNormalize) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    const Alphabet al = random_alphabet(rng, 6);
    const DenseTable nu = random_measure(rng, al, 6);
    const BernoulliMeasure b(Alphabet::uniform(2, 6), {{0.2, 0.8}, {0.5, 0.5}});
    const UniformMeasure u(al);
    const Word x = fixture::random_word(rng, al, 0, static_cast<int>(rng() % 3));
    for (int n = 1; n + x.length() <= 6; ++n) {
      EXPECT_NEAR(mass(b, n, Word(0, std::vector<int>(x.branches.size(), 1))), 1.0, 1e-12);
      EXPECT_NEAR(mass(nu, n, x), 1.0, 1e-12);
      EXPECT_NEAR(mass(u, n, x), 1.0, 1e-12);
    }
  }
}
