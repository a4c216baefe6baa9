#include "nacifs/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <Eigen/Dense>

#include "nacifs/errors.hpp"
#include "nacifs/summation.hpp"

namespace nacifs {

PressureRecord pressure_record(const Functional& mu, const Functional& diam, int n) {
  if (n < 1) throw Error(ErrorKind::DomainError, "pressure needs n >= 1");
  if (n > mu.depth() || n > diam.depth()) {
    throw Error(ErrorKind::OutOfRange, "depth " + std::to_string(n) + " not covered");
  }
  const auto* estimated = dynamic_cast<const EstimatedMeasure*>(&mu);

  CompensatedSum mass, plogp, plogs, plogp2, plogs2, plogpps;
  std::size_t empty = 0;
  std::size_t cells = 0;
  for_each_word(mu.alphabet(), mu.offset(), n, [&](const Word& x) {
    ++cells;
    const double lp = mu.log_value(x);
    if (lp == -std::numeric_limits<double>::infinity()) {
      ++empty;
      return;
    }
    const double p = std::exp(lp);
    const double ls = diam.log_value(x);
    mass += p;
    plogp += p * lp;
    plogs += p * ls;
    plogp2 += p * lp * lp;
    plogs2 += p * ls * ls;
    plogpps += p * lp * ls;
  });
  if (std::abs(mass.value() - 1.0) > 1e-9) {
    throw Error(ErrorKind::NonMeasure, "mass at depth " + std::to_string(n) + " is " +
                                           std::to_string(mass.value()));
  }

  PressureRecord rec;
  rec.n = n;
  rec.H = -plogp.value() / n;
  rec.chi = -plogs.value() / n;
  rec.t = rec.H / rec.chi;
  if (estimated != nullptr) {
    rec.estimated = true;
    rec.coverage_deficit = static_cast<double>(empty) / static_cast<double>(cells);
    const double total = static_cast<double>(estimated->estimate().total);
    const double scale = total * n * n;
    const double var_h = std::max(plogp2.value() - plogp.value() * plogp.value(), 0.0) / scale;
    const double var_c = std::max(plogs2.value() - plogs.value() * plogs.value(), 0.0) / scale;
    const double cov = (plogpps.value() - plogp.value() * plogs.value()) / scale;
    rec.H_stderr = std::sqrt(var_h);
    rec.chi_stderr = std::sqrt(var_c);
    const double var_t = (var_h - 2.0 * rec.t * cov + rec.t * rec.t * var_c) / (rec.chi * rec.chi);
    rec.t_stderr = std::sqrt(std::max(var_t, 0.0));
  }
  return rec;
}

DimensionReport dimension_report(const Functional& mu, const Functional& diam, int n_min,
                                 int n_max, int window) {
  if (n_min < 1 || n_max < n_min) throw Error(ErrorKind::DomainError, "bad n range");
  if (window < 1) throw Error(ErrorKind::DomainError, "window must be positive");
  DimensionReport rep;
  for (int n = n_min; n <= n_max; ++n) rep.records.push_back(pressure_record(mu, diam, n));
  rep.window = std::min<int>(window, static_cast<int>(rep.records.size()));

  const auto first = rep.records.end() - rep.window;
  const auto lo = std::min_element(first, rep.records.end(),
                                   [](const auto& a, const auto& b) { return a.t < b.t; });
  const auto hi = std::max_element(first, rep.records.end(),
                                   [](const auto& a, const auto& b) { return a.t < b.t; });
  rep.hd_estimate = lo->t;
  rep.hd_stderr = lo->t_stderr;
  rep.pd_estimate = hi->t;
  rep.pd_stderr = hi->t_stderr;

  if (rep.records.size() >= 2) {
    const auto m = static_cast<Eigen::Index>(rep.records.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& r = rep.records[static_cast<std::size_t>(i)];
      design(i, 0) = 1.0;
      design(i, 1) = 1.0 / r.n;
      rhs(i) = r.t;
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
    rep.trend_intercept = coef(0);
    rep.trend_slope = coef(1);
  } else {
    rep.trend_intercept = rep.records.front().t;
  }
  return rep;
}

std::vector<PointwiseSample> pointwise_samples(const Functional& mu, const Functional& diam,
                                               const std::vector<Word>& words, int n) {
  if (n < 1) throw Error(ErrorKind::DomainError, "pointwise samples need n >= 1");
  std::vector<PointwiseSample> out;
  out.reserve(words.size());
  for (const Word& w : words) {
    if (w.length() < n) throw Error(ErrorKind::OutOfRange, "sample word shorter than n");
    const Word x = w.prefix(n);
    PointwiseSample s;
    s.h = -mu.log_value(x) / n;
    s.chi = -diam.log_value(x) / n;
    s.ratio = s.h / s.chi;
    out.push_back(s);
  }
  return out;
}

std::vector<Word> endpoint_words(const MeasureEstimate& est) {
  std::vector<Word> out;
  out.reserve(est.endpoints.size());
  for (std::uint32_t e : est.endpoints) {
    out.push_back(word_at(est.alphabet, est.offset, est.assign_depth, e));
  }
  return out;
}

void write_dimension_csv(const DimensionReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "n,H,chi,t,H_stderr,chi_stderr,t_stderr,coverage_deficit\n" << std::setprecision(17);
  for (const auto& r : report.records) {
    out << r.n << ',' << r.H << ',' << r.chi << ',' << r.t << ',' << r.H_stderr << ','
        << r.chi_stderr << ',' << r.t_stderr << ',' << r.coverage_deficit << '\n';
  }
}

nlohmann::json dimension_summary_json(const DimensionReport& report) {
  return {{"n_min", report.records.front().n},
          {"n_max", report.records.back().n},
          {"window", report.window},
          {"hd_estimate", report.hd_estimate},
          {"hd_stderr", report.hd_stderr},
          {"pd_estimate", report.pd_estimate},
          {"pd_stderr", report.pd_stderr},
          {"trend_slope", report.trend_slope},
          {"trend_intercept", report.trend_intercept}};
}

}  // namespace nacifs
