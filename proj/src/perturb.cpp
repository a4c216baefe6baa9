#include "nacifs/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>

#include <Eigen/Dense>

#include "nacifs/errors.hpp"
#include "nacifs/rng.hpp"
#include "nacifs/symbolic.hpp"
#include "nacifs/thermo.hpp"

namespace nacifs {

double alpha_exponent(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorKind::DomainError, "eta must lie in (0, 1)");
  return std::log(1.0 - eta) / std::log(eta * (1.0 - eta));
}

std::string to_string(PerturbMode mode) {
  switch (mode) {
    case PerturbMode::TranslateB: return "translate_b";
    case PerturbMode::ScaleA: return "scale_a";
    case PerturbMode::JiggleC: return "jiggle_c";
  }
  return "unknown";
}

PerturbMode parse_perturb_mode(const std::string& name) {
  if (name == "translate_b" || name == "TranslateB") return PerturbMode::TranslateB;
  if (name == "scale_a" || name == "ScaleA") return PerturbMode::ScaleA;
  if (name == "jiggle_c" || name == "JiggleC") return PerturbMode::JiggleC;
  throw Error(ErrorKind::Config, "unknown perturbation mode '" + name + "'");
}

namespace {

ConformalMap move_map(const ConformalMap& m, PerturbMode mode, double eps, double theta,
                      double kappa) {
  ConformalMap out = m;
  if (eps == 0.0) return out;
  switch (mode) {
    case PerturbMode::TranslateB:
      out.b += std::polar(eps, theta);
      break;
    case PerturbMode::ScaleA:
      out.a *= 1.0 + eps;
      break;
    case PerturbMode::JiggleC:
      out.kind = MapKind::Quadratic;
      out.c += std::polar(eps * kappa, theta);
      break;
  }
  return out;
}

/// Branches of `gen` breaking validation on their own, in pairs, or against
/// the base generation.
std::set<int> implicated_maps(const GenerationSpec& base, const GenerationSpec& gen,
                              const DomainSpec& domain) {
  std::set<int> bad;
  const double eta = domain.eta;
  const double rv = domain.v_factor();
  const int d = gen.degree();
  for (int i = 0; i < d; ++i) {
    const ConformalMap& m = gen.maps[static_cast<std::size_t>(i)];
    const auto [lo, hi] = m.derivative_range(rv);
    const bool bc = lo > eta && hi < 1.0 - eta &&
                    (m.kind == MapKind::Similarity || 2.0 * std::abs(m.c) * rv < std::abs(m.a));
    const bool ac = std::abs(m.b) + m.enclosure_radius(rv) <= 1.0 - eta;
    if (!bc || !ac) bad.insert(i);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const ConformalMap& mi = gen.maps[static_cast<std::size_t>(i)];
      const ConformalMap& bj = base.maps[static_cast<std::size_t>(j)];
      const bool meet = std::abs(mi.b - bj.b) <= mi.enclosure_radius(rv) + bj.enclosure_radius(rv);
      if (meet != (i == j)) bad.insert(i);
      if (j > i) {
        const ConformalMap& mj = gen.maps[static_cast<std::size_t>(j)];
        if (!(std::abs(mi.b - mj.b) > mi.enclosure_radius(rv) + mj.enclosure_radius(rv))) {
          bad.insert(i);
          bad.insert(j);
        }
      }
    }
  }
  return bad;
}

}  // namespace

PerturbationResult perturb_with_report(const SystemSpec& base, const PerturbationPlan& plan) {
  if (!(plan.epsilon >= 0.0)) throw Error(ErrorKind::DomainError, "epsilon must be non-negative");
  const int horizon = plan.horizon.value_or(base.horizon());
  if (horizon < 1 || horizon > base.horizon()) {
    throw Error(ErrorKind::OutOfRange, "perturbation horizon outside the base horizon");
  }
  const DomainSpec& domain = base.domain();
  int shrinks = 0;
  double applied_max = 0.0;
  std::vector<GenerationSpec> gens;
  gens.reserve(static_cast<std::size_t>(horizon));
  for (int g = 0; g < horizon; ++g) {
    const GenerationSpec& bg = base.generation(g);
    const int d = bg.degree();
    std::vector<double> eps(static_cast<std::size_t>(d), plan.epsilon);
    std::vector<double> theta(static_cast<std::size_t>(d), 0.0);
    RandomStream dir(derive_seed(plan.seed, "direction", static_cast<std::uint64_t>(g)), 0);
    for (auto& t : theta) t = dir.angle();

    GenerationSpec out;
    for (int attempt = 0;; ++attempt) {
      out.maps.clear();
      for (int i = 0; i < d; ++i) {
        out.maps.push_back(move_map(bg.maps[static_cast<std::size_t>(i)], plan.mode,
                                    eps[static_cast<std::size_t>(i)],
                                    theta[static_cast<std::size_t>(i)], plan.kappa));
      }
      std::set<int> bad = implicated_maps(bg, out, domain);
      if (bad.empty() && !validate_generation(out, domain, base.degree_cap()).passed()) {
        for (int i = 0; i < d; ++i) bad.insert(i);
      }
      if (bad.empty()) break;
      if (attempt == plan.max_shrinks) {
        throw Error(ErrorKind::PerturbationInfeasible,
                    "generation " + std::to_string(g) + " still invalid after " +
                        std::to_string(plan.max_shrinks) + " shrinks");
      }
      for (int i : bad) {
        eps[static_cast<std::size_t>(i)] *= plan.shrink;
        ++shrinks;
      }
    }
    applied_max = std::max(applied_max, *std::max_element(eps.begin(), eps.end()));
    gens.push_back(std::move(out));
  }
  SystemSpec sys(domain, SystemMode::Explicit, std::move(gens), {}, horizon, base.degree_cap());
  return {std::move(sys), shrinks, applied_max};
}

SystemSpec perturb_system(const SystemSpec& base, const PerturbationPlan& plan) {
  return perturb_with_report(base, plan).system;
}

double dcal_sigma(const MeasureEstimate& a, const MeasureEstimate& b, int horizon) {
  double sup = 0.0;
  for (int l = 0; l <= horizon; ++l) {
    for_each_word(a.alphabet, a.offset, l, [&](const Word& x) {
      const int d = a.alphabet.degree(x.end());
      const auto ax = static_cast<double>(a.count(x));
      const auto bx = static_cast<double>(b.count(x));
      for (int k = 0; k < d; ++k) {
        const Word xa = concat(x, Word(x.end(), {k}));
        const auto axa = static_cast<double>(a.count(xa));
        const auto bxa = static_cast<double>(b.count(xa));
        if (axa == 0.0 || bxa == 0.0) {
          sup = std::numeric_limits<double>::infinity();
          continue;
        }
        sup = std::max(sup, std::sqrt((1.0 / axa - 1.0 / ax) + (1.0 / bxa - 1.0 / bx)));
      }
    });
  }
  return sup;
}

namespace {

std::unique_ptr<Functional> diameter_functional(const SystemSpec& sys, const ContinuityConfig& cfg) {
  if (cfg.diam_method == DiameterMethod::DerivProxy) {
    return std::make_unique<DerivProxyDiameter>(sys);
  }
  return std::make_unique<SampleImageDiameter>(sys, cfg.sample_depth);
}

}  // namespace

ContinuityTable continuity_experiment(const SystemSpec& base, const std::vector<double>& epsilons,
                                      const ContinuityConfig& cfg) {
  if (cfg.assign_depth < cfg.dcal_horizon + 1) {
    throw Error(ErrorKind::Config, "assign_depth must exceed dcal_horizon");
  }
  ContinuityTable table;
  table.alpha = alpha_exponent(base.domain().eta);

  auto row_cfg = [&](std::size_t row) {
    WalkerConfig w = cfg.walker;
    w.record_endpoints = false;
    if (!cfg.common_random_numbers) w.seed = derive_seed(cfg.walker.seed, "row", row);
    return w;
  };

  const MeasureEstimate base_est =
      estimate_direct(base, 0, cfg.approx_depth, cfg.assign_depth, row_cfg(0));
  const EstimatedMeasure base_mu(base_est);
  const DerivProxyDiameter base_s(base);
  const DimensionReport base_dims =
      dimension_report(base_mu, base_s, 1, cfg.assign_depth, cfg.window);
  table.base_hd = base_dims.hd_estimate;
  table.base_hd_err = base_dims.hd_stderr;
  table.base_pd = base_dims.pd_estimate;
  table.base_pd_err = base_dims.pd_stderr;
  const auto base_diam = diameter_functional(base, cfg);

  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    PerturbationPlan plan;
    plan.epsilon = epsilons[i];
    plan.mode = cfg.mode;
    plan.seed = cfg.plan_seed;
    plan.horizon = base.horizon();
    const PerturbationResult pert = perturb_with_report(base, plan);
    const SystemSpec& sys = pert.system;

    ContinuityRow row;
    row.epsilon = epsilons[i];
    row.shrinks = pert.shrinks;
    row.d_hat = system_distance(base, sys, base.horizon());
    const auto diam = diameter_functional(sys, cfg);
    row.dcal_diam = dcal_distance(*base_diam, *diam, cfg.diam_horizon).value;

    const MeasureEstimate est =
        estimate_direct(sys, 0, cfg.approx_depth, cfg.assign_depth, row_cfg(i + 1));
    const EstimatedMeasure mu(est);
    row.dcal_omega = dcal_distance(base_mu, mu, cfg.dcal_horizon).value;
    row.dcal_omega_sigma = dcal_sigma(base_est, est, cfg.dcal_horizon);

    const DerivProxyDiameter s(sys);
    const DimensionReport dims = dimension_report(mu, s, 1, cfg.assign_depth, cfg.window);
    row.hd_omega = dims.hd_estimate;
    row.hd_err = dims.hd_stderr;
    row.pd_omega = dims.pd_estimate;
    row.pd_err = dims.pd_stderr;
    row.hd_delta = std::abs(row.hd_omega - table.base_hd);
    row.hd_delta_err = std::hypot(row.hd_err, table.base_hd_err);
    table.rows.push_back(row);
  }

  std::vector<double> xs, ys;
  const ContinuityRow* largest = nullptr;
  for (const auto& r : table.rows) {
    if (r.d_hat > 0.0 && r.dcal_diam > 0.0) {
      xs.push_back(std::log(r.d_hat));
      ys.push_back(std::log(r.dcal_diam));
    }
    if (largest == nullptr || r.epsilon > largest->epsilon) largest = &r;
  }
  table.loglog_points = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    const auto m = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      design(k, 0) = 1.0;
      design(k, 1) = xs[static_cast<std::size_t>(k)];
      rhs(k) = ys[static_cast<std::size_t>(k)];
    }
    table.loglog_slope = design.colPivHouseholderQr().solve(rhs)(1);
  }
  if (largest != nullptr && largest->d_hat > 0.0) {
    table.C_hat = largest->dcal_diam / std::pow(largest->d_hat, table.alpha);
  }
  for (const auto& r : table.rows) {
    const double bound = table.C_hat * std::pow(r.d_hat, table.alpha);
    if (r.dcal_diam > bound * (1.0 + 1e-9) + 1e-300) table.bound_consistent = false;
  }
  return table;
}

void write_continuity_csv(const ContinuityTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "epsilon,shrinks,d_hat,dcal_diam,dcal_omega,dcal_omega_sigma,hd_omega,hd_err,"
         "pd_omega,pd_err,hd_delta,hd_delta_err\n"
      << std::setprecision(17);
  for (const auto& r : table.rows) {
    out << r.epsilon << ',' << r.shrinks << ',' << r.d_hat << ',' << r.dcal_diam << ','
        << r.dcal_omega << ',' << r.dcal_omega_sigma << ',' << r.hd_omega << ',' << r.hd_err
        << ',' << r.pd_omega << ',' << r.pd_err << ',' << r.hd_delta << ',' << r.hd_delta_err
        << '\n';
  }
}

nlohmann::json continuity_json(const ContinuityTable& table, const ContinuityConfig& cfg,
                               const std::vector<double>& epsilons) {
  nlohmann::json plans = nlohmann::json::array();
  for (double e : epsilons) {
    plans.push_back({{"epsilon", e},
                     {"mode", to_string(cfg.mode)},
                     {"seed", cfg.plan_seed},
                     {"shrink", 0.5},
                     {"max_shrinks", 10}});
  }
  return {{"plans", plans},
          {"walker", to_json(cfg.walker)},
          {"approx_depth", cfg.approx_depth},
          {"assign_depth", cfg.assign_depth},
          {"window", cfg.window},
          {"dcal_horizon", cfg.dcal_horizon},
          {"diam_horizon", cfg.diam_horizon},
          {"diam_method", cfg.diam_method == DiameterMethod::DerivProxy ? "deriv_proxy"
                                                                        : "sample_image"},
          {"common_random_numbers", cfg.common_random_numbers},
          {"base_hd", table.base_hd},
          {"base_hd_err", table.base_hd_err},
          {"base_pd", table.base_pd},
          {"base_pd_err", table.base_pd_err},
          {"alpha", table.alpha},
          {"loglog_slope", table.loglog_slope},
          {"loglog_points", table.loglog_points},
          {"C_hat", table.C_hat},
          {"bound_consistent", table.bound_consistent}};
}

}  // namespace nacifs
