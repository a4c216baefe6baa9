#include "nacifs/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "nacifs/errors.hpp"
#include "nacifs/harmonic.hpp"
#include "nacifs/perturb.hpp"
#include "nacifs/symbolic.hpp"
#include "nacifs/system_io.hpp"
#include "nacifs/thermo.hpp"

namespace nacifs {
namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

std::string render_manifest(const json& m) {
  std::ostringstream out;
  out << "command:   " << m.value("command", "?") << '\n'
      << "version:   " << m.value("version", "?") << '\n'
      << "seed:      " << m.value("seed", std::uint64_t{0}) << '\n'
      << "wall time: " << m.value("wall_time_s", 0.0) << " s\n";
  if (m.contains("summary")) {
    out << "summary:\n";
    for (const auto& [k, v] : m["summary"].items()) out << "  " << k << ": " << v.dump() << '\n';
  }
  if (m.contains("outputs")) {
    out << "outputs:\n";
    for (const auto& o : m["outputs"]) {
      out << "  " << o.value("file", "?") << "  sha256=" << o.value("sha256", "?") << '\n';
    }
  }
  return out.str();
}

namespace {

struct Globals {
  int threads = 1;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSystem:
    case ErrorKind::IncompatibleSystems:
      return kExitValidation;
    case ErrorKind::WalkerStalled:
    case ErrorKind::DegenerateFactor:
    case ErrorKind::InsufficientDepth:
    case ErrorKind::NonMeasure:
    case ErrorKind::PerturbationInfeasible:
      return kExitEstimation;
    default:
      return kExitConfig;
  }
}

void emit_error(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

class Run {
 public:
  Run(std::string command, const Globals& g) : command_(std::move(command)), g_(g) {
    start_ = std::chrono::steady_clock::now();
    fs::create_directories(g.out_dir);
  }

  fs::path path(const std::string& name) const { return fs::path(g_.out_dir) / name; }
  void add_output(const std::string& name) { outputs_.push_back(name); }
  json& config() { return config_; }
  json& summary() { return summary_; }

  void finish() {
    json m;
    m["command"] = command_;
    m["version"] = kVersion;
    m["seed"] = g_.seed;
    m["config"] = config_;
    m["summary"] = summary_;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["wall_time_s"] = secs;
    m["outputs"] = json::array();
    for (const auto& name : outputs_) {
      m["outputs"].push_back({{"file", name}, {"sha256", sha256_file(path(name))}});
    }
    std::ofstream out(path(command_ + "_manifest.json"));
    if (!out) throw Error(ErrorKind::Io, "cannot write manifest");
    out << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  Globals g_;
  json config_ = json::object();
  json summary_ = json::object();
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  out << j.dump(2) << '\n';
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "not a number list: '" + text + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::Config, "empty number list");
  return out;
}

int cmd_validate(const Globals& g, const std::string& file, int horizon) {
  Run run("validate", g);
  const SystemSpec sys = load_system(file, false);
  const int h = horizon > 0 ? std::min(horizon, sys.horizon()) : sys.horizon();
  run.config() = {{"system", system_to_json(sys)}, {"horizon", h}};
  std::ofstream csv(run.path("validation.csv"));
  csv << "generation,degree,degree_ok,bc,osc,ac,bc_margin,osc_margin,ac_margin\n"
      << std::setprecision(17);
  bool all = true;
  for (int n = 0; n < h; ++n) {
    const GenerationSpec& gen = sys.generation(n);
    ValidationReport rep = validate_generation(gen, sys.domain(), sys.degree_cap());
    rep.generation = n;
    all = all && rep.passed();
    csv << n << ',' << gen.degree() << ',' << rep.degree_ok << ',' << rep.bc << ',' << rep.osc
        << ',' << rep.ac << ',' << rep.bc_margin << ',' << rep.osc_margin << ','
        << rep.ac_margin << '\n';
    for (const auto& msg : rep.messages) std::cout << "generation " << n << ": " << msg << '\n';
  }
  csv.close();
  run.add_output("validation.csv");
  run.summary() = {{"generations", h}, {"all_pass", all}};
  run.finish();
  std::cout << (all ? "all generations pass" : "validation failed") << " (" << h
            << " generations)\n";
  if (!all) {
    emit_error(to_string(ErrorKind::InvalidSystem), "validation failed; see validation.csv");
    return kExitValidation;
  }
  return kExitOk;
}

struct MeasureOpts {
  int offset = 0;
  int depth = 6;
  int assign = 2;
  std::int64_t walkers = 100000;
  bool endpoints = false;
};

int cmd_measure(const Globals& g, const std::string& file, const MeasureOpts& o) {
  Run run("measure", g);
  const SystemSpec sys = load_system(file);
  WalkerConfig cfg;
  cfg.walkers = o.walkers;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.record_endpoints = o.endpoints;
  run.config() = {{"system", system_to_json(sys)}, {"offset", o.offset}, {"depth", o.depth},
                  {"assign", o.assign},            {"walker", to_json(cfg)}};
  const MeasureEstimate est = estimate_direct(sys, o.offset, o.depth, o.assign, cfg);
  write_measure_csv(est, run.path("measure.csv"));
  run.add_output("measure.csv");
  if (o.endpoints) {
    std::ofstream ep(run.path("endpoints.csv"));
    ep << "walker,word\n";
    const auto words = endpoint_words(est);
    for (std::size_t i = 0; i < words.size(); ++i) ep << i << ',' << words[i].label() << '\n';
    ep.close();
    run.add_output("endpoints.csv");
  }
  run.summary() = {{"total", est.total}, {"total_steps", est.total_steps}};
  run.finish();
  std::cout << "walkers " << est.total << ", steps " << est.total_steps << '\n';
  return kExitOk;
}

struct DimsOpts {
  std::string measure = "uniform";
  int nmin = 1;
  int nmax = 12;
  int window = 4;
  std::string diam = "deriv";
  std::int64_t walkers = 100000;
  int extra = 4;
};

int cmd_dims(const Globals& g, const std::string& file, const DimsOpts& o) {
  Run run("dims", g);
  const SystemSpec sys = load_system(file);
  if (o.nmax > sys.horizon()) {
    throw Error(ErrorKind::Config, "nmax exceeds the system horizon");
  }
  run.config() = {{"system", system_to_json(sys)}, {"measure", o.measure}, {"nmin", o.nmin},
                  {"nmax", o.nmax},                {"window", o.window},   {"diam", o.diam}};
  const Alphabet alphabet = sys.alphabet();
  std::unique_ptr<Functional> mu;
  if (o.measure == "uniform") {
    mu = std::make_unique<UniformMeasure>(alphabet);
  } else if (o.measure.rfind("bernoulli:", 0) == 0) {
    mu = std::make_unique<BernoulliMeasure>(
        alphabet, std::vector<std::vector<double>>{parse_list(o.measure.substr(10))});
  } else if (o.measure == "harmonic") {
    WalkerConfig cfg;
    cfg.walkers = o.walkers;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    run.config()["walker"] = to_json(cfg);
    run.config()["approx_depth"] = o.nmax + o.extra;
    mu = std::make_unique<EstimatedMeasure>(
        estimate_direct(sys, 0, o.nmax + o.extra, o.nmax, cfg));
  } else {
    throw Error(ErrorKind::Config, "unknown measure '" + o.measure + "'");
  }
  std::unique_ptr<Functional> diam;
  if (o.diam == "deriv") {
    diam = std::make_unique<DerivProxyDiameter>(sys);
  } else if (o.diam == "sample") {
    diam = std::make_unique<SampleImageDiameter>(sys);
  } else {
    throw Error(ErrorKind::Config, "unknown diameter method '" + o.diam + "'");
  }
  const DimensionReport rep = dimension_report(*mu, *diam, o.nmin, o.nmax, o.window);
  write_dimension_csv(rep, run.path("dims.csv"));
  write_json(run.path("dims.json"), dimension_summary_json(rep));
  run.add_output("dims.csv");
  run.add_output("dims.json");
  run.summary() = dimension_summary_json(rep);
  run.finish();
  std::cout << std::setprecision(10) << "hd " << rep.hd_estimate << " +- " << rep.hd_stderr
            << ", pd " << rep.pd_estimate << " +- " << rep.pd_stderr << " (window "
            << rep.window << ")\n";
  return kExitOk;
}

struct AsiOpts {
  std::string functional = "diam";
  int kmax = 3;
  int tail = 1;
  int budget = 20000;
  std::int64_t walkers = 100000;
};

int cmd_asi(const Globals& g, const std::string& file, const AsiOpts& o) {
  Run run("asi", g);
  const SystemSpec sys = load_system(file);
  std::vector<int> ks;
  for (int k = 1; k <= o.kmax; ++k) ks.push_back(k);
  run.config() = {{"system", system_to_json(sys)}, {"functional", o.functional},
                  {"kmax", o.kmax},                {"tail", o.tail}};
  AsiReport rep;
  if (o.functional == "diam") {
    run.config()["budget"] = o.budget;
    rep = asi_report(DerivProxyDiameter(sys), ks, o.tail, o.budget, g.seed, "diam");
  } else if (o.functional == "harmonic") {
    WalkerConfig cfg;
    cfg.walkers = o.walkers;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    run.config()["walker"] = to_json(cfg);
    HarmonicAsiOptions opts;
    opts.tail = o.tail;
    rep = asi_report_harmonic(sys, ks, cfg, opts);
  } else {
    throw Error(ErrorKind::Config, "unknown functional '" + o.functional + "'");
  }
  write_asi_csv(rep, run.path("asi.csv"));
  write_json(run.path("asi.json"), asi_summary_json(rep));
  run.add_output("asi.csv");
  run.add_output("asi.json");
  run.summary() = asi_summary_json(rep);
  run.finish();
  for (const auto& r : rep.rows) {
    std::cout << "k=" << r.k << " beta=" << r.beta_hat << (r.noise_limited ? " (noise-limited)" : "")
              << '\n';
  }
  return kExitOk;
}

struct PerturbOpts {
  std::string mode = "translate_b";
  std::string epsilons = "0.1,0.05,0.01";
  std::int64_t walkers = 100000;
  int depth = 8;
  int assign = 4;
  int window = 2;
  bool isolated = false;
};

int cmd_perturb(const Globals& g, const std::string& file, const PerturbOpts& o) {
  Run run("perturb", g);
  const SystemSpec sys = load_system(file);
  ContinuityConfig cfg;
  cfg.mode = parse_perturb_mode(o.mode);
  cfg.plan_seed = derive_seed(g.seed, "plan");
  cfg.walker.walkers = o.walkers;
  cfg.walker.seed = g.seed;
  cfg.walker.threads = g.threads;
  cfg.approx_depth = o.depth;
  cfg.assign_depth = o.assign;
  cfg.window = o.window;
  cfg.common_random_numbers = !o.isolated;
  const std::vector<double> eps = parse_list(o.epsilons);
  const ContinuityTable table = continuity_experiment(sys, eps, cfg);
  write_continuity_csv(table, run.path("continuity.csv"));
  const json summary = continuity_json(table, cfg, eps);
  write_json(run.path("continuity.json"), summary);
  run.add_output("continuity.csv");
  run.add_output("continuity.json");
  run.config() = {{"system", system_to_json(sys)}, {"epsilons", eps}};
  run.summary() = summary;
  run.finish();
  std::cout << "rows " << table.rows.size() << ", alpha " << table.alpha << ", log-log slope "
            << table.loglog_slope << '\n';
  return kExitOk;
}

int cmd_report(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("manifest is not JSON: ") + e.what());
  }
  std::cout << render_manifest(m);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Numerical laboratory for non-autonomous conformal iterated function systems"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "directory for outputs");
  app.add_option("--seed", g.seed, "master seed");

  std::string file;
  int horizon = 0;
  auto* validate = app.add_subcommand("validate", "validate every generation up to the horizon");
  validate->add_option("system", file)->required();
  validate->add_option("--horizon", horizon);

  MeasureOpts mo;
  auto* measure = app.add_subcommand("measure", "direct harmonic measure estimate");
  measure->add_option("system", file)->required();
  measure->add_option("--offset", mo.offset);
  measure->add_option("--depth", mo.depth, "disk approximation depth");
  measure->add_option("--assign", mo.assign, "assignment depth");
  measure->add_option("--walkers", mo.walkers);
  measure->add_flag("--endpoints", mo.endpoints, "also write per-walker cylinders");

  DimsOpts dopt;
  auto* dims = app.add_subcommand("dims", "entropy, Lyapunov exponent and dimension proxies");
  dims->add_option("system", file)->required();
  dims->add_option("--measure", dopt.measure, "harmonic | uniform | bernoulli:<p0,p1,...>");
  dims->add_option("--nmin", dopt.nmin);
  dims->add_option("--nmax", dopt.nmax);
  dims->add_option("--window", dopt.window);
  dims->add_option("--diam", dopt.diam, "deriv | sample");
  dims->add_option("--walkers", dopt.walkers);
  dims->add_option("--extra-depth", dopt.extra, "approximation depth minus nmax");

  AsiOpts ao;
  auto* asi = app.add_subcommand("asi", "sibling-invariance discrepancies");
  asi->add_option("system", file)->required();
  asi->add_option("--functional", ao.functional, "diam | harmonic");
  asi->add_option("--kmax", ao.kmax);
  asi->add_option("--tail", ao.tail);
  asi->add_option("--budget", ao.budget, "sampled quadruples per k (diam)");
  asi->add_option("--walkers", ao.walkers);

  PerturbOpts po;
  auto* perturb = app.add_subcommand("perturb", "continuity experiment");
  perturb->add_option("system", file)->required();
  perturb->add_option("--mode", po.mode, "translate_b | scale_a | jiggle_c");
  perturb->add_option("--epsilons", po.epsilons, "comma separated");
  perturb->add_option("--walkers", po.walkers);
  perturb->add_option("--depth", po.depth);
  perturb->add_option("--assign", po.assign);
  perturb->add_option("--window", po.window);
  perturb->add_flag("--isolated-streams", po.isolated, "independent walker seed per row");

  auto* report = app.add_subcommand("report", "summarize a run manifest");
  report->add_option("manifest", file)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("ConfigError", e.what());
    return kExitConfig;
  }

  try {
    if (*validate) return cmd_validate(g, file, horizon);
    if (*measure) return cmd_measure(g, file, mo);
    if (*dims) return cmd_dims(g, file, dopt);
    if (*asi) return cmd_asi(g, file, ao);
    if (*perturb) return cmd_perturb(g, file, po);
    if (*report) return cmd_report(file);
  } catch (const Error& e) {
    emit_error(to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    emit_error("IoError", e.what());
    return kExitConfig;
  } catch (const json::exception& e) {
    emit_error("ConfigError", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"nacifs"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace nacifs
