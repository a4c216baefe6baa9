#include "nacifs/system_io.hpp"

#include <fstream>
#include <set>

#include "nacifs/errors.hpp"

namespace nacifs {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
    }
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw Error(ErrorKind::Config, where + " must be a number");
  return v.get<double>();
}

Complex complex_from(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) {
    throw Error(ErrorKind::Config, where + " must be [re, im]");
  }
  return {number(v[0], where), number(v[1], where)};
}

ConformalMap map_from(const json& v, const std::string& where) {
  reject_unknown(v, {"kind", "a", "b", "c"}, where);
  if (!v.contains("kind") || !v["kind"].is_string()) {
    throw Error(ErrorKind::Config, where + " needs a string 'kind'");
  }
  const auto kind = v["kind"].get<std::string>();
  if (!v.contains("a") || !v.contains("b")) {
    throw Error(ErrorKind::Config, where + " needs 'a' and 'b'");
  }
  const Complex a = complex_from(v["a"], where + ".a");
  const Complex b = complex_from(v["b"], where + ".b");
  const Complex c = v.contains("c") ? complex_from(v["c"], where + ".c") : Complex{};
  if (kind == "similarity") {
    if (c != Complex{}) throw Error(ErrorKind::Config, where + ": similarity with nonzero c");
    return ConformalMap::similarity(a, b);
  }
  if (kind == "quadratic") return ConformalMap::quadratic(a, b, c);
  throw Error(ErrorKind::Config, where + ": unknown kind '" + kind + "'");
}

std::vector<GenerationSpec> generations_from(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(ErrorKind::Config, where + " must be an array");
  std::vector<GenerationSpec> out;
  for (std::size_t g = 0; g < v.size(); ++g) {
    const std::string gw = where + "[" + std::to_string(g) + "]";
    if (!v[g].is_array()) throw Error(ErrorKind::Config, gw + " must be an array of maps");
    GenerationSpec gen;
    for (std::size_t i = 0; i < v[g].size(); ++i) {
      gen.maps.push_back(map_from(v[g][i], gw + "[" + std::to_string(i) + "]"));
    }
    out.push_back(std::move(gen));
  }
  return out;
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw Error(ErrorKind::Config, where + " must be an integer");
  return v.get<int>();
}

SeedParams seed_params_from(const json& v) {
  reject_unknown(v, {"degree_min", "degree_max", "a_min", "a_max", "a_arg", "center_radius",
                     "center_jitter", "c_max", "max_attempts"},
                 "generator");
  SeedParams p;
  if (v.contains("degree_min")) p.degree_min = integer(v["degree_min"], "generator.degree_min");
  if (v.contains("degree_max")) p.degree_max = integer(v["degree_max"], "generator.degree_max");
  if (v.contains("a_min")) p.a_min = number(v["a_min"], "generator.a_min");
  if (v.contains("a_max")) p.a_max = number(v["a_max"], "generator.a_max");
  if (v.contains("a_arg")) p.a_arg = number(v["a_arg"], "generator.a_arg");
  if (v.contains("center_radius")) p.center_radius = number(v["center_radius"], "generator.center_radius");
  if (v.contains("center_jitter")) p.center_jitter = number(v["center_jitter"], "generator.center_jitter");
  if (v.contains("c_max")) p.c_max = number(v["c_max"], "generator.c_max");
  if (v.contains("max_attempts")) p.max_attempts = integer(v["max_attempts"], "generator.max_attempts");
  return p;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json generations_json(const std::vector<GenerationSpec>& gens) {
  json out = json::array();
  for (const auto& g : gens) {
    json maps = json::array();
    for (const auto& m : g.maps) {
      json jm{{"kind", m.kind == MapKind::Similarity ? "similarity" : "quadratic"},
              {"a", complex_json(m.a)},
              {"b", complex_json(m.b)}};
      if (m.kind == MapKind::Quadratic) jm["c"] = complex_json(m.c);
      maps.push_back(std::move(jm));
    }
    out.push_back(std::move(maps));
  }
  return out;
}

}  // namespace

SystemSpec system_from_json(const json& doc, bool validate) {
  reject_unknown(doc, {"domain", "mode", "prefix", "period", "seed", "generator", "horizon",
                       "degree_cap"},
                 "system");
  if (!doc.contains("domain")) throw Error(ErrorKind::Config, "system needs 'domain'");
  const json& dom = doc["domain"];
  reject_unknown(dom, {"eta", "gamma"}, "domain");
  if (!dom.contains("eta")) throw Error(ErrorKind::Config, "domain needs 'eta'");
  std::optional<double> gamma;
  if (dom.contains("gamma")) gamma = number(dom["gamma"], "domain.gamma");
  const DomainSpec domain = DomainSpec::make(number(dom["eta"], "domain.eta"), gamma);

  const std::string mode_name = doc.value("mode", std::string("periodic"));
  SystemMode mode;
  if (mode_name == "explicit") mode = SystemMode::Explicit;
  else if (mode_name == "periodic") mode = SystemMode::Periodic;
  else if (mode_name == "seeded") mode = SystemMode::Seeded;
  else throw Error(ErrorKind::Config, "unknown mode '" + mode_name + "'");

  auto prefix = doc.contains("prefix") ? generations_from(doc["prefix"], "prefix")
                                       : std::vector<GenerationSpec>{};
  auto period = doc.contains("period") ? generations_from(doc["period"], "period")
                                       : std::vector<GenerationSpec>{};
  const int degree_cap = doc.contains("degree_cap") ? integer(doc["degree_cap"], "degree_cap") : 16;
  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw Error(ErrorKind::Config, "seed must be a non-negative integer");
    seed = doc["seed"].get<std::uint64_t>();
  }
  SeedParams params;
  if (doc.contains("generator")) {
    if (mode != SystemMode::Seeded) throw Error(ErrorKind::Config, "'generator' requires seeded mode");
    params = seed_params_from(doc["generator"]);
  }
  int horizon = 0;
  if (doc.contains("horizon")) {
    horizon = integer(doc["horizon"], "horizon");
  } else if (mode == SystemMode::Explicit) {
    horizon = static_cast<int>(prefix.size());
  } else {
    horizon = 64;
  }
  return SystemSpec(domain, mode, std::move(prefix), std::move(period), horizon, degree_cap,
                    seed, params, validate);
}

json system_to_json(const SystemSpec& system) {
  json doc;
  doc["domain"] = {{"eta", system.domain().eta}, {"gamma", system.domain().gamma}};
  switch (system.mode()) {
    case SystemMode::Explicit: doc["mode"] = "explicit"; break;
    case SystemMode::Periodic: doc["mode"] = "periodic"; break;
    case SystemMode::Seeded: doc["mode"] = "seeded"; break;
  }
  doc["prefix"] = generations_json(system.prefix());
  doc["period"] = generations_json(system.period());
  doc["seed"] = system.seed();
  doc["horizon"] = system.horizon();
  doc["degree_cap"] = system.degree_cap();
  if (system.mode() == SystemMode::Seeded) {
    const SeedParams& p = system.seed_params();
    doc["generator"] = {{"degree_min", p.degree_min}, {"degree_max", p.degree_max},
                        {"a_min", p.a_min},           {"a_max", p.a_max},
                        {"a_arg", p.a_arg},           {"center_radius", p.center_radius},
                        {"center_jitter", p.center_jitter}, {"c_max", p.c_max},
                        {"max_attempts", p.max_attempts}};
  }
  return doc;
}

SystemSpec load_system(const std::filesystem::path& path, bool validate) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return system_from_json(doc, validate);
}

void save_system(const SystemSpec& system, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << system_to_json(system).dump(2) << '\n';
}

}  // namespace nacifs
