#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "cocontact/cli/cli.hpp"
#include "cocontact/dsl/parser.hpp"

namespace cocontact::cli {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + " must be finite");
  return x;
}

double positive(const json& v, const std::string& where) {
  const double x = number(v, where);
  if (!(x > 0.0)) throw ConfigError(where + " must be positive");
  return x;
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + " must be a string");
  return v.get<std::string>();
}

dsl::ParamTable param_table(const json& v, const std::string& where) {
  if (!v.is_object()) throw ConfigError(where + " must be an object of numbers");
  dsl::ParamTable table;
  for (const auto& [key, value] : v.items()) {
    try {
      table.set(key, number(value, where + "." + key));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return table;
}

SystemSpec parse_system(const json& v) {
  SystemSpec spec;
  if (v.is_string()) {
    spec.preset = v.get<std::string>();
  } else {
    only_keys(v, "system", {"preset", "n", "lagrangian", "params", "label"});
    const bool has_preset = v.contains("preset");
    const bool has_inline = v.contains("lagrangian");
    if (has_preset == has_inline) throw ConfigError("system needs exactly one of 'preset' or 'lagrangian'");
    if (has_preset) {
      spec.preset = text(v["preset"], "system.preset");
      if (v.contains("n")) throw ConfigError("system.n is only allowed for inline Lagrangians");
    } else {
      spec.lagrangian = text(v["lagrangian"], "system.lagrangian");
      if (!v.contains("n") || !v["n"].is_number_integer()) throw ConfigError("system.n must be an integer");
      spec.n = v["n"].get<int>();
      if (spec.n < 1 || spec.n > 8) throw ConfigError("system.n must be between 1 and 8");
    }
    if (v.contains("params")) spec.params = param_table(v["params"], "system.params");
    if (v.contains("label")) spec.label = text(v["label"], "system.label");
  }
  if (spec.is_preset()) {
    const auto names = systems::preset_names();
    if (std::find(names.begin(), names.end(), spec.preset) == names.end())
      throw ConfigError("unknown preset '" + spec.preset + "'");
  }
  return spec;
}

}  // namespace

systems::SystemPreset SystemSpec::build(const dsl::ParamTable& extra) const {
  dsl::ParamTable merged = params;
  for (const auto& [k, v] : extra.entries()) merged.set(k, v);
  try {
    if (is_preset()) {
      auto p = systems::preset(preset, merged);
      if (!label.empty()) p.label = label;
      return p;
    }
    dsl::ParseOptions options;
    options.n = n;
    options.params = &merged;
    const auto expr = dsl::parse(lagrangian, options);
    const std::string name = label.empty() ? "inline" : label;
    systems::SystemPreset p{
        .label = name,
        .system = mechanics::LagrangianSystem::from_expr(expr, merged, name),
        .lagrangian_text = lagrangian,
        .params = merged,
        .expected_C = {},
        .expected_D = {},
        .expected_ladder = {},
        .initial = {0.0, std::vector<double>(static_cast<std::size_t>(n), 0.0),
                    std::vector<double>(static_cast<std::size_t>(n), 0.0),
                    std::vector<double>(static_cast<std::size_t>(n), 0.0), 0.0},
        .t_end = 10.0,
        .sample = {},
        .notes = "inline Lagrangian",
    };
    const auto system = p.system;
    p.sample = [system, n = n](std::mt19937_64& rng) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      sr::PontryaginPoint w;
      w.t = 0.5 * (u(rng) + 1.0);
      for (int i = 0; i < n; ++i) {
        w.q.push_back(u(rng));
        w.v.push_back(u(rng));
      }
      w.s = u(rng);
      w.p = mechanics::legendre_map(system, w.lagrangian()).p;
      return w;
    };
    return p;
  } catch (const dsl::ParseError& e) {
    throw ConfigError(std::string("system.lagrangian: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("system: ") + e.what());
  } catch (const dsl::UnboundParameter& e) {
    throw ConfigError(std::string("system.params: ") + e.what());
  }
}

RunConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(doc, "config", {"system", "initial", "integrator", "algorithm", "outputs", "sweep"});
  if (!doc.contains("system")) throw ConfigError("config needs a 'system'");
  RunConfig cfg;
  cfg.system = parse_system(doc["system"]);

  if (doc.contains("initial")) {
    const auto& v = doc["initial"];
    only_keys(v, "initial", {"t0", "q", "v", "s"});
    cfg.initial.given = true;
    if (v.contains("t0")) cfg.initial.t0 = number(v["t0"], "initial.t0");
    if (v.contains("q")) cfg.initial.q = numbers(v["q"], "initial.q");
    if (v.contains("v")) cfg.initial.v = numbers(v["v"], "initial.v");
    if (v.contains("s")) cfg.initial.s = number(v["s"], "initial.s");
  }

  if (doc.contains("integrator")) {
    const auto& v = doc["integrator"];
    only_keys(v, "integrator", {"method", "step", "abs_tol", "rel_tol", "t_end", "reproject"});
    if (v.contains("method")) {
      const auto m = text(v["method"], "integrator.method");
      if (m == "rk4") {
        cfg.integrator.method = dynamics::Method::kRK4;
      } else if (m == "rk45") {
        cfg.integrator.method = dynamics::Method::kRK45;
      } else {
        throw ConfigError("integrator.method must be 'rk4' or 'rk45'");
      }
    }
    if (v.contains("step")) cfg.integrator.step = positive(v["step"], "integrator.step");
    if (v.contains("abs_tol")) cfg.integrator.abs_tol = positive(v["abs_tol"], "integrator.abs_tol");
    if (v.contains("rel_tol")) cfg.integrator.rel_tol = positive(v["rel_tol"], "integrator.rel_tol");
    if (v.contains("t_end")) {
      cfg.integrator.t_end = number(v["t_end"], "integrator.t_end");
      cfg.t_end_given = true;
    }
    if (v.contains("reproject")) {
      if (!v["reproject"].is_boolean()) throw ConfigError("integrator.reproject must be true or false");
      cfg.integrator.reproject = v["reproject"].get<bool>();
    }
  }

  if (doc.contains("algorithm")) {
    const auto& v = doc["algorithm"];
    only_keys(v, "algorithm", {"max_generations", "rank_tol", "feasibility_tol", "condition_cap"});
    if (v.contains("max_generations")) {
      if (!v["max_generations"].is_number_integer() || v["max_generations"].get<int>() < 1)
        throw ConfigError("algorithm.max_generations must be a positive integer");
      cfg.algorithm.max_generations = v["max_generations"].get<int>();
    }
    if (v.contains("rank_tol")) cfg.algorithm.rank_tol = positive(v["rank_tol"], "algorithm.rank_tol");
    if (v.contains("feasibility_tol"))
      cfg.algorithm.feasibility_tol = positive(v["feasibility_tol"], "algorithm.feasibility_tol");
    if (v.contains("condition_cap")) cfg.algorithm.condition_cap = positive(v["condition_cap"], "algorithm.condition_cap");
  }

  if (doc.contains("outputs")) {
    const auto& v = doc["outputs"];
    only_keys(v, "outputs", {"csv", "json", "channels"});
    if (v.contains("csv")) cfg.outputs.csv = text(v["csv"], "outputs.csv");
    if (v.contains("json")) cfg.outputs.json = text(v["json"], "outputs.json");
    if (v.contains("channels")) {
      static const std::set<std::string> known{"holonomy", "sdot", "herglotz", "constraint"};
      if (!v["channels"].is_array()) throw ConfigError("outputs.channels must be an array");
      cfg.outputs.channels.clear();
      for (const auto& c : v["channels"]) {
        const auto name = text(c, "outputs.channels[]");
        if (!known.count(name)) throw ConfigError("unknown residual channel '" + name + "'");
        cfg.outputs.channels.push_back(name);
      }
    }
  }

  if (doc.contains("sweep")) {
    const auto& v = doc["sweep"];
    only_keys(v, "sweep", {"parameter", "values"});
    if (!v.contains("parameter") || !v.contains("values")) throw ConfigError("sweep needs 'parameter' and 'values'");
    SweepSpec s{text(v["parameter"], "sweep.parameter"), numbers(v["values"], "sweep.values")};
    if (s.values.empty()) throw ConfigError("sweep.values is empty");
    cfg.sweep = std::move(s);
  }

  // Building once validates the expression, parameter names and dimensions.
  const auto preset = cfg.system.build();
  const auto n = static_cast<std::size_t>(preset.system.n());
  if (cfg.initial.given) {
    if (!cfg.initial.q.empty() && cfg.initial.q.size() != n)
      throw ConfigError("initial.q has " + std::to_string(cfg.initial.q.size()) + " entries, expected " +
                        std::to_string(n));
    if (!cfg.initial.v.empty() && cfg.initial.v.size() != n)
      throw ConfigError("initial.v has " + std::to_string(cfg.initial.v.size()) + " entries, expected " +
                        std::to_string(n));
  }
  if (!cfg.t_end_given) cfg.integrator.t_end = preset.t_end;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

sr::PontryaginPoint initial_point(const RunConfig& cfg, const systems::SystemPreset& preset) {
  auto w = preset.initial;
  const auto n = static_cast<std::size_t>(preset.system.n());
  if (cfg.initial.given) {
    w.t = cfg.initial.t0;
    if (!cfg.initial.q.empty()) w.q = cfg.initial.q;
    if (!cfg.initial.v.empty()) w.v = cfg.initial.v;
    w.s = cfg.initial.s;
  }
  w.p.assign(n, 0.0);
  return w;
}

}  // namespace cocontact::cli
