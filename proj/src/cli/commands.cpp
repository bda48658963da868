#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "cocontact/cli/cli.hpp"

namespace cocontact::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using sr::PontryaginPoint;

namespace {

// Error raised while running a command, carrying its exit code.
struct CommandError {
  int code;
  std::string message;
};

int exit_code(sr::LadderStatus s) {
  switch (s) {
    case sr::LadderStatus::kClosed: return kOk;
    case sr::LadderStatus::kIncompatible: return kIncompatible;
    case sr::LadderStatus::kMaxIterations: return kMaxIterations;
  }
  return kNumerical;
}

// Runs `body`, translating library exceptions to exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const CommandError& e) {
    err << "error: " << e.message << '\n';
    return e.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigOrVerify;
  } catch (const dynamics::StepFailure& e) {
    err << "integrator failed: " << e.what() << '\n';
  } catch (const dynamics::LadderLost& e) {
    err << "left the constraint submanifold: " << e.what() << '\n';
  } catch (const dynamics::ProjectionFailure& e) {
    err << "projection failed: " << e.what() << '\n';
  } catch (const dynamics::NonInvertibleLegendre& e) {
    err << "no Hamiltonian description: " << e.what() << '\n';
  } catch (const sr::NumericalBreakdown& e) {
    err << "numerical breakdown: " << e.what() << '\n';
  } catch (const jets::DomainError& e) {
    err << "domain error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kNumerical;
}

json ladder_json(const sr::ConstraintLadder& ladder) {
  json gens = json::array();
  std::size_t idx = 0;
  for (std::size_t g = 0; g < ladder.generations.size(); ++g) {
    json list = json::array();
    for (const auto& c : ladder.generations[g]) {
      json entry{{"label", c.label}};
      // Values follow structure order, which lists generations in turn.
      if (idx < ladder.values.size()) entry["value"] = ladder.values[idx];
      if (ladder.structure && idx < ladder.structure->constraints.size())
        entry["origin"] = ladder.structure->constraints[idx].origin;
      ++idx;
      list.push_back(std::move(entry));
    }
    gens.push_back({{"generation", g + 1}, {"constraints", std::move(list)}});
  }
  json out{{"status", sr::to_string(ladder.status)},
           {"generations", std::move(gens)},
           {"rank", ladder.rank},
           {"kernel_dim", ladder.kernel_dim}};
  if (!ladder.incompatible.empty()) {
    out["incompatible"] = ladder.incompatible;
    out["incompatible_value"] = ladder.incompatible_value;
  }
  return out;
}

json point_json(const PontryaginPoint& w) {
  return {{"t", w.t}, {"q", w.q}, {"v", w.v}, {"p", w.p}, {"s", w.s}};
}

json report_json(const dynamics::ResidualReport& rep, const std::vector<std::string>& channels) {
  json out = json::object();
  for (const auto& c : channels) {
    const auto& s = c == "holonomy" ? rep.holonomy : c == "sdot" ? rep.sdot : c == "herglotz" ? rep.herglotz : rep.constraint;
    out[c] = {{"max", s.max}, {"rms", s.rms}};
  }
  return out;
}

RunConfig apply_flags(RunConfig cfg, const CommandOptions& opts) {
  if (opts.step) {
    if (!(*opts.step > 0.0)) throw ConfigError("--step must be positive");
    cfg.integrator.step = *opts.step;
  }
  if (opts.t_end) cfg.integrator.t_end = *opts.t_end;
  return cfg;
}

fs::path output_path(const std::string& configured, const std::string& fallback, const CommandOptions& opts) {
  fs::path p = configured.empty() ? fs::path(fallback) : fs::path(configured);
  if (!opts.out_dir.empty() && p.is_relative()) p = fs::path(opts.out_dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw CommandError{kConfigOrVerify, "cannot write '" + p.string() + "'"};
  return f;
}

struct Projected {
  systems::SystemPreset preset;
  dynamics::ProjectionResult projection;
};

Projected project_initial(const RunConfig& cfg, const dsl::ParamTable& extra = {}) {
  Projected out{cfg.system.build(extra), {}};
  const auto w0 = initial_point(cfg, out.preset);
  out.projection = dynamics::project_to_ladder(out.preset.system, w0, cfg.algorithm);
  const auto& ladder = out.projection.ladder;
  if (ladder.status != sr::LadderStatus::kClosed) {
    std::string msg = std::string("constraint ladder did not close: ") + sr::to_string(ladder.status);
    if (!ladder.incompatible.empty()) msg += " (" + ladder.incompatible + ")";
    throw CommandError{exit_code(ladder.status), msg};
  }
  return out;
}

// Lifts plain X or Y states to W so every space shares one output format.
dynamics::Trajectory lift(const mechanics::LagrangianSystem& L, const sr::ConstraintLadder& ladder,
                          const std::vector<std::vector<double>>& states, bool momenta,
                          const sr::AlgorithmOptions& algorithm) {
  const int n = L.n();
  dynamics::Trajectory traj;
  traj.n = n;
  traj.ladder = ladder.structure;
  std::vector<double> guess;
  sr::AssembleOptions aopts;
  aopts.algorithm = algorithm;
  for (const auto& x : states) {
    PontryaginPoint w;
    if (momenta) {
      const auto y = mechanics::HamiltonianPoint::from_coords(x, n);
      guess = dynamics::inverse_legendre(L, y, guess);
      w = {y.t, y.q, guess, y.p, y.s};
    } else {
      const auto l = mechanics::LagrangianPoint::from_coords(x, n);
      w = {l.t, l.q, l.v, mechanics::legendre_map(L, l).p, l.s};
    }
    traj.Z.push_back(sr::assemble_Z(L, w, *ladder.structure, aopts));
    traj.points.push_back(std::move(w));
  }
  dynamics::compute_residuals(L, traj);
  return traj;
}

dynamics::Trajectory simulate_space(const RunConfig& cfg, const Projected& pr, const std::string& space) {
  const auto& L = pr.preset.system;
  const auto& start = pr.projection.point;
  dynamics::DynamicsOptions dopts;
  dopts.algorithm = cfg.algorithm;
  if (space == "unified") return dynamics::integrate_unified(L, start, cfg.integrator, dopts);
  sr::AssembleOptions aopts;
  aopts.algorithm = cfg.algorithm;
  auto icfg = cfg.integrator;
  icfg.reproject = false;
  const auto& ladder = pr.projection.ladder;
  if (space == "lagrangian") {
    const auto states =
        dynamics::integrate(dynamics::lagrangian_field(L, ladder.structure, aopts), start.lagrangian().coords(), icfg);
    return lift(L, ladder, states, false, cfg.algorithm);
  }
  if (mechanics::regularity(L, start.lagrangian(), cfg.algorithm.rank_tol).verdict != mechanics::Verdict::kRegular)
    throw dynamics::NonInvertibleLegendre("the Legendre map is singular for this system; use --space unified");
  const auto states =
      dynamics::integrate(dynamics::hamiltonian_field(L, ladder.structure, aopts), start.hamiltonian().coords(), icfg);
  return lift(L, ladder, states, true, cfg.algorithm);
}

void check_space(const std::string& space) {
  if (space != "unified" && space != "lagrangian" && space != "hamiltonian")
    throw ConfigError("--space must be lagrangian, hamiltonian or unified");
}

}  // namespace

int cmd_constraints(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto preset = cfg.system.build();
    const auto w0 = initial_point(cfg, preset);
    const auto proj = dynamics::project_to_ladder(preset.system, w0, cfg.algorithm);
    json doc{{"system", preset.label}, {"n", preset.system.n()}};
    doc.update(ladder_json(proj.ladder));
    doc["point"] = point_json(proj.point);
    doc["newton_iterations"] = proj.newton_iterations;
    if (!cfg.outputs.json.empty()) {
      auto f = open_out(output_path(cfg.outputs.json, {}, opts));
      f << doc.dump(2) << '\n';
    }
    out << doc.dump(2) << '\n';
    return exit_code(proj.ladder.status);
  });
}

int cmd_simulate(const RunConfig& base, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check_space(opts.space);
    const auto cfg = apply_flags(base, opts);
    const auto pr = project_initial(cfg);
    const auto traj = simulate_space(cfg, pr, opts.space);
    const auto report = dynamics::residual_report(pr.preset.system, traj);
    const std::string stem = pr.preset.label + "_" + opts.space;
    const auto csv_path = output_path(cfg.outputs.csv, stem + ".csv", opts);
    {
      auto f = open_out(csv_path);
      dynamics::write_csv(f, traj);
    }
    const auto json_path = output_path(cfg.outputs.json, stem + ".json", opts);
    {
      auto f = open_out(json_path);
      dynamics::write_json(f, traj, report);
    }
    json doc{{"system", pr.preset.label},
             {"space", opts.space},
             {"method", dynamics::to_string(cfg.integrator.method)},
             {"samples", traj.points.size()},
             {"final", point_json(traj.points.back())},
             {"residuals", report_json(report, cfg.outputs.channels)},
             {"csv", csv_path.string()},
             {"json", json_path.string()}};
    out << doc.dump(2) << '\n';
    return int{kOk};
  });
}

int cmd_verify(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto preset = cfg.system.build();
    VerifyOptions vopts;
    vopts.seed = opts.seed;
    vopts.tol = opts.tol;
    const auto results = verify_system(preset, vopts);
    bool all = true;
    out << "verify " << preset.label << " (seed " << opts.seed << ")\n";
    for (const auto& r : results) {
      const char* verdict = r.skipped ? "SKIP" : r.passed ? "PASS" : "FAIL";
      char line[160];
      if (r.tolerance > 0.0)
        std::snprintf(line, sizeof line, "  %-4s %-24s %11.3e <= %9.3e  ", verdict, r.name.c_str(), r.measured,
                      r.tolerance);
      else
        std::snprintf(line, sizeof line, "  %-4s %-24s %26s", verdict, r.name.c_str(), "");
      out << line << r.detail << '\n';
      all = all && r.passed;
    }
    out << (all ? "all checks passed" : "some checks failed") << '\n';
    if (!all) {
      for (const auto& r : results)
        if (!r.passed) err << "check failed: " << r.name << ": " << r.detail << '\n';
    }
    return all ? int{kOk} : int{kConfigOrVerify};
  });
}

int cmd_sweep(const RunConfig& base, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check_space(opts.space);
    if (!base.sweep) throw ConfigError("sweep needs a 'sweep' section or --sweep name=v1,v2,...");
    const auto cfg = apply_flags(base, opts);
    const auto& sweep = *cfg.sweep;
    const std::size_t count = sweep.values.size();
    std::vector<json> rows(count);
    std::vector<int> codes(count, kOk);
    std::vector<std::string> errors(count);

    const auto run_one = [&](std::size_t i) {
      std::ostringstream local_err;
      codes[i] = guarded(local_err, [&] {
        dsl::ParamTable extra;
        extra.set(sweep.parameter, sweep.values[i]);
        const auto pr = project_initial(cfg, extra);
        const auto traj = simulate_space(cfg, pr, opts.space);
        const auto report = dynamics::residual_report(pr.preset.system, traj);
        const std::string stem = pr.preset.label + "_" + opts.space + "_" + sweep.parameter + "_" + std::to_string(i);
        auto f = open_out(output_path({}, stem + ".csv", opts));
        dynamics::write_csv(f, traj);
        rows[i] = {{"value", sweep.values[i]},
                   {"samples", traj.points.size()},
                   {"final", point_json(traj.points.back())},
                   {"residuals", report_json(report, cfg.outputs.channels)},
                   {"csv", output_path({}, stem + ".csv", opts).string()}};
        return int{kOk};
      });
      errors[i] = local_err.str();
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) run_one(i);
      });
    for (auto& t : pool) t.join();

    int code = kOk;
    json results = json::array();
    for (std::size_t i = 0; i < count; ++i) {
      if (codes[i] != kOk) {
        err << sweep.parameter << " = " << sweep.values[i] << ": " << errors[i];
        rows[i] = {{"value", sweep.values[i]}, {"exit_code", codes[i]}};
        if (code == kOk) code = codes[i];
      }
      results.push_back(rows[i]);
    }
    out << json{{"parameter", sweep.parameter}, {"space", opts.space}, {"runs", results}}.dump(2) << '\n';
    return code;
  });
}

namespace {

SweepSpec parse_sweep_flag(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--sweep expects name=v1,v2,...");
  SweepSpec s;
  s.parameter = text.substr(0, eq);
  std::stringstream list(text.substr(eq + 1));
  std::string item;
  while (std::getline(list, item, ',')) {
    try {
      std::size_t used = 0;
      s.values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--sweep value '" + item + "' is not a number");
    }
  }
  if (s.values.empty()) throw ConfigError("--sweep needs at least one value");
  return s;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Unified Lagrangian-Hamiltonian formalism for cocontact systems"};
  app.require_subcommand(1);
  std::string config_path;
  CommandOptions opts;
  std::optional<double> step, t_end, tol;
  std::string sweep_flag;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", opts.out_dir, "output directory (overrides $COCONTACT_OUT_DIR)");
    sub->add_option("--seed", opts.seed, "seed for random probe points")->capture_default_str();
  };
  auto* constraints = app.add_subcommand("constraints", "run the constraint algorithm and print the ladder");
  add_common(constraints);
  auto* simulate = app.add_subcommand("simulate", "integrate a trajectory and export CSV/JSON");
  add_common(simulate);
  auto* verify = app.add_subcommand("verify", "run the identity and convergence checks");
  add_common(verify);
  auto* sweep = app.add_subcommand("sweep", "simulate once per parameter value, in parallel");
  add_common(sweep);
  for (auto* sub : {simulate, sweep}) {
    sub->add_option("--space", opts.space, "lagrangian, hamiltonian or unified")
        ->check(CLI::IsMember({"lagrangian", "hamiltonian", "unified"}))
        ->capture_default_str();
    sub->add_option("--step", step, "integrator step");
    sub->add_option("--t-end", t_end, "final time");
  }
  verify->add_option("--tol", tol, "replace every check tolerance");
  sweep->add_option("--sweep", sweep_flag, "parameter sweep, name=v1,v2,...");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigOrVerify;
  }
  opts.step = step;
  opts.t_end = t_end;
  opts.tol = tol;
  if (opts.out_dir.empty()) {
    if (const char* env = std::getenv("COCONTACT_OUT_DIR")) opts.out_dir = env;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!sweep_flag.empty()) cfg.sweep = parse_sweep_flag(sweep_flag);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigOrVerify;
  }
  if (constraints->parsed()) return cmd_constraints(cfg, opts, std::cout, std::cerr);
  if (simulate->parsed()) return cmd_simulate(cfg, opts, std::cout, std::cerr);
  if (verify->parsed()) return cmd_verify(cfg, opts, std::cout, std::cerr);
  return cmd_sweep(cfg, opts, std::cout, std::cerr);
}

}  // namespace cocontact::cli
