#pragma once

// Command-line front end. run_cli returns the process exit code:
// 0 ok, 1 a verification check failed, 2 configuration error,
// 3 runtime failure or divergence.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgdfclt/asymptotics.hpp"
#include "sgdfclt/config.hpp"
#include "sgdfclt/csv.hpp"
#include "sgdfclt/limit_diffusion.hpp"
#include "sgdfclt/limit_params.hpp"
#include "sgdfclt/manifest.hpp"
#include "sgdfclt/models.hpp"
#include "sgdfclt/parallel.hpp"
#include "sgdfclt/report.hpp"
#include "sgdfclt/rescaling.hpp"
#include "sgdfclt/sgd_engine.hpp"
#include "sgdfclt/verify.hpp"

namespace sgdfclt {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitRuntime = 3 };

namespace cli {

namespace fs = std::filesystem;

struct Context {
  RunConfig config;
  std::string config_text;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
};

inline std::string numbered(const std::string& stem, std::size_t index, std::size_t count) {
  if (count == 1) return stem + ".csv";
  const int width = static_cast<int>(std::to_string(count - 1).size());
  std::ostringstream s;
  s << stem << '_' << std::setw(width) << std::setfill('0') << index << ".csv";
  return s.str();
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  writer(f);
  f.flush();
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

inline ProblemModel model_of(const RunConfig& c) {
  try {
    return build_model(c.model);
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  } catch (const LinalgError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

inline double fclt_delta(const RunConfig& c, const ProblemModel& model) {
  try {
    validate_for_fclt(c.schedule, model);
  } catch (const ScheduleError& e) {
    throw ConfigError(e.what());
  }
  return c.schedule.delta;
}

inline LimitParams limit_params_of(const RunConfig& c, const ProblemModel& model) {
  const double delta = fclt_delta(c, model);
  try {
    return make_limit_params(model, delta);
  } catch (const LimitParamsError& e) {
    throw ConfigError(e.what());
  }
}

inline void write_json(const fs::path& path, const Json& j) {
  write_file(path, [&](std::ostream& f) { f << j.dump(2) << '\n'; });
}

inline int cmd_simulate(Context& ctx, Manifest& manifest) {
  const auto& c = ctx.config;
  const ProblemModel model = model_of(c);
  const Vector theta0 = c.start_point();
  for (std::size_t r = 0; r < c.trajectories; ++r) {
    const std::uint64_t seed = c.trajectories == 1 ? c.seed : derive_seed(c.seed, r);
    Trajectory tr;
    try {
      tr = run_sgd(model, c.schedule, theta0, c.n, seed, c.stride);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.iteration(), e.last_finite(), r);
    }
    const std::string name = numbered("trajectory", r, c.trajectories);
    write_file(ctx.out_dir / name, [&](std::ostream& f) { write_trajectory_csv(f, tr); });
    manifest.add_file(name, "simulate");
    ctx.out << name << '\n';
  }
  return kExitOk;
}

inline int cmd_rescale(Context& ctx, Manifest& manifest, const std::string& trajectory_file) {
  const auto& c = ctx.config;
  const ProblemModel model = model_of(c);
  Trajectory tr;
  try {
    tr = read_trajectory_csv(trajectory_file);
  } catch (const CsvError& e) {
    throw ConfigError(e.what());
  }
  if (tr.dim() != model.dim) throw ConfigError("trajectory dimension does not match model.dim");
  RescaledPath path;
  Matrix values;
  const Vector grid = c.limit_grid();
  try {
    path = rescale(tr, c.n, model.minimizer);
    values = sample_on_grid(path, grid);
  } catch (const RescalingError& e) {
    throw ConfigError(e.what());
  }
  write_file(ctx.out_dir / "rescaled.csv", [&](std::ostream& f) { write_path_csv(f, grid, values); });
  manifest.add_file("rescaled.csv", "rescale");
  ctx.out << "rescaled.csv\n";
  return kExitOk;
}

inline int cmd_limit_sample(Context& ctx, Manifest& manifest) {
  const auto& c = ctx.config;
  const ProblemModel model = model_of(c);
  const LimitParams params = limit_params_of(c, model);
  const Vector grid = c.limit_grid();
  std::optional<ExactSampler> sampler;
  std::optional<ExactSampler> start;
  try {
    if (c.sampler == "exact") {
      sampler.emplace(params, grid);
    } else {
      if (!(grid.front() > c.euler_t_start)) throw ConfigError("grid must start after limit.euler_t_start");
      start.emplace(params, Vector{c.euler_t_start});
    }
  } catch (const DiffusionError& e) {
    throw ConfigError(e.what());
  }
  for (std::size_t p = 0; p < c.limit_paths; ++p) {
    const std::uint64_t seed = derive_seed(c.seed, p);
    DiffusionPath path;
    if (sampler) {
      path = sampler->sample(seed);
    } else {
      const DiffusionPath y0 = start->sample(derive_seed(seed, 0));
      path = sample_euler(params, c.euler_t_start, y0.values.row(0), grid, c.euler_steps, derive_seed(seed, 1));
    }
    const std::string name = numbered("limit_path", p, c.limit_paths);
    write_file(ctx.out_dir / name, [&](std::ostream& f) { write_path_csv(f, path.grid, path.values); });
    manifest.add_file(name, "limit-sample");
    ctx.out << name << '\n';
  }
  return kExitOk;
}

inline int cmd_asymptotics(Context& ctx, Manifest& manifest) {
  const auto& c = ctx.config;
  const ProblemModel model = model_of(c);
  const LimitParams params = limit_params_of(c, model);
  const CovarianceReport r = compare_variances(params);
  Json j{{"model", model.name},
         {"delta_step", params.delta},
         {"hessian", to_json(params.hessian)},
         {"gamma", to_json(params.gamma)},
         {"lambda", params.lambda},
         {"sigma", to_json(r.sigma)},
         {"delta", to_json(r.delta)},
         {"min_eig_excess", r.min_eig_excess},
         {"op_norm_excess", r.op_norm_excess},
         {"bound", r.bound},
         {"pass_psd", r.pass_psd},
         {"pass_bound", r.pass_bound}};
  write_json(ctx.out_dir / "asymptotics.json", j);
  manifest.add_file("asymptotics.json", "asymptotics");
  ctx.out << "asymptotics.json\n";
  return (r.pass_psd && r.pass_bound) ? kExitOk : kExitCheckFailed;
}

inline VerificationReport run_check(const std::string& name, const RunConfig& c, const ProblemModel& model) {
  RunOptions opts{c.start_point(), c.threads};
  if (name == "consistency") return consistency_check(model, c.schedule, c.n_list, c.replications, c.seed, opts);
  const double delta = fclt_delta(c, model);
  if (name == "clt")
    return clt_check(model, delta, c.n, c.replications, c.seed, opts, {c.clt_relative_opnorm, c.clt_mean_se});
  if (name == "fdd") {
    const Vector grid = c.limit_grid();
    try {
      return fdd_check(model, delta, c.n, c.replications, grid, c.seed, opts, {c.fdd_se});
    } catch (const DiffusionError& e) {
      throw ConfigError(e.what());
    }
  }
  if (name == "tightness") return tightness_check(model, delta, c.n_list, c.replications, c.c_multiplier, c.seed, opts);
  if (name == "coefficients")
    return coefficient_convergence_check(model, delta, c.coefficient_n_list, c.t_grid, c.coefficient_points(),
                                         {c.drift_tolerance, c.diffusion_tolerance, c.mc_samples, c.seed});
  if (name == "exit_probability")
    return exit_probability_check(model, delta, c.coefficient_n_list, c.t_grid, c.coefficient_points(),
                                  {c.exit_radius, c.exit_tolerance, c.exit_samples, c.seed});
  const LimitParams params = limit_params_of(c, model);
  if (name == "sup_bound") {
    SupBoundOptions so;
    so.form = c.sup_form == "proof" ? BoundForm::proof : BoundForm::as_stated;
    so.threads = c.threads;
    return sup_bound_check(params, c.horizon, c.sup_grid_size, c.sup_paths, c.seed, so);
  }
  if (name == "variances") return variance_check(params);
  if (name == "kernel") return kernel_inequality_check(params, c.horizon);
  throw ConfigError("unknown check '" + name + "'");
}

inline int cmd_verify(Context& ctx, Manifest& manifest, Json& run_entry) {
  const auto& c = ctx.config;
  const ProblemModel model = model_of(c);
  if (c.checks.empty()) throw ConfigError("verify.checks is empty");
  int code = kExitOk;
  Json timings = Json::object();
  for (const auto& name : c.checks) {
    VerificationReport r;
    try {
      r = run_check(name, c, model);
    } catch (const CheckError& e) {
      throw ConfigError(name + ": " + e.what());
    } catch (const LimitParamsError& e) {
      throw ConfigError(name + ": " + e.what());
    } catch (const ScheduleError& e) {
      throw ConfigError(name + ": " + e.what());
    }
    const std::string file = "report_" + name + ".json";
    write_json(ctx.out_dir / file, to_json(r));
    manifest.add_file(file, "verify");
    timings[name] = r.wall_seconds;
    ctx.out << (r.pass ? "PASS " : "FAIL ") << name << " (" << file << ")\n";
    if (r.diagnostics.contains("divergence")) {
      code = kExitRuntime;
    } else if (!r.pass && code == kExitOk) {
      code = kExitCheckFailed;
    }
  }
  run_entry["check_wall_seconds"] = timings;
  return code;
}

inline int cmd_figure(Context& ctx, Manifest& manifest) {
  const auto& c = ctx.config;
  const ProblemModel model = model_of(c);
  const Trajectory tr = run_sgd(model, c.schedule, c.start_point(), c.n, c.seed, 1);

  write_file(ctx.out_dir / "figure_trajectory.csv", [&](std::ostream& f) { write_trajectory_csv(f, tr); });
  manifest.add_file("figure_trajectory.csv", "figure");

  Trajectory zoom = tr;
  zoom.indices.clear();
  zoom.values.clear();
  for (std::size_t r = 0; r < tr.size(); ++r)
    if (tr.indices[r] > c.burn_in) {
      zoom.indices.push_back(tr.indices[r]);
      zoom.values.insert(zoom.values.end(), tr.iterate(r).begin(), tr.iterate(r).end());
    }
  write_file(ctx.out_dir / "figure_zoom.csv", [&](std::ostream& f) { write_trajectory_csv(f, zoom); });
  manifest.add_file("figure_zoom.csv", "figure");

  const RescaledPath path = rescale(tr, c.n, model.minimizer);
  Vector times(c.n);
  Matrix values(c.n, model.dim);
  for (std::uint64_t k = 1; k <= c.n; ++k) {
    times[k - 1] = static_cast<double>(k) / static_cast<double>(c.n);
    const auto y = path.at(k);
    std::copy(y.begin(), y.end(), values.row(k - 1).begin());
  }
  write_file(ctx.out_dir / "figure_rescaled.csv", [&](std::ostream& f) { write_path_csv(f, times, values); });
  manifest.add_file("figure_rescaled.csv", "figure");
  ctx.out << "figure_trajectory.csv\nfigure_zoom.csv\nfigure_rescaled.csv\n";
  return kExitOk;
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Simulate SGD with step delta/k, its rescaled trajectory and the limit diffusion, and verify the "
               "asymptotic theory by Monte Carlo.",
               "sgdfclt"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> n;
  bool dump_config = false;
  app.add_option("-c,--config", config_file, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "Override a key, e.g. --set verify.replications=500");
  app.add_option("-o,--out", out_dir, "Output directory (default: $SGDFCLT_OUTPUT_DIR or ./out)");
  app.add_option("--threads", threads, "Worker threads; 0 uses the hardware concurrency");
  app.add_option("--seed", seed, "Base seed");
  app.add_option("--n", n, "Number of SGD steps");
  app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");

  std::string trajectory_file;
  auto* simulate = app.add_subcommand("simulate", "Run SGD and write trajectory CSVs");
  auto* rescale_cmd = app.add_subcommand("rescale", "Sample the rescaled trajectory on the configured grid");
  rescale_cmd->add_option("-t,--trajectory", trajectory_file, "Trajectory CSV written by simulate")
      ->required()
      ->check(CLI::ExistingFile);
  auto* limit = app.add_subcommand("limit-sample", "Sample paths of the limit diffusion");
  auto* asym = app.add_subcommand("asymptotics", "Evaluate Sigma, Delta and their comparison");
  auto* verify = app.add_subcommand("verify", "Run the configured verification checks");
  auto* figure = app.add_subcommand("figure", "Write the three CSVs behind the trajectory figure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  const auto started = std::chrono::steady_clock::now();
  std::string command;
  try {
    ConfigTree tree = default_tree();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("cannot read " + config_file);
      merge_into(tree, parse_ini(in, config_file));
    }
    for (const auto& o : overrides) apply_override(tree, o);
    if (out_dir) tree.put("output.dir", *out_dir);
    if (threads) tree.put("run.threads", std::to_string(*threads));
    if (seed) tree.put("run.seed", std::to_string(*seed));
    if (n) tree.put("run.n", std::to_string(*n));
    RunConfig config = from_tree(tree);
    validate(config);
    const std::string text = serialize(config);
    if (dump_config) {
      out << text;
      return kExitOk;
    }

    cli::fs::path dir(config.output_dir);
    std::error_code ec;
    cli::fs::create_directories(dir, ec);
    if (ec || !cli::fs::is_directory(dir)) throw ConfigError("output directory not writable: " + dir.string());
    set_default_threads(config.threads);

    cli::Context ctx{config, text, dir, out, err};
    Manifest manifest(dir);
    Json run{{"command", ""}, {"version", kVersion}, {"seed", config.seed}, {"threads", resolve_threads(config.threads)}};
    int code = kExitOk;
    if (*simulate) {
      command = "simulate";
      code = cli::cmd_simulate(ctx, manifest);
    } else if (*rescale_cmd) {
      command = "rescale";
      run["trajectory"] = trajectory_file;
      code = cli::cmd_rescale(ctx, manifest, trajectory_file);
    } else if (*limit) {
      command = "limit-sample";
      code = cli::cmd_limit_sample(ctx, manifest);
    } else if (*asym) {
      command = "asymptotics";
      code = cli::cmd_asymptotics(ctx, manifest);
    } else if (*verify) {
      command = "verify";
      code = cli::cmd_verify(ctx, manifest, run);
    } else if (*figure) {
      command = "figure";
      code = cli::cmd_figure(ctx, manifest);
    }
    run["command"] = command;
    run["exit_code"] = code;
    run["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    run["config"] = text;
    manifest.add_run(std::move(run));
    manifest.save();
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace sgdfclt
