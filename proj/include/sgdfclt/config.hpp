#pragma once

// Run configuration: an INI document with sections [model], [schedule],
// [run], [grid], [limit], [verify], [output] and [figure]. Vectors are
// written "a,b,c" and matrices "a,b;c,d" (rows separated by ';').
//
// Precedence, lowest first: built-in defaults, SGDFCLT_OUTPUT_DIR, the config
// file, --set overrides, dedicated command-line flags.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sgdfclt/csv.hpp"
#include "sgdfclt/linalg.hpp"
#include "sgdfclt/models.hpp"
#include "sgdfclt/sgd_engine.hpp"

namespace sgdfclt {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kOutputDirEnv = "SGDFCLT_OUTPUT_DIR";

struct RunConfig {
  ModelSpec model;
  StepSchedule schedule = StepSchedule::delta_over_n(2.0);

  std::uint64_t n = 50000;
  std::size_t trajectories = 1;  // simulate: one CSV each
  std::uint64_t seed = 1;
  Vector theta0{5.0};  // a single value is broadcast to every coordinate
  std::uint64_t stride = 1;
  unsigned threads = 0;

  Vector grid_times{0.5, 1.0};
  double horizon = 1.0;
  std::size_t grid_size = 1000;  // uniform grid used when grid_times is empty

  std::string sampler = "exact";
  std::size_t limit_paths = 1;
  double euler_t_start = 0.1;
  std::uint64_t euler_steps = 10000;

  std::vector<std::string> checks{"clt", "fdd"};
  std::size_t replications = 2000;
  std::vector<std::uint64_t> n_list{1000, 10000, 100000};
  std::vector<std::uint64_t> coefficient_n_list{100, 1000, 10000, 100000};
  Vector t_grid{0.5, 1.0};
  std::vector<Vector> y_grid;  // empty: +-e_i
  double c_multiplier = 10.0;
  double clt_relative_opnorm = 0.10;
  double clt_mean_se = 4.0;
  double fdd_se = 5.0;
  double drift_tolerance = 0.02;
  double diffusion_tolerance = 0.05;
  std::size_t mc_samples = 0;
  std::size_t sup_grid_size = 1000;
  std::size_t sup_paths = 10000;
  std::string sup_form = "proof";
  double exit_radius = 0.5;
  double exit_tolerance = 0.01;
  std::size_t exit_samples = 0;  // per point; 0 means 10 n

  std::string output_dir = "out";
  std::uint64_t burn_in = 2000;

  Vector start_point() const {
    if (theta0.size() == 1) return Vector(model.dim, theta0.front());
    return theta0;
  }

  std::vector<Vector> coefficient_points() const {
    if (!y_grid.empty()) return y_grid;
    std::vector<Vector> ys;
    for (std::size_t i = 0; i < model.dim; ++i)
      for (double s : {1.0, -1.0}) {
        Vector y(model.dim, 0.0);
        y[i] = s;
        ys.push_back(std::move(y));
      }
    return ys;
  }

  Vector limit_grid() const {
    if (!grid_times.empty()) return grid_times;
    Vector g(grid_size);
    for (std::size_t k = 0; k < grid_size; ++k)
      g[k] = horizon * static_cast<double>(k + 1) / static_cast<double>(grid_size);
    return g;
  }
};

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double x{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  return x;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t x{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return x;
}

inline Vector parse_vector(const std::string& key, const std::string& v) {
  Vector out;
  for (const auto& f : split(v, ',')) out.push_back(parse_double(key, f));
  return out;
}

inline std::vector<std::uint64_t> parse_uint_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& f : split(v, ',')) out.push_back(parse_uint(key, f));
  return out;
}

inline std::vector<Vector> parse_rows(const std::string& key, const std::string& v) {
  std::vector<Vector> rows;
  for (const auto& r : split(v, ';')) rows.push_back(parse_vector(key, r));
  return rows;
}

inline std::optional<SymMatrix> parse_sym(const std::string& key, const std::string& v) {
  const auto rows = parse_rows(key, v);
  if (rows.empty()) return std::nullopt;
  Matrix m(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw ConfigError(key + ": matrix must be square");
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  try {
    return SymMatrix(std::move(m));
  } catch (const LinalgError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline std::string join(const Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

inline std::string join(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

inline std::string join_rows(const std::vector<Vector>& rows) {
  std::string s;
  for (std::size_t i = 0; i < rows.size(); ++i) s += (i ? ";" : "") + join(rows[i]);
  return s;
}

inline std::string join(const std::optional<SymMatrix>& m) {
  if (!m) return {};
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < m->dim(); ++i) {
    Vector r(m->dim());
    for (std::size_t j = 0; j < m->dim(); ++j) r[j] = (*m)(i, j);
    rows.push_back(std::move(r));
  }
  return join_rows(rows);
}

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"clt",       "fdd",       "consistency", "tightness",   "coefficients",
                                              "sup_bound", "variances", "kernel",      "exit_probability"};
  return names;
}

}  // namespace detail

/// Flat "section.key" -> value view of a configuration.
using ConfigTree = boost::property_tree::ptree;

inline ConfigTree to_tree(const RunConfig& c) {
  using detail::join;
  ConfigTree t;
  t.put("model.kind", std::string(to_string(c.model.kind)));
  t.put("model.dim", std::to_string(c.model.dim));
  t.put("model.curvature", join(c.model.curvature));
  t.put("model.noise_cov", join(c.model.noise_cov));
  t.put("model.minimizer", c.model.minimizer ? join(*c.model.minimizer) : std::string());
  t.put("model.laplace_scale", format_double(c.model.laplace_scale));
  t.put("model.huber_c", format_double(c.model.huber_c));

  const bool power = c.schedule.kind == StepSchedule::Kind::power;
  t.put("schedule.kind", power ? "power" : "delta_over_n");
  t.put("schedule.delta", format_double(c.schedule.delta));
  t.put("schedule.c", format_double(c.schedule.c));
  t.put("schedule.alpha", format_double(c.schedule.alpha));

  t.put("run.n", std::to_string(c.n));
  t.put("run.trajectories", std::to_string(c.trajectories));
  t.put("run.seed", std::to_string(c.seed));
  t.put("run.theta0", join(c.theta0));
  t.put("run.stride", std::to_string(c.stride));
  t.put("run.threads", std::to_string(c.threads));

  t.put("grid.times", join(c.grid_times));
  t.put("grid.horizon", format_double(c.horizon));
  t.put("grid.size", std::to_string(c.grid_size));

  t.put("limit.sampler", c.sampler);
  t.put("limit.paths", std::to_string(c.limit_paths));
  t.put("limit.euler_t_start", format_double(c.euler_t_start));
  t.put("limit.euler_steps", std::to_string(c.euler_steps));

  t.put("verify.checks", join(c.checks));
  t.put("verify.replications", std::to_string(c.replications));
  t.put("verify.n_list", join(c.n_list));
  t.put("verify.coefficient_n_list", join(c.coefficient_n_list));
  t.put("verify.t_grid", join(c.t_grid));
  t.put("verify.y_grid", detail::join_rows(c.y_grid));
  t.put("verify.c_multiplier", format_double(c.c_multiplier));
  t.put("verify.clt_relative_opnorm", format_double(c.clt_relative_opnorm));
  t.put("verify.clt_mean_se", format_double(c.clt_mean_se));
  t.put("verify.fdd_se", format_double(c.fdd_se));
  t.put("verify.drift_tolerance", format_double(c.drift_tolerance));
  t.put("verify.diffusion_tolerance", format_double(c.diffusion_tolerance));
  t.put("verify.mc_samples", std::to_string(c.mc_samples));
  t.put("verify.sup_grid_size", std::to_string(c.sup_grid_size));
  t.put("verify.sup_paths", std::to_string(c.sup_paths));
  t.put("verify.sup_form", c.sup_form);
  t.put("verify.exit_radius", format_double(c.exit_radius));
  t.put("verify.exit_tolerance", format_double(c.exit_tolerance));
  t.put("verify.exit_samples", std::to_string(c.exit_samples));

  t.put("output.dir", c.output_dir);
  t.put("figure.burn_in", std::to_string(c.burn_in));
  return t;
}

/// Builds and validates a configuration from a tree whose keys are a subset
/// of to_tree(RunConfig{}). Unknown keys are rejected.
inline RunConfig from_tree(const ConfigTree& tree) {
  using namespace detail;
  const ConfigTree defaults = to_tree(RunConfig{});
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' must be inside a section");
    const auto known = defaults.get_child_optional(section);
    if (!known) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      (void)value;
      if (!known->get_child_optional(key)) throw ConfigError("unknown key " + section + "." + key);
    }
  }
  auto get = [&](const std::string& key) {
    return trim(tree.get<std::string>(key, defaults.get<std::string>(key)));
  };

  RunConfig c;
  const auto kind = parse_model_kind(get("model.kind"));
  if (!kind) throw ConfigError("model.kind: unknown model '" + get("model.kind") + "'");
  c.model.kind = *kind;
  c.model.dim = parse_uint("model.dim", get("model.dim"));
  if (c.model.dim == 0) throw ConfigError("model.dim must be >= 1");
  c.model.curvature = parse_sym("model.curvature", get("model.curvature"));
  c.model.noise_cov = parse_sym("model.noise_cov", get("model.noise_cov"));
  if (auto m = parse_vector("model.minimizer", get("model.minimizer")); !m.empty()) c.model.minimizer = std::move(m);
  c.model.laplace_scale = parse_double("model.laplace_scale", get("model.laplace_scale"));
  c.model.huber_c = parse_double("model.huber_c", get("model.huber_c"));

  const std::string sk = get("schedule.kind");
  if (sk == "delta_over_n") {
    c.schedule.kind = StepSchedule::Kind::delta_over_n;
  } else if (sk == "power") {
    c.schedule.kind = StepSchedule::Kind::power;
  } else {
    throw ConfigError("schedule.kind: expected delta_over_n or power, got '" + sk + "'");
  }
  c.schedule.delta = parse_double("schedule.delta", get("schedule.delta"));
  c.schedule.c = parse_double("schedule.c", get("schedule.c"));
  c.schedule.alpha = parse_double("schedule.alpha", get("schedule.alpha"));

  c.n = parse_uint("run.n", get("run.n"));
  c.trajectories = parse_uint("run.trajectories", get("run.trajectories"));
  c.seed = parse_uint("run.seed", get("run.seed"));
  c.theta0 = parse_vector("run.theta0", get("run.theta0"));
  c.stride = parse_uint("run.stride", get("run.stride"));
  c.threads = static_cast<unsigned>(parse_uint("run.threads", get("run.threads")));

  c.grid_times = parse_vector("grid.times", get("grid.times"));
  c.horizon = parse_double("grid.horizon", get("grid.horizon"));
  c.grid_size = parse_uint("grid.size", get("grid.size"));

  c.sampler = get("limit.sampler");
  c.limit_paths = parse_uint("limit.paths", get("limit.paths"));
  c.euler_t_start = parse_double("limit.euler_t_start", get("limit.euler_t_start"));
  c.euler_steps = parse_uint("limit.euler_steps", get("limit.euler_steps"));

  c.checks = split(get("verify.checks"), ',');
  c.replications = parse_uint("verify.replications", get("verify.replications"));
  c.n_list = parse_uint_list("verify.n_list", get("verify.n_list"));
  c.coefficient_n_list = parse_uint_list("verify.coefficient_n_list", get("verify.coefficient_n_list"));
  c.t_grid = parse_vector("verify.t_grid", get("verify.t_grid"));
  c.y_grid = parse_rows("verify.y_grid", get("verify.y_grid"));
  c.c_multiplier = parse_double("verify.c_multiplier", get("verify.c_multiplier"));
  c.clt_relative_opnorm = parse_double("verify.clt_relative_opnorm", get("verify.clt_relative_opnorm"));
  c.clt_mean_se = parse_double("verify.clt_mean_se", get("verify.clt_mean_se"));
  c.fdd_se = parse_double("verify.fdd_se", get("verify.fdd_se"));
  c.drift_tolerance = parse_double("verify.drift_tolerance", get("verify.drift_tolerance"));
  c.diffusion_tolerance = parse_double("verify.diffusion_tolerance", get("verify.diffusion_tolerance"));
  c.mc_samples = parse_uint("verify.mc_samples", get("verify.mc_samples"));
  c.sup_grid_size = parse_uint("verify.sup_grid_size", get("verify.sup_grid_size"));
  c.sup_paths = parse_uint("verify.sup_paths", get("verify.sup_paths"));
  c.sup_form = get("verify.sup_form");
  c.exit_radius = parse_double("verify.exit_radius", get("verify.exit_radius"));
  c.exit_tolerance = parse_double("verify.exit_tolerance", get("verify.exit_tolerance"));
  c.exit_samples = parse_uint("verify.exit_samples", get("verify.exit_samples"));

  c.output_dir = get("output.dir");
  c.burn_in = parse_uint("figure.burn_in", get("figure.burn_in"));
  return c;
}

/// Structural checks that need no computation.
inline void validate(const RunConfig& c) {
  if (c.n == 0) throw ConfigError("run.n must be >= 1");
  if (c.stride == 0) throw ConfigError("run.stride must be >= 1");
  if (c.trajectories == 0) throw ConfigError("run.trajectories must be >= 1");
  if (c.theta0.size() != 1 && c.theta0.size() != c.model.dim)
    throw ConfigError("run.theta0 must have one value or model.dim values");
  try {
    c.schedule.validate();
  } catch (const ScheduleError& e) {
    throw ConfigError(e.what());
  }
  for (std::size_t k = 0; k < c.grid_times.size(); ++k) {
    if (!(c.grid_times[k] > 0.0)) throw ConfigError("grid.times must be positive");
    if (k > 0 && !(c.grid_times[k] > c.grid_times[k - 1])) throw ConfigError("grid.times must be strictly increasing");
  }
  if (!(c.horizon > 0.0)) throw ConfigError("grid.horizon must be > 0");
  if (c.grid_times.empty() && c.grid_size == 0) throw ConfigError("grid.size must be >= 1");
  if (c.sampler != "exact" && c.sampler != "euler") throw ConfigError("limit.sampler must be exact or euler");
  if (c.limit_paths == 0) throw ConfigError("limit.paths must be >= 1");
  if (!(c.euler_t_start > 0.0)) throw ConfigError("limit.euler_t_start must be > 0");
  if (c.euler_steps == 0) throw ConfigError("limit.euler_steps must be >= 1");
  for (const auto& ch : c.checks)
    if (std::find(detail::known_checks().begin(), detail::known_checks().end(), ch) == detail::known_checks().end())
      throw ConfigError("verify.checks: unknown check '" + ch + "'");
  if (c.sup_form != "proof" && c.sup_form != "as_stated") throw ConfigError("verify.sup_form must be proof or as_stated");
  for (const auto& y : c.y_grid)
    if (y.size() != c.model.dim) throw ConfigError("verify.y_grid rows must have model.dim entries");
  if (c.output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

inline std::string serialize(const RunConfig& c) {
  std::ostringstream out;
  boost::property_tree::write_ini(out, to_tree(c));
  return out.str();
}

inline ConfigTree parse_ini(std::istream& in, const std::string& origin = "config") {
  ConfigTree t;
  try {
    boost::property_tree::read_ini(in, t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return t;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return from_tree(parse_ini(in));
}

/// Copies every leaf of `overlay` onto `base`.
inline void merge_into(ConfigTree& base, const ConfigTree& overlay) {
  for (const auto& [section, body] : overlay) {
    if (body.empty()) {
      base.put(section, body.data());
      continue;
    }
    for (const auto& [key, value] : body) base.put(ConfigTree::path_type(section + "." + key), value.data());
  }
}

/// Applies "section.key=value".
inline void apply_override(ConfigTree& tree, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must look like section.key=value");
  const std::string key = detail::trim(assignment.substr(0, eq));
  if (key.find('.') == std::string::npos) throw ConfigError("override key must be section.key: " + key);
  tree.put(key, detail::trim(assignment.substr(eq + 1)));
}

/// Defaults with the output directory taken from the environment when set.
inline ConfigTree default_tree() {
  ConfigTree t = to_tree(RunConfig{});
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) t.put("output.dir", std::string(env));
  return t;
}

}  // namespace sgdfclt
