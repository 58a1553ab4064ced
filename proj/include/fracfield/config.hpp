#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracfield/domain.hpp"
#include "fracfield/error.hpp"
#include "fracfield/model.hpp"
#include "fracfield/spectral.hpp"

namespace fracfield {

inline constexpr int kSchemaVersion = 1;

enum class Task { solve, sweep_lambda, multiplicity, verify_extension, morse, report };

constexpr std::string_view to_string(Task t) noexcept {
  switch (t) {
    case Task::solve: return "solve";
    case Task::sweep_lambda: return "sweep-lambda";
    case Task::multiplicity: return "multiplicity";
    case Task::verify_extension: return "verify-extension";
    case Task::morse: return "morse";
    case Task::report: return "report";
  }
  return "unknown";
}

inline std::optional<Task> task_from_string(std::string_view s) {
  for (Task t : {Task::solve, Task::sweep_lambda, Task::multiplicity, Task::verify_extension,
                 Task::morse, Task::report})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

struct DomainConfig {
  Shape shape = Shape::disk;
  ShapeParams params = ShapeParams::disk(1.0);
  double lambda = 1.0;
  double h = 0.25;
};

struct SolverConfig {
  /// Retained modes; 0 = default cap, kFullBasis = every mode ("full").
  std::size_t modes = kFullBasis;
  double tol = 1e-8;
  int max_iter = 20000;
  int n_starts = 4;
  std::uint64_t rng_seed = 1;
};

struct TopologyConfig {
  /// Band r of the neighborhoods Omega_lambda^+- (domain units).
  double band = 0.25;
  int seed_count = 8;
  bool saddle_search = false;
};

struct RunConfig {
  Task task = Task::solve;
  DomainConfig domain;
  PowerNonlinearity model;
  SolverConfig solver;
  TopologyConfig topology;
  /// Scale factors for sweep-lambda.
  std::vector<double> lambdas;
  /// Ball radii for the limit-level estimate (report task).
  std::vector<double> limit_radii{2.0, 4.0, 8.0};
  /// verify-extension grid.
  std::vector<double> extension_alphas;
  std::vector<double> extension_mus{1.0, 2.0, 4.0, 8.0};
  double extension_s_max = 40.0;
  bool field_dumps = false;
  /// Canonical JSON of the effective configuration (hashed into outputs).
  nlohmann::json canonical;

  GridDomain build() const { return build_domain(domain.shape, domain.params, domain.lambda, domain.h); }
};

namespace detail {

[[noreturn]] inline void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::ConfigInvalid, "field \"" + field + "\": " + why);
}

inline const nlohmann::json* child(const nlohmann::json& obj, const std::string& key,
                                   const std::string& path) {
  if (!obj.is_object()) invalid(path, "expected an object");
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double get_number(const nlohmann::json& obj, const std::string& key, const std::string& path,
                         std::optional<double> fallback) {
  const auto* v = child(obj, key, path);
  const std::string name = path.empty() ? key : path + "." + key;
  if (!v) {
    if (!fallback) invalid(name, "missing required field");
    return *fallback;
  }
  if (!v->is_number()) invalid(name, "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) invalid(name, "must be finite");
  return x;
}

inline int get_int(const nlohmann::json& obj, const std::string& key, const std::string& path,
                   int fallback) {
  const auto* v = child(obj, key, path);
  const std::string name = path.empty() ? key : path + "." + key;
  if (!v) return fallback;
  if (!v->is_number_integer()) invalid(name, "expected an integer");
  return v->get<int>();
}

inline std::vector<double> get_list(const nlohmann::json& obj, const std::string& key,
                                    const std::string& path, std::vector<double> fallback) {
  const auto* v = child(obj, key, path);
  const std::string name = path.empty() ? key : path + "." + key;
  if (!v) return fallback;
  if (!v->is_array()) invalid(name, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& x : *v) {
    if (!x.is_number()) invalid(name, "expected a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) invalid(field, why);
}

}  // namespace detail

/// Stable 64-bit FNV-1a digest rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

/// Digest of the canonical configuration; stamped on every output file.
inline std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(cfg.canonical.dump()); }

/// Parses and validates a run configuration. `task_override` (a subcommand
/// name) replaces the "task" key; `seed_override` replaces solver.rng_seed.
/// Every failure is ConfigInvalid naming the offending field.
inline RunConfig parse_config(const nlohmann::json& j, std::optional<Task> task_override = {},
                              std::optional<std::uint64_t> seed_override = {}) {
  using namespace detail;
  if (!j.is_object()) invalid("<root>", "configuration must be a JSON object");
  RunConfig cfg;

  if (task_override) {
    cfg.task = *task_override;
  } else {
    const auto* t = child(j, "task", "");
    if (!t) invalid("task", "missing required field (or pass a subcommand)");
    if (!t->is_string()) invalid("task", "expected a string");
    auto parsed = task_from_string(t->get<std::string>());
    if (!parsed) invalid("task", "unknown task '" + t->get<std::string>() + "'");
    cfg.task = *parsed;
  }

  nlohmann::json canon;
  canon["task"] = std::string(to_string(cfg.task));

  // model
  const nlohmann::json empty = nlohmann::json::object();
  const auto* model = child(j, "model", "");
  if (!model) invalid("model.alpha", "missing required field (no \"model\" section)");
  cfg.model.alpha = get_number(*model, "alpha", "model", std::nullopt);
  cfg.model.p = get_number(*model, "p", "model", 2.0);
  cfg.model.theta = get_number(*model, "theta", "model", 3.0);
  cfg.model.q = get_number(*model, "q", "model", 3.5);
  require(cfg.model.alpha > 0.0 && cfg.model.alpha < 1.0, "model.alpha", "must lie in (0, 1)");
  require(cfg.model.p > 1.0, "model.p", "must exceed 1");
  require(cfg.model.theta > 2.0, "model.theta", "must exceed 2");
  require(cfg.model.q > 2.0, "model.q", "must exceed 2");
  canon["model"] = {{"alpha", cfg.model.alpha}, {"p", cfg.model.p}, {"theta", cfg.model.theta},
                    {"q", cfg.model.q}};

  // domain (unused by verify-extension)
  const auto* dom = child(j, "domain", "");
  if (cfg.task != Task::verify_extension || dom) {
    if (!dom) invalid("domain", "missing required section");
    const auto* shape = child(*dom, "shape", "domain");
    if (!shape) invalid("domain.shape", "missing required field");
    if (!shape->is_string()) invalid("domain.shape", "expected a string");
    const std::string sname = shape->get<std::string>();
    if (sname == "rectangle") cfg.domain.shape = Shape::rectangle;
    else if (sname == "disk") cfg.domain.shape = Shape::disk;
    else if (sname == "annulus") cfg.domain.shape = Shape::annulus;
    else invalid("domain.shape", "unknown shape '" + sname + "' (rectangle, disk, annulus)");

    const auto* params = child(*dom, "params", "domain");
    const nlohmann::json& pj = params ? *params : empty;
    nlohmann::json pcanon;
    switch (cfg.domain.shape) {
      case Shape::rectangle: {
        const double w = get_number(pj, "width", "domain.params", 1.0);
        const double ht = get_number(pj, "height", "domain.params", 1.0);
        require(w > 0.0, "domain.params.width", "must be positive");
        require(ht > 0.0, "domain.params.height", "must be positive");
        cfg.domain.params = ShapeParams::rectangle(w, ht);
        pcanon = {{"width", w}, {"height", ht}};
        break;
      }
      case Shape::disk: {
        const double r = get_number(pj, "radius", "domain.params", 1.0);
        require(r > 0.0, "domain.params.radius", "must be positive");
        cfg.domain.params = ShapeParams::disk(r);
        pcanon = {{"radius", r}};
        break;
      }
      case Shape::annulus: {
        const double ro = get_number(pj, "outer_radius", "domain.params", 1.0);
        const double ri = get_number(pj, "inner_radius", "domain.params", 0.4);
        require(ri > 0.0, "domain.params.inner_radius", "must be positive");
        require(ri < ro, "domain.params.inner_radius", "must be below outer_radius");
        cfg.domain.params = ShapeParams::annulus(ro, ri);
        pcanon = {{"outer_radius", ro}, {"inner_radius", ri}};
        break;
      }
    }
    cfg.domain.lambda = get_number(*dom, "lambda", "domain", 1.0);
    cfg.domain.h = get_number(*dom, "h", "domain", std::nullopt);
    require(cfg.domain.lambda > 0.0, "domain.lambda", "must be positive");
    require(cfg.domain.h > 0.0, "domain.h", "must be positive");
    canon["domain"] = {{"shape", sname}, {"params", pcanon}, {"lambda", cfg.domain.lambda},
                       {"h", cfg.domain.h}};
  }

  // solver
  const auto* sol = child(j, "solver", "");
  const nlohmann::json& sj = sol ? *sol : empty;
  if (const auto* k = child(sj, "K", "solver")) {
    if (k->is_string() && k->get<std::string>() == "full") cfg.solver.modes = kFullBasis;
    else if (k->is_number_integer() && k->get<long long>() >= 0)
      cfg.solver.modes = static_cast<std::size_t>(k->get<long long>());
    else invalid("solver.K", "expected a nonnegative integer or \"full\"");
  }
  cfg.solver.tol = get_number(sj, "tol", "solver", 1e-8);
  cfg.solver.max_iter = get_int(sj, "max_iter", "solver", 20000);
  cfg.solver.n_starts = get_int(sj, "n_starts", "solver", 4);
  if (const auto* s = child(sj, "rng_seed", "solver")) {
    if (!s->is_number_unsigned()) invalid("solver.rng_seed", "expected a nonnegative integer");
    cfg.solver.rng_seed = s->get<std::uint64_t>();
  }
  if (seed_override) cfg.solver.rng_seed = *seed_override;
  require(cfg.solver.tol > 0.0, "solver.tol", "must be positive");
  require(cfg.solver.max_iter >= 1, "solver.max_iter", "must be at least 1");
  require(cfg.solver.n_starts >= 1, "solver.n_starts", "must be at least 1");
  canon["solver"] = {{"K", cfg.solver.modes == kFullBasis ? nlohmann::json("full")
                                                          : nlohmann::json(cfg.solver.modes)},
                     {"tol", cfg.solver.tol},
                     {"max_iter", cfg.solver.max_iter},
                     {"n_starts", cfg.solver.n_starts},
                     {"rng_seed", cfg.solver.rng_seed}};

  // topology
  const auto* top = child(j, "topology", "");
  const nlohmann::json& tj = top ? *top : empty;
  cfg.topology.band = get_number(tj, "band", "topology", 0.25);
  cfg.topology.seed_count = get_int(tj, "seed_count", "topology", 8);
  if (const auto* s = child(tj, "saddle_search", "topology")) {
    if (!s->is_boolean()) invalid("topology.saddle_search", "expected true or false");
    cfg.topology.saddle_search = s->get<bool>();
  }
  require(cfg.topology.band > 0.0, "topology.band", "must be positive");
  require(cfg.topology.seed_count >= 1, "topology.seed_count", "must be at least 1");
  canon["topology"] = {{"band", cfg.topology.band},
                       {"seed_count", cfg.topology.seed_count},
                       {"saddle_search", cfg.topology.saddle_search}};

  // task-specific sections
  const auto* sweep = child(j, "sweep", "");
  cfg.lambdas = get_list(sweep ? *sweep : empty, "lambdas", "sweep", {});
  if (cfg.task == Task::sweep_lambda) {
    require(cfg.lambdas.size() >= 2, "sweep.lambdas", "sweep needs at least two lambda values");
    for (double l : cfg.lambdas) require(l > 0.0, "sweep.lambdas", "values must be positive");
    canon["sweep"] = {{"lambdas", cfg.lambdas}};
  }

  const auto* lim = child(j, "limit", "");
  cfg.limit_radii = get_list(lim ? *lim : empty, "radii", "limit", cfg.limit_radii);
  if (cfg.task == Task::report || cfg.task == Task::sweep_lambda) {
    require(cfg.limit_radii.size() >= 3, "limit.radii", "need at least three radii");
    for (std::size_t i = 1; i < cfg.limit_radii.size(); ++i)
      require(cfg.limit_radii[i] > cfg.limit_radii[i - 1] && cfg.limit_radii[0] > 0.0,
              "limit.radii", "radii must be positive and increasing");
    canon["limit"] = {{"radii", cfg.limit_radii}};
  }

  const auto* ext = child(j, "extension", "");
  const nlohmann::json& ej = ext ? *ext : empty;
  cfg.extension_alphas = get_list(ej, "alphas", "extension", {cfg.model.alpha});
  cfg.extension_mus = get_list(ej, "mus", "extension", cfg.extension_mus);
  cfg.extension_s_max = get_number(ej, "s_max", "extension", cfg.extension_s_max);
  if (cfg.task == Task::verify_extension) {
    for (double a : cfg.extension_alphas)
      require(a > 0.0 && a < 1.0, "extension.alphas", "values must lie in (0, 1)");
    require(!cfg.extension_mus.empty(), "extension.mus", "need at least one value");
    for (double m : cfg.extension_mus) require(m > 0.0, "extension.mus", "values must be positive");
    require(cfg.extension_s_max >= 5.0, "extension.s_max", "must be at least 5");
    canon["extension"] = {{"alphas", cfg.extension_alphas},
                          {"mus", cfg.extension_mus},
                          {"s_max", cfg.extension_s_max}};
  }

  const auto* out = child(j, "output", "");
  if (out) {
    if (const auto* d = child(*out, "field_dumps", "output")) {
      if (!d->is_boolean()) invalid("output.field_dumps", "expected true or false");
      cfg.field_dumps = d->get<bool>();
    }
  }
  canon["output"] = {{"field_dumps", cfg.field_dumps}};
  cfg.canonical = std::move(canon);
  return cfg;
}

/// Reads and parses a configuration file; JSON syntax errors report the
/// line and column.
inline RunConfig load_config(const std::string& path, std::optional<Task> task_override = {},
                             std::optional<std::uint64_t> seed_override = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::ConfigInvalid, path + ":" + std::to_string(line) + ":" +
                                              std::to_string(col) + ": " + e.what());
  }
  return parse_config(j, task_override, seed_override);
}

}  // namespace fracfield
