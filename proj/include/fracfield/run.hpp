#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracfield/config.hpp"
#include "fracfield/domain.hpp"
#include "fracfield/error.hpp"
#include "fracfield/extension.hpp"
#include "fracfield/model.hpp"
#include "fracfield/morse.hpp"
#include "fracfield/nehari.hpp"
#include "fracfield/spectral.hpp"
#include "fracfield/topology.hpp"

namespace fracfield {

struct RunOptions {
  std::filesystem::path out_dir = "out";
  int workers = 1;
  bool quiet = false;
  /// Progress messages go here unless quiet.
  std::ostream* log = &std::cerr;
};

struct RunResult {
  nlohmann::json results;
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline double or_nan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

template <class T>
std::string csv_optional(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string();
}

/// Runs a pipeline stage, re-raising solver failures as TaskFailed naming it.
template <class F>
auto stage(const std::string& name, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigInvalid || e.kind() == ErrorKind::TaskFailed) throw;
    throw Error(ErrorKind::TaskFailed, "stage '" + name + "': " + e.what());
  }
}

class Writer {
 public:
  Writer(const RunConfig& cfg, const RunOptions& opt, RunResult& result)
      : cfg_(cfg), opt_(opt), result_(result), hash_(config_hash(cfg)) {
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec)
      throw Error(ErrorKind::TaskFailed, "stage 'output': cannot create directory '" +
                                             opt.out_dir.string() + "': " + ec.message());
  }

  const std::string& hash() const { return hash_; }

  std::string header_comment() const {
    return "# fracfield schema_version=" + std::to_string(kSchemaVersion) +
           " config_hash=" + hash_ + " task=" + std::string(to_string(cfg_.task)) + "\n";
  }

  void csv(const std::string& name, const std::string& columns,
           const std::vector<std::string>& rows) {
    std::ostringstream os;
    os << header_comment() << columns << '\n';
    for (const auto& r : rows) os << r << '\n';
    write(name, os.str());
  }

  void field_dump(const std::string& name, const SpectralBasis& basis, const Eigen::VectorXd& v) {
    std::ostringstream os;
    os << header_comment();
    write_field_dump(os, basis, v);
    write(name, os.str());
  }

  void json(const nlohmann::json& body) {
    nlohmann::json doc = body;
    doc["schema_version"] = kSchemaVersion;
    doc["config_hash"] = hash_;
    doc["task"] = std::string(to_string(cfg_.task));
    doc["config"] = cfg_.canonical;
    result_.results = doc;
    write("results.json", doc.dump(2) + "\n");
  }

  void text(const std::string& name, const std::string& content) { write(name, content); }

  void say(const std::string& msg) const {
    if (!opt_.quiet && opt_.log) *opt_.log << "fracfield: " << msg << '\n';
  }

 private:
  void write(const std::string& name, const std::string& text) {
    const auto path = opt_.out_dir / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out)
      throw Error(ErrorKind::TaskFailed, "stage 'output': cannot write '" + path.string() + "'");
    result_.files.push_back(path);
  }

  const RunConfig& cfg_;
  const RunOptions& opt_;
  RunResult& result_;
  std::string hash_;
};

inline SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o;
  o.tol = cfg.solver.tol;
  o.max_iter = cfg.solver.max_iter;
  return o;
}

}  // namespace detail

/// JSON view of a record (the field itself goes to dump files).
inline nlohmann::json record_json(const SolutionRecord& r) {
  nlohmann::json j;
  j["seed_tag"] = r.seed_tag;
  j["energy"] = r.energy;
  j["residual"] = r.residual;
  j["nehari_residual"] = r.nehari_residual;
  j["quadratic"] = r.quadratic;
  j["barycenter"] = {r.barycenter.x, r.barycenter.y};
  j["morse_index"] = r.morse_index ? nlohmann::json(*r.morse_index) : nlohmann::json(nullptr);
  j["null_count"] = r.null_count ? nlohmann::json(*r.null_count) : nlohmann::json(nullptr);
  j["orbit_size"] = r.orbit_size;
  j["positive"] = r.positive;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  if (!r.u.empty()) {
    j["max_value"] = r.u.values().maxCoeff();
    j["min_value"] = r.u.values().minCoeff();
  }
  return j;
}

/// Ball basis for c(B_radius) on the lattice of spacing h. Ball ground states
/// are symmetric, so the invariant subspace suffices and is much cheaper.
inline SpectralBasis cli_ball_basis(double radius, double alpha, double h) {
  return ball_basis(radius, alpha, DiscretizationSpec{h, kFullBasis, true});
}

namespace detail {

inline std::string solution_row(double lambda, const SolutionRecord& r, bool with_null = false) {
  std::string row = csv_number(lambda) + "," + csv_number(r.energy) + "," + csv_number(r.residual) +
                    "," + std::to_string(r.iterations) + "," + csv_number(r.barycenter.x) + "," +
                    csv_number(r.barycenter.y) + "," + csv_optional(r.morse_index);
  if (with_null) row += "," + csv_optional(r.null_count);
  return row;
}

inline const char* kSolutionColumns =
    "lambda,level,residual,iterations,barycenter_x,barycenter_y,morse_index";

inline nlohmann::json count_json(const MorseCountReport& c) {
  return {{"topology", c.topology},
          {"poincare", c.poincare},
          {"relation_polynomial", c.relation_polynomial},
          {"target_total", c.target_total},
          {"target_index1", c.target_index1},
          {"target_index2", c.target_index2},
          {"found_index1", c.found_index1},
          {"found_index2", c.found_index2},
          {"found_other", c.found_other},
          {"classes_index1", c.classes_index1},
          {"classes_index2", c.classes_index2},
          {"degenerate_excluded", c.degenerate_excluded},
          {"matches", c.matches},
          {"meets_lower_bound", c.meets_lower_bound}};
}

inline void run_solve(const RunConfig& cfg, const RunOptions& opt, Writer& w, bool morse) {
  const auto dom = stage("domain", [&] { return cfg.build(); });
  w.say("domain " + std::string(to_string(dom.shape())) + " with " + std::to_string(dom.size()) +
        " nodes");
  const auto basis =
      stage("spectral", [&] { return assemble_and_decompose(dom, cfg.solver.modes, cfg.model.alpha); });
  auto level = stage("ground-state", [&] {
    return level_c(basis, cfg.model, cfg.solver.n_starts, cfg.solver.rng_seed,
                   solver_options(cfg), opt.workers);
  });
  SolutionRecord& rec = level.best;
  rec.orbit_size = orbit_size(rec.u.values(), dom.symmetry_permutations());
  w.say("level " + csv_number(level.level) + " from " + std::to_string(level.converged_starts) +
        "/" + std::to_string(level.total_starts) + " starts");

  nlohmann::json body;
  body["domain"] = {{"nodes", dom.size()}, {"modes", basis.modes()},
                    {"content_hash", dom.content_hash()}};
  body["level"] = {{"value", level.level}, {"spread", level.spread},
                   {"converged_starts", level.converged_starts},
                   {"total_starts", level.total_starts}};
  if (morse) {
    const auto spec = stage("morse", [&] { return hessian_spectrum(basis, cfg.model, rec.u); });
    rec.morse_index = spec.morse_index;
    rec.null_count = spec.null_count;
    const double ray = stage("morse", [&] {
      return ray_second_derivative(basis, cfg.model, rec.u, std::max(1e-8, 10.0 * cfg.solver.tol));
    });
    const auto count = morse_count_check({rec}, dom.shape());
    const auto lowest = std::min<Eigen::Index>(8, spec.eigenvalues.size());
    std::vector<double> low(spec.eigenvalues.data(), spec.eigenvalues.data() + lowest);
    body["hessian"] = {{"morse_index", spec.morse_index},
                       {"null_count", spec.null_count},
                       {"nondegenerate", spec.nondegenerate},
                       {"eps_null", spec.eps_null},
                       {"smallest_abs", spec.smallest_abs},
                       {"lowest_eigenvalues", low},
                       {"ray_second_derivative", ray}};
    body["morse_count"] = count_json(count);
  }
  body["records"] = nlohmann::json::array({record_json(rec)});
  w.json(body);
  w.csv("solutions.csv", std::string(kSolutionColumns) + (morse ? ",null_count" : ""),
        {solution_row(cfg.domain.lambda, rec, morse)});
  if (cfg.field_dumps) w.field_dump("field_ground_state.csv", basis, rec.u.values());
  if (!rec.converged)
    throw Error(ErrorKind::TaskFailed, "stage 'ground-state': best start did not converge");
}

/// Seed centres for the multiplicity search that admit a ball of radius
/// lambda * band inside the domain.
inline std::vector<Point> fitting_centers(const GridDomain& dom, int m, double ball_radius) {
  std::vector<Point> out;
  for (const Point& c : default_seed_centers(dom, m))
    if (neighborhood_membership(dom, c, ball_radius, Side::inner_minus)) out.push_back(c);
  return out;
}

struct MultiplicityRun {
  MultiplicityReport report;
  MorseCountReport count;
  std::optional<SaddleReport> saddle;
  std::vector<std::string> notes;
};

inline MultiplicityRun multiplicity_at(const RunConfig& cfg, const RunOptions& opt,
                                       const SpectralBasis& basis, bool saddle) {
  const auto& dom = basis.domain();
  MultiplicityRun out;
  MultiplicityOptions mo;
  mo.solver = solver_options(cfg);
  mo.band = cfg.topology.band;
  mo.workers = opt.workers;

  const double ball_radius = dom.lambda() * cfg.topology.band;
  std::optional<SpectralBasis> ball_basis_storage;
  try {
    ball_basis_storage = cli_ball_basis(ball_radius, cfg.model.alpha, dom.spacing());
    auto rec = ball_ground_state(*ball_basis_storage, cfg.model, mo.solver);
    if (!rec.converged) throw Error(ErrorKind::AllStartsFailed, "ball ground state did not converge");
    mo.ball = BallState{&*ball_basis_storage, std::move(rec)};
  } catch (const Error& e) {
    out.notes.push_back("no ball state on B_" + csv_number(ball_radius) + " (" + e.what() +
                        "); using Gaussian seeds and no level threshold");
  }
  auto centers = fitting_centers(dom, cfg.topology.seed_count, mo.ball ? ball_radius : dom.spacing());
  if (centers.empty())
    throw Error(ErrorKind::TaskFailed,
                "stage 'multiplicity': no seed centre admits a ball of radius " +
                    csv_number(ball_radius));
  out.report = stage("multiplicity", [&] { return multiplicity_search(basis, cfg.model, centers, mo); });
  if (out.report.classes.empty())
    throw Error(ErrorKind::TaskFailed, "stage 'multiplicity': no start converged");
  std::vector<SolutionRecord> recs;
  for (const auto& c : out.report.classes) recs.push_back(c.record);
  out.count = morse_count_check(recs, dom.shape());

  if (saddle) {
    const auto perms = dom.symmetry_permutations();
    const auto& first = out.report.classes.front().record;
    auto image = nearest_distinct_image(first.u.values(), perms, mo.dedupe.distance_rel);
    std::optional<Field> to;
    if (image) to = Field::from_values(basis, *image);
    else if (out.report.classes.size() > 1) to = out.report.classes[1].record.u;
    if (to) {
      SaddleSearchOptions so;
      so.solver = mo.solver;
      so.max_iter = 150;
      out.saddle = stage("saddle", [&] {
        return elastic_band_saddle(basis, cfg.model, first.u, *to, recs, so);
      });
      if (out.saddle->new_critical_point) {
        recs.push_back(out.saddle->saddle);
        out.count = morse_count_check(recs, dom.shape());
      }
    } else {
      out.notes.push_back("saddle search skipped: a single symmetric class has no distinct partner");
    }
  }
  return out;
}


inline void run_multiplicity(const RunConfig& cfg, const RunOptions& opt, Writer& w) {
  const auto dom = stage("domain", [&] { return cfg.build(); });
  const auto basis =
      stage("spectral", [&] { return assemble_and_decompose(dom, cfg.solver.modes, cfg.model.alpha); });
  w.say("multiplicity search on " + std::to_string(dom.size()) + " nodes");
  auto run = multiplicity_at(cfg, opt, basis, cfg.topology.saddle_search);
  const auto& rep = run.report;

  nlohmann::json body;
  body["domain"] = {{"nodes", dom.size()}, {"modes", basis.modes()},
                    {"content_hash", dom.content_hash()}};
  body["ball_level"] = number_or_null(or_nan(rep.ball_level));
  body["localization_holds"] = rep.localization_holds;
  body["starts_converged"] = rep.starts.size();
  body["log"] = rep.log;
  body["notes"] = run.notes;
  nlohmann::json classes = nlohmann::json::array();
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < rep.classes.size(); ++i) {
    const auto& e = rep.classes[i];
    auto j = record_json(e.record);
    j["id"] = i;
    j["members"] = e.members.size();
    j["below_ball_level"] = e.below_ball_level;
    j["beta_in_omega_plus"] = e.beta_in_omega_plus;
    j["smallest_abs_eigenvalue"] = e.smallest_abs_eigenvalue;
    classes.push_back(j);
    rows.push_back(std::to_string(i) + "," + csv_number(e.record.energy) + "," +
                   csv_number(e.record.barycenter.x) + "," + csv_number(e.record.barycenter.y) +
                   "," + csv_optional(e.record.morse_index) + "," +
                   std::to_string(e.record.orbit_size) + "," + (e.below_ball_level ? "1" : "0"));
    if (cfg.field_dumps) w.field_dump("field_class_" + std::to_string(i) + ".csv", basis, e.record.u.values());
  }
  body["records"] = classes;
  body["morse_count"] = count_json(run.count);
  if (run.saddle) {
    const auto& s = *run.saddle;
    body["saddle"] = {{"band_converged", s.converged},
                      {"band_iterations", s.band_iterations},
                      {"barrier", s.barrier},
                      {"path_energies", s.path_energies},
                      {"new_critical_point", s.new_critical_point},
                      {"duplicate_of", s.duplicate_of ? nlohmann::json(*s.duplicate_of)
                                                      : nlohmann::json(nullptr)},
                      {"record", record_json(s.saddle)},
                      {"smallest_abs_eigenvalue", s.spectrum.smallest_abs},
                      {"note", s.note}};
    if (cfg.field_dumps) w.field_dump("field_saddle.csv", basis, s.saddle.u.values());
  }
  w.json(body);
  w.csv("multiplicity.csv", "id,energy,bary_x,bary_y,morse_index,orbit_size,below_ball_level", rows);
}

inline void run_sweep(const RunConfig& cfg, const RunOptions& opt, Writer& w) {
  const double h = cfg.domain.h;
  const auto limit = stage("limit-level", [&] {
    return limit_level_estimate(cfg.model, cfg.limit_radii, DiscretizationSpec{h, kFullBasis, true},
                                solver_options(cfg), opt.workers);
  });
  w.say("limit level estimate " + csv_number(limit.estimate));

  struct Row {
    double lambda = 0.0;
    std::size_t nodes = 0;
    std::optional<SolutionRecord> best;
    double c_level = std::numeric_limits<double>::quiet_NaN();
    double ball_level = std::numeric_limits<double>::quiet_NaN();
    double annulus_level = std::numeric_limits<double>::quiet_NaN();
    int solution_count = 0;
    double margin = std::numeric_limits<double>::quiet_NaN();
    bool localized = false;
    double runtime = 0.0;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  for (double lambda : cfg.lambdas) {
    Row row;
    row.lambda = lambda;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RunConfig rc = cfg;
      rc.domain.lambda = lambda;
      const auto dom = stage("domain", [&] { return rc.build(); });
      row.nodes = dom.size();
      w.say("lambda " + csv_number(lambda) + ": " + std::to_string(dom.size()) + " nodes");
      const auto basis = stage("spectral", [&] {
        return assemble_and_decompose(dom, cfg.solver.modes, cfg.model.alpha);
      });
      auto level = stage("ground-state", [&] {
        return level_c(basis, cfg.model, cfg.solver.n_starts, cfg.solver.rng_seed,
                       solver_options(cfg), opt.workers);
      });
      auto mult = multiplicity_at(rc, opt, basis, false);
      // The multistart minimum and the multiplicity classes both sample the
      // Nehari manifold; the level is the lowest of them.
      row.c_level = level.level;
      row.best = level.best;
      for (const auto& e : mult.report.classes)
        if (e.record.energy < row.c_level) {
          row.c_level = e.record.energy;
          row.best = e.record;
        }
      row.ball_level = or_nan(mult.report.ball_level);
      row.solution_count = static_cast<int>(mult.report.classes.size());
      row.localized = mult.report.localization_holds;
      double margin = std::numeric_limits<double>::infinity();
      for (const auto& e : mult.report.classes)
        if (e.below_ball_level)
          margin = std::min(margin, cfg.topology.band - dom.distance_to_region(e.record.barycenter));
      if (std::isfinite(margin)) row.margin = margin;
      if (dom.shape() == Shape::annulus) {
        AnnulusLevelOptions ao;
        ao.solver.tol = cfg.solver.tol;
        ao.solver.max_iter = cfg.solver.max_iter;
        ao.workers = opt.workers;
        row.annulus_level = stage("annulus-level", [&] { return annulus_level(basis, cfg.model, ao); }).level;
      }
    } catch (const Error& e) {
      row.status = e.what();
      w.say("lambda " + csv_number(lambda) + " failed: " + e.what());
    }
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }

  // Threshold: first row from which every later row localizes.
  std::optional<std::size_t> threshold;
  for (std::size_t i = rows.size(); i-- > 0;) {
    if (rows[i].status != "ok" || !rows[i].localized) break;
    threshold = i;
  }

  nlohmann::json body;
  body["limit_estimate"] = {{"radii", limit.radii}, {"levels", limit.levels},
                            {"estimate", limit.estimate}, {"error", limit.error},
                            {"ratio", limit.ratio}};
  nlohmann::json jrows = nlohmann::json::array();
  std::vector<std::string> csv_rows, sol_rows;
  bool all_ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    all_ok = all_ok && r.status == "ok";
    const double limit_margin = r.c_level - limit.estimate;
    jrows.push_back({{"lambda", r.lambda},
                     {"nodes", r.nodes},
                     {"c_level", number_or_null(r.c_level)},
                     {"ball_level", number_or_null(r.ball_level)},
                     {"annulus_level", number_or_null(r.annulus_level)},
                     {"solution_count", r.solution_count},
                     {"min_barycenter_margin", number_or_null(r.margin)},
                     {"localized", r.localized},
                     {"threshold", threshold && *threshold == i},
                     {"limit_margin", number_or_null(limit_margin)},
                     {"status", r.status},
                     {"record", r.best ? record_json(*r.best) : nlohmann::json(nullptr)}});
    csv_rows.push_back(csv_number(r.lambda) + "," + csv_number(r.c_level) + "," +
                       csv_number(r.ball_level) + "," + csv_number(r.annulus_level) + "," +
                       std::to_string(r.solution_count) + "," + csv_number(r.margin) + "," +
                       (r.localized ? "1" : "0") + "," +
                       (threshold && *threshold == i ? "1" : "0") + "," +
                       csv_number(limit_margin) + "," + std::to_string(r.nodes) + "," +
                       csv_number(r.runtime) + "," + (r.status == "ok" ? "ok" : "failed"));
    if (r.best) sol_rows.push_back(solution_row(r.lambda, *r.best));
  }
  body["rows"] = jrows;
  w.json(body);
  w.csv("sweep.csv",
        "lambda,c_level,ball_level,annulus_level,solution_count,min_barycenter_margin,localized,"
        "threshold,limit_margin,nodes,runtime_s,status",
        csv_rows);
  w.csv("solutions.csv", kSolutionColumns, sol_rows);
  if (!all_ok) throw Error(ErrorKind::TaskFailed, "stage 'sweep': at least one row failed");
}

inline void run_verify_extension(const RunConfig& cfg, const RunOptions&, Writer& w) {
  constexpr double kTolerance = 1e-5;
  nlohmann::json rows_json = nlohmann::json::array();
  std::vector<std::string> rows;
  bool ok = true;
  for (double a : cfg.extension_alphas) {
    const auto prof = stage("bessel-profile", [&] { return bessel_profile(a, cfg.extension_s_max); });
    for (double mu : cfg.extension_mus) {
      const double computed = stage("quadrature", [&] { return extension_energy(prof, mu); });
      const double expected = std::pow(mu, a);
      const double rel = std::abs(computed - expected) / expected;
      ok = ok && rel <= kTolerance;
      rows_json.push_back({{"alpha", a}, {"mu", mu}, {"computed", computed},
                           {"expected", expected}, {"rel_err", rel},
                           {"k_alpha", prof.k_alpha()}, {"flux", prof.flux()}});
      std::ostringstream os;
      os << std::setprecision(10) << a << ',' << mu << ',' << computed << ',' << expected << ','
         << std::setprecision(3) << rel;
      rows.push_back(os.str());
    }
  }
  w.json({{"rows", rows_json}, {"tolerance", kTolerance}, {"passed", ok}});
  w.csv("extension.csv", "alpha,mu,computed,expected,rel_err", rows);
  if (!ok)
    throw Error(ErrorKind::TaskFailed, "stage 'verify-extension': relative error above 1e-5");
}

inline void run_report(const RunConfig& cfg, const RunOptions& opt, Writer& w) {
  const auto hyp = check_hypotheses(cfg.model);
  nlohmann::json jh = nlohmann::json::array();
  std::vector<std::string> hrows;
  for (const auto& c : hyp.checks) {
    jh.push_back({{"name", c.name}, {"passed", c.passed}, {"margin", c.margin}});
    hrows.push_back(c.name + "," + (c.passed ? "1" : "0") + "," + csv_number(c.margin));
  }
  const auto dom = stage("domain", [&] { return cfg.build(); });
  const auto basis =
      stage("spectral", [&] { return assemble_and_decompose(dom, cfg.solver.modes, cfg.model.alpha); });
  const auto limit = stage("limit-level", [&] {
    return limit_level_estimate(cfg.model, cfg.limit_radii,
                                DiscretizationSpec{cfg.domain.h, kFullBasis, true},
                                solver_options(cfg), opt.workers);
  });
  std::vector<std::string> lrows;
  for (std::size_t i = 0; i < limit.radii.size(); ++i)
    lrows.push_back(csv_number(limit.radii[i]) + "," + csv_number(limit.levels[i]));

  nlohmann::json body;
  body["hypotheses"] = jh;
  body["hypotheses_pass"] = hyp.all_passed();
  body["critical_exponent"] = cfg.model.two_star_alpha();
  body["domain"] = {{"nodes", dom.size()}, {"modes", basis.modes()}, {"area", dom.area()},
                    {"mu_1", basis.mu()[0]}, {"content_hash", dom.content_hash()}};
  body["limit_estimate"] = {{"radii", limit.radii}, {"levels", limit.levels},
                            {"estimate", limit.estimate}, {"error", limit.error},
                            {"ratio", limit.ratio}};
  w.json(body);
  w.csv("hypotheses.csv", "name,passed,margin", hrows);
  w.csv("limit.csv", "radius,level", lrows);
  std::ostringstream eig;
  eig << w.header_comment();
  write_eigenvalues_csv(eig, basis);
  w.text("eigenvalues.csv", eig.str());
}

}  // namespace detail

/// Executes the configured task and writes its artifacts under out_dir.
/// Throws ConfigInvalid or TaskFailed (naming the failing stage).
inline RunResult run(const RunConfig& cfg, const RunOptions& opt = {}) {
  RunResult result;
  detail::Writer w(cfg, opt, result);
  switch (cfg.task) {
    case Task::solve: detail::run_solve(cfg, opt, w, false); break;
    case Task::morse: detail::run_solve(cfg, opt, w, true); break;
    case Task::multiplicity: detail::run_multiplicity(cfg, opt, w); break;
    case Task::sweep_lambda: detail::run_sweep(cfg, opt, w); break;
    case Task::verify_extension: detail::run_verify_extension(cfg, opt, w); break;
    case Task::report: detail::run_report(cfg, opt, w); break;
  }
  return result;
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitTaskFailed = 3;

/// Exit status for an error raised by load_config/run.
inline int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::ConfigInvalid ? kExitConfigInvalid : kExitTaskFailed;
}

}  // namespace fracfield
