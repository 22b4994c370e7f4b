// Batch front-end: JSON scenario configs in, JSON reports and CSV curves out.
//
// Subcommands: moment, weight, psi, flow, stability, filt, vortex. Every
// config is schema-checked (unknown fields rejected) before execution, and
// reports are deterministic for a fixed seed: everything outside the
// "metadata" block is byte-stable across reruns.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "kn/filtstab.hpp"
#include "kn/kempfness.hpp"
#include "kn/vortexlat.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kn;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  if (!j.is_object()) throw CliError(ctx + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw CliError(ctx + ": unknown field '" + it.key() + "'");
  }
}

Complex parse_complex(const json& j, const std::string& ctx) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return Complex(j[0].get<double>(), j[1].get<double>());
  }
  throw CliError(ctx + ": expected a number or [re, im]");
}

Matrix parse_matrix(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) throw CliError(ctx + ": expected a matrix");
  const size_t rows = j.size();
  const size_t cols = j[0].is_array() && !(j[0].size() == 2 && j[0][0].is_number())
                          ? j[0].size()
                          : 0;
  if (cols == 0) throw CliError(ctx + ": expected rows of complex entries");
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw CliError(ctx + ": ragged matrix");
    }
    for (size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_complex(j[r][c], ctx);
    }
  }
  return m;
}

Vector parse_vector(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) throw CliError(ctx + ": expected a vector");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = parse_complex(j[i], ctx);
  }
  return v;
}

json complex_to_json(const Complex& z) { return json::array({z.real(), z.imag()}); }

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

Target parse_target(const json& j) {
  check_keys(j, {"kind", "n", "tau", "k", "R", "ranks", "taus"}, "target");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") return Target(LinearTarget{j.at("n").get<int>()});
  if (kind == "projective") {
    ProjectiveTarget t{j.at("n").get<int>(), j.value("tau", 1.0)};
    return Target(t);
  }
  if (kind == "grassmann") {
    GrassmannTarget t{j.at("k").get<int>(), j.at("R").get<int>(), j.value("tau", 1.0)};
    return Target(t);
  }
  if (kind == "flag") {
    FlagTarget t;
    t.ranks = j.at("ranks").get<std::vector<int>>();
    t.taus = j.at("taus").get<std::vector<double>>();
    t.R = j.at("R").get<int>();
    return Target(std::move(t));
  }
  throw CliError("target: unknown kind '" + kind + "'");
}

TargetPoint parse_point(const json& j, const Target& t) {
  check_keys(j, {"vector", "columns"}, "point");
  return std::visit(
      [&](auto&& tt) -> TargetPoint {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          return make_linear_point(parse_vector(j.at("vector"), "point.vector"));
        } else if constexpr (std::is_same_v<T, ProjectiveTarget>) {
          return make_projective_point(parse_vector(j.at("vector"), "point.vector"));
        } else if constexpr (std::is_same_v<T, GrassmannTarget>) {
          return make_grassmann_point(parse_matrix(j.at("columns"), "point.columns"));
        } else {
          return make_flag_point(parse_matrix(j.at("columns"), "point.columns"));
        }
      },
      t.v);
}

ActingGroup parse_group(const json& j, int m) {
  check_keys(j, {"kind", "weights"}, "group");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "full") return ActingGroup::full_unitary(m);
  if (kind == "standard_torus") return ActingGroup::standard_torus(m);
  if (kind == "traceless_torus") return ActingGroup::traceless_torus(m);
  if (kind == "diagonal_torus") {
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd w(rows.size(), m);
    for (size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(rows[r].size()) != m) {
        throw CliError("group.weights: row length must equal the ambient dimension");
      }
      for (int c = 0; c < m; ++c) w(static_cast<Eigen::Index>(r), c) = rows[r][c];
    }
    return ActingGroup::diagonal_torus(w);
  }
  throw CliError("group: unknown kind '" + kind + "'");
}

AlgebraElement parse_central(const json& j, int m) {
  if (j.is_number()) {
    return AlgebraElement::skew(Complex(0.0, j.get<double>()) *
                                Matrix::Identity(m, m));
  }
  check_keys(j, {"matrix"}, "c");
  return AlgebraElement::skew(parse_matrix(j.at("matrix"), "c.matrix"));
}

Rational parse_rational(const json& j, const std::string& ctx) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const size_t slash = s.find('/');
    try {
      if (slash == std::string::npos) return Rational(std::stoll(s));
      return Rational(std::stoll(s.substr(0, slash)),
                      std::stoll(s.substr(slash + 1)));
    } catch (const std::exception&) {
      throw CliError(ctx + ": bad rational '" + s + "'");
    }
  }
  throw CliError(ctx + ": expected an integer or a 'p/q' string");
}

void write_csv(const fs::path& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path);
  if (!f) throw CliError("cannot write " + path.string());
  f << header << "\n";
  f.precision(17);
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
    f << "\n";
  }
}

json weight_to_json(const ExtendedWeight& w) {
  json out;
  if (w.infinite) {
    out["infinite"] = true;
  } else {
    out["infinite"] = false;
    out["value"] = w.value;
  }
  if (w.error_estimate) out["error_estimate"] = *w.error_estimate;
  out["inconclusive"] = w.inconclusive;
  return out;
}

struct RunContext {
  fs::path out_dir;
  std::uint64_t seed = 1;
  int jobs = 1;
};

json load_scenarios(const std::string& config_path, const std::string& command) {
  std::ifstream f(config_path);
  if (!f) throw CliError("cannot open config " + config_path);
  json cfg;
  try {
    cfg = json::parse(f);
  } catch (const json::parse_error& e) {
    throw CliError(std::string("config parse error: ") + e.what());
  }
  check_keys(cfg, {"command", "scenarios"}, "config");
  if (cfg.contains("command") && cfg.at("command").get<std::string>() != command) {
    throw CliError("config command '" + cfg.at("command").get<std::string>() +
                   "' does not match subcommand '" + command + "'");
  }
  if (!cfg.contains("scenarios") || !cfg.at("scenarios").is_array()) {
    throw CliError("config: 'scenarios' array required");
  }
  return cfg.at("scenarios");
}

void emit_report(const RunContext& ctx, const std::string& command, json results) {
  json report;
  report["metadata"] = {{"tool", "kn_cli"},
                        {"command", command},
                        {"seed", ctx.seed},
                        {"jobs", ctx.jobs}};
  report["results"] = std::move(results);
  fs::create_directories(ctx.out_dir);
  const fs::path path = ctx.out_dir / (command + "_report.json");
  std::ofstream f(path);
  if (!f) throw CliError("cannot write " + path.string());
  f << report.dump(2) << "\n";
}

std::string scen_name(const json& s, size_t index) {
  if (s.contains("name")) return s.at("name").get<std::string>();
  return "scenario_" + std::to_string(index);
}

int run_moment(const RunContext& ctx, const std::string& config) {
  json scenarios = load_scenarios(config, "moment");
  json results = json::array();
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const json& s = scenarios[i];
    check_keys(s, {"name", "target", "point", "generators"}, "moment scenario");
    Target t = parse_target(s.at("target"));
    TargetPoint x = parse_point(s.at("point"), t);
    json entry;
    entry["name"] = scen_name(s, i);
    entry["moment_element"] = matrix_to_json(moment_element(t, x).mat);
    json pairs = json::array();
    for (const json& gj : s.at("generators")) {
      AlgebraElement g = AlgebraElement::skew(parse_matrix(gj, "generator"));
      pairs.push_back(moment_pair(t, x, g));
    }
    entry["moment_pairs"] = pairs;
    results.push_back(entry);
  }
  emit_report(ctx, "moment", results);
  return 0;
}

int run_weight(const RunContext& ctx, const std::string& config) {
  json scenarios = load_scenarios(config, "weight");
  json results = json::array();
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const json& s = scenarios[i];
    check_keys(s, {"name", "target", "point", "generators", "t_max"},
               "weight scenario");
    Target t = parse_target(s.at("target"));
    TargetPoint x = parse_point(s.at("point"), t);
    const double t_max = s.value("t_max", 50.0);
    json entry;
    entry["name"] = scen_name(s, i);
    json rows = json::array();
    for (const json& gj : s.at("generators")) {
      AlgebraElement g = AlgebraElement::skew(parse_matrix(gj, "generator"));
      json row;
      row["closed_form"] = weight_to_json(maximal_weight(t, x, g));
      row["numeric"] = weight_to_json(numeric_maximal_weight(t, x, g, t_max));
      rows.push_back(row);
    }
    entry["weights"] = rows;
    results.push_back(entry);
  }
  emit_report(ctx, "weight", results);
  return 0;
}

int run_psi(const RunContext& ctx, const std::string& config) {
  json scenarios = load_scenarios(config, "psi");
  json results = json::array();
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const json& s = scenarios[i];
    check_keys(s, {"name", "target", "point", "group_elements", "quad_tol", "curve"},
               "psi scenario");
    Target t = parse_target(s.at("target"));
    TargetPoint x = parse_point(s.at("point"), t);
    const double quad_tol = s.value("quad_tol", 1e-9);
    const std::string name = scen_name(s, i);
    json entry;
    entry["name"] = name;
    json vals = json::array();
    for (size_t gi = 0; gi < s.at("group_elements").size(); ++gi) {
      GroupElement g(parse_matrix(s.at("group_elements")[gi], "group element"));
      PsiRecord rec = psi(t, x, g, quad_tol);
      json row;
      row["value"] = rec.value;
      row["error_estimate"] = rec.error_estimate;
      row["tolerance_reached"] = rec.tolerance_reached;
      vals.push_back(row);
      if (s.value("curve", false)) {
        std::vector<std::vector<double>> rows;
        for (int k = 0; k <= 100; ++k) {
          const double time = k / 100.0;
          rows.push_back({time, lambda_t(t, x, rec.generator, time)});
        }
        fs::create_directories(ctx.out_dir);
        write_csv(ctx.out_dir /
                      (name + "_lambda_" + std::to_string(gi) + ".csv"),
                  "t,lambda_t", rows);
      }
    }
    entry["psi"] = vals;
    results.push_back(entry);
  }
  emit_report(ctx, "psi", results);
  return 0;
}

const char* flow_status_name(FlowResult::Status st) {
  switch (st) {
    case FlowResult::Status::Converged:
      return "Converged";
    case FlowResult::Status::DivergenceWitness:
      return "DivergenceWitness";
    default:
      return "MaxIter";
  }
}

FlowOptions parse_flow_options(const json& s) {
  FlowOptions opts;
  opts.step = s.value("step", opts.step);
  opts.max_iter = s.value("max_iter", opts.max_iter);
  opts.tol = s.value("tol", opts.tol);
  opts.divergence_budget = s.value("divergence_budget", opts.divergence_budget);
  return opts;
}

int run_flow(const RunContext& ctx, const std::string& config) {
  json scenarios = load_scenarios(config, "flow");
  json results = json::array();
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const json& s = scenarios[i];
    check_keys(s,
               {"name", "target", "point", "group", "c", "step", "max_iter", "tol",
                "divergence_budget", "trace"},
               "flow scenario");
    Target t = parse_target(s.at("target"));
    TargetPoint x = parse_point(s.at("point"), t);
    ActingGroup group = parse_group(s.at("group"), t.ambient_dim());
    AlgebraElement c = parse_central(s.at("c"), t.ambient_dim());
    FlowOptions opts = parse_flow_options(s);
    opts.record_trace = s.value("trace", false);
    const std::string name = scen_name(s, i);
    FlowResult fr = minimize_psi(t, x, group, c, opts);
    json entry;
    entry["name"] = name;
    entry["status"] = flow_status_name(fr.status);
    entry["residual"] = fr.residual;
    entry["psi_value"] = fr.psi_value;
    entry["iterations"] = fr.iterations;
    entry["nonsimple_stabilizer"] = fr.nonsimple_stabilizer;
    if (fr.witness) entry["witness"] = matrix_to_json(fr.witness->mat);
    if (opts.record_trace) {
      std::vector<std::vector<double>> rows;
      for (const auto& r : fr.trace) {
        rows.push_back({static_cast<double>(r.iter), r.residual, r.psi_value,
                        r.length_log});
      }
      fs::create_directories(ctx.out_dir);
      write_csv(ctx.out_dir / (name + "_flow.csv"),
                "iter,residual,psi_value,length_log", rows);
    }
    results.push_back(entry);
  }
  emit_report(ctx, "flow", results);
  return 0;
}

int run_stability(const RunContext& ctx, const std::string& config) {
  json scenarios = load_scenarios(config, "stability");
  json results = json::array();
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const json& s = scenarios[i];
    check_keys(s,
               {"name", "target", "point", "group", "c", "step", "max_iter", "tol",
                "divergence_budget"},
               "stability scenario");
    Target t = parse_target(s.at("target"));
    TargetPoint x = parse_point(s.at("point"), t);
    ActingGroup group = parse_group(s.at("group"), t.ambient_dim());
    AlgebraElement c = parse_central(s.at("c"), t.ambient_dim());
    StabilityVerdict v = stability_test(t, x, group, c, parse_flow_options(s));
    json entry;
    entry["name"] = scen_name(s, i);
    switch (v.kind) {
      case StabilityVerdict::Kind::Stable:
        entry["verdict"] = "Stable";
        break;
      case StabilityVerdict::Kind::Unstable:
        entry["verdict"] = "Unstable";
        break;
      default:
        entry["verdict"] = "Inconclusive";
    }
    entry["diagnostics"] = v.diagnostics;
    if (v.witness) entry["witness"] = matrix_to_json(v.witness->mat);
    if (v.witness_weight) entry["witness_weight"] = *v.witness_weight;
    results.push_back(entry);
  }
  emit_report(ctx, "stability", results);
  return 0;
}

const char* slope_name(SlopeVerdict v) {
  switch (v) {
    case SlopeVerdict::StrictPass:
      return "StrictPass";
    case SlopeVerdict::Equality:
      return "Equality";
    default:
      return "Violated";
  }
}

int run_filt(const RunContext& ctx, const std::string& config) {
  json scenarios = load_scenarios(config, "filt");
  json results = json::array();
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const json& s = scenarios[i];
    check_keys(s, {"name", "bundle", "filtration", "subobjects", "equivalence",
                   "bogomolov"},
               "filt scenario");
    check_keys(s.at("bundle"), {"R", "d"}, "bundle");
    BundleData b{s.at("bundle").at("R").get<long long>(),
                 s.at("bundle").at("d").get<long long>()};
    SectionFiltration filt;
    if (s.contains("filtration")) {
      const json& fj = s.at("filtration");
      check_keys(fj, {"ranks", "degrees", "weights"}, "filtration");
      filt.ranks = fj.value("ranks", std::vector<long long>{});
      filt.degrees = fj.value("degrees", std::vector<long long>{});
      for (const json& w : fj.value("weights", json::array())) {
        filt.weights.push_back(parse_rational(w, "filtration.weights"));
      }
    }
    json entry;
    entry["name"] = scen_name(s, i);
    entry["central_c"] = to_string(central_c(b, filt));
    if (s.contains("subobjects")) {
      json verdicts = json::array();
      for (const json& sj : s.at("subobjects")) {
        check_keys(sj, {"rank", "degree", "meets"}, "subobject");
        Subobject sub{sj.at("rank").get<long long>(),
                      sj.at("degree").get<long long>(),
                      sj.value("meets", std::vector<long long>{})};
        verdicts.push_back(slope_name(slope_test(b, filt, sub)));
      }
      entry["slope_verdicts"] = verdicts;
    }
    if (s.value("equivalence", false)) {
      EquivalenceReport rep = equivalence_brute(b, filt);
      json ej;
      ej["all_grid_positive"] = rep.all_grid_positive;
      ej["all_slopes_strict"] = rep.all_slopes_strict;
      ej["equivalent"] = rep.equivalent;
      ej["instances_checked"] = rep.instances_checked;
      auto emit_sub = [&](const EquivalenceCounterexample& ce, const char* key) {
        json cj;
        cj["rank"] = ce.sub.rank;
        cj["degree"] = ce.sub.degree;
        cj["meets"] = ce.sub.meets;
        cj["total_degree"] = to_string(ce.total);
        cj["slope_verdict"] = slope_name(ce.verdict);
        ej[key] = cj;
      };
      if (rep.counterexample) emit_sub(*rep.counterexample, "counterexample");
      if (rep.destabilizer) emit_sub(*rep.destabilizer, "destabilizer");
      entry["equivalence"] = ej;
    }
    if (s.value("bogomolov", false)) {
      BogomolovReport rep = bogomolov_residual(b, filt);
      entry["bogomolov"] = {{"value", to_string(rep.value)},
                            {"no_solution_expected", rep.no_solution_expected}};
    }
    results.push_back(entry);
  }
  emit_report(ctx, "filt", results);
  return 0;
}

const char* solve_status_name(vortex::SolveResult::Status st) {
  switch (st) {
    case vortex::SolveResult::Status::Solution:
      return "Solution";
    case vortex::SolveResult::Status::NoSolution:
      return "NoSolution";
    default:
      return "MaxIter";
  }
}

int run_vortex(const RunContext& ctx, const std::string& config) {
  json scenarios = load_scenarios(config, "vortex");
  json results = json::array();
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const json& s = scenarios[i];
    check_keys(s,
               {"name", "N", "L", "d", "c", "tol", "max_iter", "zero_section",
                "refinement", "dump_state", "trace"},
               "vortex scenario");
    vortex::TorusLattice lat{s.at("N").get<int>(), s.at("L").get<double>()};
    const int d = s.at("d").get<int>();
    const double c = s.at("c").get<double>();
    vortex::SolveOptions opts;
    opts.tol = s.value("tol", opts.tol);
    opts.max_iter = s.value("max_iter", opts.max_iter);
    opts.zero_section_mode = s.value("zero_section", false);
    opts.record_trace = s.value("trace", false);
    opts.seed = ctx.seed;
    const std::string name = scen_name(s, i);
    vortex::SolveResult res = vortex::solve(lat, d, c, opts);
    json entry;
    entry["name"] = name;
    entry["status"] = solve_status_name(res.status);
    if (!res.reason.empty()) entry["reason"] = res.reason;
    entry["residual_eq"] = res.residual_eq;
    entry["residual_dbar"] = res.residual_dbar;
    entry["bradlow_slack"] = res.bradlow_slack;
    entry["iterations"] = res.iterations;
    if (res.status == vortex::SolveResult::Status::Solution) {
      entry["decomposition_residual"] =
          vortex::decomposition_check(lat, res.conn, res.section, c);
      std::vector<double> f = vortex::curvature(lat, res.conn);
      double charge = 0.0;
      for (double v : f) charge += v * lat.h() * lat.h();
      entry["topological_charge"] = charge;
    }
    if (opts.record_trace) {
      std::vector<std::vector<double>> rows;
      for (const auto& r : res.trace) {
        rows.push_back({static_cast<double>(r.iter), r.objective, r.residual_eq,
                        r.residual_dbar});
      }
      fs::create_directories(ctx.out_dir);
      write_csv(ctx.out_dir / (name + "_solve.csv"),
                "iter,objective,residual_eq,residual_dbar", rows);
    }
    if (s.value("dump_state", false) &&
        res.status == vortex::SolveResult::Status::Solution) {
      fs::create_directories(ctx.out_dir);
      vortex::save_state((ctx.out_dir / (name + "_state.bin")).string(), lat,
                         res.conn, res.section);
    }
    if (s.value("refinement", false)) {
      vortex::RefinementStudy st = vortex::refinement_study(lat.L, c);
      entry["refinement"] = {{"sizes", st.sizes},
                             {"residuals", st.residuals},
                             {"orders", st.orders}};
    }
    results.push_back(entry);
  }
  emit_report(ctx, "vortex", results);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moment-map and vortex experiment runner"};
  app.require_subcommand(1);

  RunContext ctx;
  std::string config;
  std::string out_dir = ".";
  app.add_option("--config", config, "scenario config (JSON)")->required();
  app.add_option("--seed", ctx.seed, "deterministic seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", ctx.jobs, "parallelism hint (execution stays ordered)");

  const std::vector<std::string> commands = {"moment", "weight", "psi",    "flow",
                                             "stability", "filt", "vortex"};
  // Global options may appear after the subcommand name.
  for (const auto& c : commands) app.add_subcommand(c)->fallthrough();

  CLI11_PARSE(app, argc, argv);
  ctx.out_dir = out_dir;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (command == "moment") return run_moment(ctx, config);
    if (command == "weight") return run_weight(ctx, config);
    if (command == "psi") return run_psi(ctx, config);
    if (command == "flow") return run_flow(ctx, config);
    if (command == "stability") return run_stability(ctx, config);
    if (command == "filt") return run_filt(ctx, config);
    if (command == "vortex") return run_vortex(ctx, config);
    throw CliError("unknown subcommand");
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"command", command}, {"message", e.what()}};
    std::cout << err.dump(2) << std::endl;
    return 1;
  }
}
