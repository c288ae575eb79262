#include "scenarios.hpp"

#include "kahler/curves.hpp"
#include "kahler/geometry.hpp"
#include "kahler/hproj.hpp"
#include "kahler/prolongation.hpp"
#include "kahler/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>

namespace kahler::cli {

namespace {

using json = nlohmann::json;

json point_json(const ChartPoint& p) { return {{"chart", p.chart}, {"x", p.x}}; }

/// Collects checks with per-check default tolerances (--tol overrides them all).
class Checks {
 public:
  Checks(Report& r, std::optional<double> tol) : r_(r), tol_(tol) {}

  void below(const std::string& name, double value, double tolerance) {
    const double t = tol_.value_or(tolerance);
    r_.checks.push_back({name, value, t, std::isfinite(value) && value < t, false});
    r_.tolerances[name] = t;
  }
  void above(const std::string& name, double value, double bound) {
    r_.checks.push_back({name, value, bound, value > bound, true});
    r_.tolerances[name] = bound;
  }
  void expect(const std::string& name, bool ok) {
    r_.checks.push_back({name, ok ? 0.0 : 1.0, 0.5, ok, false});
  }

 private:
  Report& r_;
  std::optional<double> tol_;
};

ComplexMatrix default_A(int n) {
  ComplexMatrix A = ComplexMatrix::Identity(n + 1, n + 1);
  A(0, 0) = 2.0;
  return A;
}

ComplexMatrix second_A(int n) {
  ComplexMatrix A = ComplexMatrix::Identity(n + 1, n + 1);
  A(1, 1) = 3.0;
  return A;
}

ComplexMatrix config_A(const ScenarioConfig& cfg, int n) {
  if (!cfg.A) return default_A(n);
  ComplexMatrix A = complex_matrix_from_json(*cfg.A);
  if (A.rows() != n + 1) throw Error(ErrorKind::Config, "A must be (n+1) x (n+1)");
  return A;
}

void require_fs(const KahlerModel& m, const std::string& scenario) {
  if (m.kind != ModelKind::FubiniStudy)
    throw Error(ErrorKind::UnsupportedModel, scenario + " runs on the Fubini-Study model");
}

double default_B(const KahlerModel& m) {
  return m.kind == ModelKind::FubiniStudy || m.kind == ModelKind::Pullback ? -0.25 : 0.0;
}

/// The pair solution of (g_FS, pullback by A) on the primary chart.
struct PairSetup {
  TensorField g, J;
  HSolution sol;
};

PairSetup pair_setup(const KahlerModel& fs, const ComplexMatrix& A) {
  PairSetup s;
  s.g = fs.primary_chart().metric;
  s.J = fs.primary_chart().complex_structure;
  s.sol = pair_solution(s.g, pullback_fs(A, fs.primary).primary_chart().metric);
  return s;
}

std::vector<ChartPoint> samples(const KahlerModel& m, std::uint64_t seed, int count, int chart = -1) {
  std::mt19937_64 rng(seed);
  return m.sample_points(rng, count, chart);
}

// Scenarios.

void verify_kahler_scenario(const ScenarioConfig& cfg, const KahlerModel& m, Report& r, Checks& c) {
  json per_chart = json::array();
  for (int k = 0; k < static_cast<int>(m.charts.size()); ++k) {
    const auto& ch = m.chart(k);
    const auto pts = samples(m, cfg.seed + k, cfg.samples, k);
    const auto rep = verify_kahler(ch.metric, ch.complex_structure, pts, cfg.tol.value_or(1e-8));
    for (const auto& chk : rep.checks) c.below(ch.chart.name() + "/" + chk.name, chk.max_residual, 1e-8);
    per_chart.push_back({{"chart", ch.chart.name()}, {"points", rep.points}});
  }
  r.results["charts"] = per_chart;
}

void curvature_scenario(const ScenarioConfig& cfg, const KahlerModel& m, Report& r, Checks& c) {
  const double B = cfg.B.value_or(default_B(m));
  const auto& ch = m.primary_chart();
  double worst = 0.0, hmin = 1e300, hmax = -1e300;
  std::mt19937_64 rng(cfg.seed + 1000);
  std::normal_distribution<double> normal;
  for (const auto& x : samples(m, cfg.seed, cfg.samples)) {
    const MetricJet mj = metric_jet(ch.metric, x, 2);
    const TensorValue R = riemann(mj);
    const TensorValue K = constant_curvature_tensor(mj.g(), ch.J);
    worst = std::max(worst, max_abs(R + (4.0 * B) * K));
    std::vector<double> v(m.dim());
    for (double& e : v) e = normal(rng);
    const double h = holomorphic_sectional_curvature(R, mj.g(), ch.J, v);
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  c.below("R+4BK", worst, 1e-7);
  r.results["B"] = B;
  r.results["holomorphic_sectional_curvature"] = {{"min", hmin}, {"max", hmax}};
}

void hpr_scenario(const ScenarioConfig& cfg, const KahlerModel& m, Report& r, Checks& c) {
  require_fs(m, "hpr-check");
  const auto p = pair_setup(m, config_A(cfg, m.n));
  const TensorField lbar = bar_vector_field(p.g, p.J, p.sol.lambda);
  const auto pts = samples(m, cfg.seed, cfg.samples);
  double hpr = 0.0, killing = 0.0, lam = 0.0;
  for (const auto& x : pts) {
    hpr = std::max(hpr, max_abs(hpr_residual(p.g, p.J, p.sol, x)));
    killing = std::max(killing, max_abs(killing_residual(p.g, lbar, x)));
    lam = std::max(lam, max_abs(p.sol.lambda.value(x.x)));
  }
  c.below("hpr_residual", hpr, 1e-7);
  c.below("killing_residual(lambda_bar)", killing, 1e-7);
  c.above("lambda_nonzero", lam, 1e-6);

  const auto withmu = with_fitted_mu(p.g, p.sol, -0.25);
  const int nb = std::min<int>(10, static_cast<int>(pts.size()));
  double lo = 1e300, hi = -1e300, sum = 0.0;
  for (int k = 0; k < nb; ++k) {
    const double B = estimate_B(p.g, p.J, withmu, pts[k]).B;
    lo = std::min(lo, B);
    hi = std::max(hi, B);
    sum += B;
  }
  const double mean = sum / nb;
  const double expected = cfg.B.value_or(-0.25);
  c.below("estimate_B", std::abs(mean - expected), 1e-4);
  c.below("estimate_B_spread", hi - lo, 1e-4);
  r.results["B"] = {{"mean", mean}, {"min", lo}, {"max", hi}};

  const auto q = pair_setup(m, second_A(m.n));
  double cmax = 0.0, without = 0.0, indep = 1e300;
  for (int k = 0; k < nb; ++k) {
    const auto ci = c_identity_check(p.g, p.J, p.sol, q.sol, pts[k]);
    cmax = std::max(cmax, ci.max_c);
    without = std::max(without, ci.without_c);
    indep = std::min(indep, ci.independence);
  }
  c.below("c_identity", cmax, 1e-6);
  c.below("c_identity_remainder", without, 1e-6);
  c.above("solutions_independent", indep, 1e-6);
}

void mobility_scenario(const ScenarioConfig& cfg, const KahlerModel& m, Report& r, Checks& c) {
  MobilityConfig mc = MobilityConfig::from_json(cfg.mobility);
  if (!cfg.mobility.contains("seed")) mc.seed = cfg.seed;
  const ChartPoint base = samples(m, cfg.seed, 1).front();
  const MobilityReport rep = cfg.B ? degree_of_mobility(m, *cfg.B, base, mc) : degree_of_mobility_sweep(m, base, mc);
  r.results["mobility"] = rep.to_json();
  r.results["dimension"] = rep.dimension;
  r.results["config"] = mc.to_json();

  c.expect("converged", rep.converged);
  if (cfg.expect_dimension) c.below("dimension_mismatch", std::abs(rep.dimension - *cfg.expect_dimension), 0.5);
  const auto fresh = samples(m, cfg.seed + 1, 2);
  // Step halving keeps the accuracy; a coarse first step keeps large fibers cheap.
  TransportOptions kopt = mc.transport;
  kopt.step = std::max(kopt.step, 1e-2);
  const auto kc = check_kernel(m, rep, fresh, 1e-3, kopt);
  c.below("kernel_hpr", kc.hpr, 1e-5);
  c.below("kernel_extended", kc.extended, 1e-5);
  c.below("kernel_path_independence", kc.path_independence, 1e-5);
  if (m.kind == ModelKind::FlatTorus) {
    double lam = 0.0;
    for (const auto& s : rep.basis) lam = std::max({lam, max_abs(s.lambda), std::abs(s.mu)});
    c.below("kernel_lambda_mu", lam, 1e-8);
  }
}

void spectral_scenario(const ScenarioConfig& cfg, const KahlerModel& m, Report& r, Checks& c) {
  require_fs(m, "spectral");
  const double B = cfg.B.value_or(-0.25);
  const auto p = pair_setup(m, config_A(cfg, m.n));
  const auto pts = samples(m, cfg.seed, cfg.samples);
  const ChartPoint base = pts.front();

  // Unnormalized algebra: L, L^2, L^3 of the pair solution.
  const HSolution sol = with_fitted_mu(p.g, p.sol, B);
  const auto L = build_L(p.g, p.J, sol, base);
  c.below("self_adjointness", self_adjointness_defect(L), 1e-10);
  c.below("complex_commutation", complex_commutation_defect(L), 1e-10);

  const NormalizedSystem ns = normalize_to_B_minus_one(p.g, sol, B);
  const auto Ln = build_L(ns.g, p.J, ns.sol, base);
  double closure = 0.0, op_lin = 0.0, op_orth = 0.0;
  auto Lk = Ln;
  HSolution power = ns.sol;
  std::vector<ChartPoint> near{base};
  for (int k = 0; k < 2; ++k) {
    ChartPoint y = base;
    for (std::size_t i = 0; i < y.x.size(); ++i) y.x[i] += (k == 0 ? 0.05 : -0.04) * ((i % 3) == 0 ? 1.0 : -0.5);
    near.push_back(y);
  }
  for (int k = 2; k <= 3; ++k) {
    const auto prod = L_product(Ln, Lk);
    op_lin = std::max(op_lin, prod.op_eq_linear);
    op_orth = std::max(op_orth, prod.op_eq_orthogonal);
    Lk = prod.L;
    power = product_solution(ns.g, p.J, power, ns.sol);
    for (const auto& y : near) closure = std::max(closure, extended_residual(ns.g, p.J, -1.0, power, y).max_abs());
  }
  c.below("power_extended_residual", closure, 1e-5);
  c.below("op_eq_linear", op_lin, 1e-8);
  c.below("op_eq_orthogonal", op_orth, 1e-8);

  const auto mp = minimal_poly(Ln);
  const auto mp2 = minimal_poly(build_L(ns.g, p.J, ns.sol, pts.back()));
  c.below("minimal_polynomial_distance", polynomial_distance(mp, mp2), 1e-5);

  double mu_max = -1e300;
  for (const auto& x : pts) mu_max = std::max(mu_max, ns.sol.mu.value(x.x)[0]);
  const auto P = make_projector(Ln, mu_max);
  c.below("projector_idempotency", (P.matrix * P.matrix - P.matrix).cwiseAbs().maxCoeff(), 1e-8);
  const auto coeffs = projector_polynomial(mp, mu_max);
  const HSolution proj = polynomial_solution(ns.g, p.J, ns.sol, coeffs);

  json reports = json::array();
  double angle = 0.0, hess = 0.0;
  bool matches = true, even = true;
  int interior = 0;
  for (const auto& x : pts) {
    const auto er = eigenstructure_report(ns.g, p.J, proj, x);
    matches = matches && er.matches;
    even = even && er.even;
    if (er.regime == "interior") {
      ++interior;
      angle = std::max(angle, er.eigenspace_angle);
    }
    hess = std::max(hess, max_abs(hessian_mu_check(ns.g, proj, x)));
    reports.push_back(er.to_json());
  }
  c.expect("multiplicities_match", matches);
  c.expect("even_multiplicities", even);
  c.above("interior_points", interior, 0.5);
  c.below("eigenspace_angle", angle, 1e-4);
  c.below("hessian_mu", hess, 1e-5);

  r.results["B"] = B;
  r.results["mu_max"] = mu_max;
  r.results["minimal_polynomial"] = mp.to_json();
  r.results["projector_polynomial"] = coeffs;
  r.results["eigenstructure"] = reports;
  if (!cfg.dump.empty()) {
    json dump{{"operator", Ln.to_json()}, {"projector", P.to_json()}};
    std::ofstream out(cfg.dump);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + cfg.dump);
    out << dump.dump(2) << '\n';
    r.artifacts.push_back(cfg.dump);
  }
}

void tanno_scenario(const ScenarioConfig& cfg, const KahlerModel& m, Report& r, Checks& c) {
  require_fs(m, "tanno");
  const double B = cfg.B.value_or(-0.25);
  const auto p = pair_setup(m, config_A(cfg, m.n));
  const HSolution sol = with_fitted_mu(p.g, p.sol, B);
  double tanno = 0.0, trip = 0.0, laplace = 0.0;
  for (const auto& x : samples(m, cfg.seed, std::min(cfg.samples, 10))) {
    tanno = std::max(tanno, max_abs(tanno_residual(p.g, p.J, sol.lambda_scalar, B, x)));
    trip = std::max(trip, tanno_round_trip_defect(p.g, p.J, sol, B, x));
    laplace = std::max(laplace, max_abs(laplace_identity_residual(p.g, p.J, B, sol.lambda_scalar, x)));
  }
  c.below("tanno_residual", tanno, 1e-5);
  c.below("round_trip", trip, 1e-6);
  c.below("laplace_identity", laplace, 1e-5);
  r.results["kappa"] = B;
}

void hplanar_scenario(const ScenarioConfig& cfg, const KahlerModel& m, Report& r, Checks& c) {
  const bool lines = m.kind == ModelKind::FubiniStudy || m.kind == ModelKind::Pullback ||
                     m.kind == ModelKind::Flat || m.kind == ModelKind::FlatTorus;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto starts = samples(m, cfg.seed + 1, cfg.curves);
  double deviation = 0.0, defect = 0.0, energy = 0.0;
  json runs = json::array();
  for (int k = 0; k < cfg.curves; ++k) {
    const double a0 = unit(rng), a1 = unit(rng), b0 = 2.0 * unit(rng), b1 = unit(rng);
    std::vector<double> v0(m.dim());
    for (double& e : v0) e = 0.5 * unit(rng);
    const ChartPoint& x0 = starts[k];
    const auto curve = integrate_hplanar(m, x0, v0, polynomial_coefficient({a0, a1}),
                                         polynomial_coefficient({b0, b1}), 1.0, cfg.step);
    const auto defects = hplanar_defects(m, curve);
    const double dmax = *std::max_element(defects.begin(), defects.end());
    defect = std::max(defect, dmax);
    std::vector<double> devs;
    if (lines) {
      devs = line_deviations(m, curve, x0, v0);
      deviation = std::max(deviation, *std::max_element(devs.begin(), devs.end()));
    }
    const auto geo = integrate_geodesic(m, x0, v0, 1.0, cfg.step);
    energy = std::max(energy, energy_drift(m, geo));
    runs.push_back({{"x0", point_json(x0)},
                    {"v0", v0},
                    {"alpha", {a0, a1}},
                    {"beta", {b0, b1}},
                    {"max_defect", dmax},
                    {"max_deviation", lines ? json(*std::max_element(devs.begin(), devs.end())) : json(nullptr)}});
    if (k == 0 && !cfg.csv.empty()) {
      std::ofstream out(cfg.csv);
      if (!out) throw Error(ErrorKind::Config, "cannot write " + cfg.csv);
      write_curve_csv(out, curve, defects, devs);
      r.artifacts.push_back(cfg.csv);
    }
  }
  if (lines) c.below("line_deviation", deviation, 1e-6);
  c.below("hplanar_defect", defect, 1e-6);
  c.below("geodesic_energy_drift", energy, 1e-8);

  // Step-halving order check on the first run.
  if (cfg.curves > 0) {
    const auto& x0 = starts[0];
    const auto& v0 = runs[0]["v0"].get<std::vector<double>>();
    const auto& al = runs[0]["alpha"], &be = runs[0]["beta"];
    auto end = [&](double h) {
      return integrate_hplanar(m, x0, v0, polynomial_coefficient({al[0], al[1]}),
                               polynomial_coefficient({be[0], be[1]}), 1.0, h)
          .points.back();
    };
    const auto e0 = end(0.04), e1 = end(0.02), e2 = end(0.01);
    double d1 = 0.0, d2 = 0.0;
    if (e0.chart == e1.chart && e1.chart == e2.chart)
      for (std::size_t i = 0; i < e0.x.size(); ++i) {
        d1 = std::max(d1, std::abs(e0.x[i] - e1.x[i]));
        d2 = std::max(d2, std::abs(e1.x[i] - e2.x[i]));
      }
    const double ratio = d2 > 0.0 ? d1 / d2 : 0.0;
    c.below("rk4_ratio_excess", std::abs(ratio - 16.0), 4.0);
    r.results["rk4_ratio"] = ratio;
  }

  if (m.kind == ModelKind::FubiniStudy) {
    const auto p = pair_setup(m, config_A(cfg, m.n));
    const TensorField lbar = bar_vector_field(p.g, p.J, p.sol.lambda);
    double drift = 0.0;
    const int geodesics = std::min(cfg.curves, 5);
    for (int k = 0; k < geodesics; ++k) {
      const auto geo = integrate_geodesic(m, starts[k], runs[k]["v0"].get<std::vector<double>>(), 1.0, cfg.step);
      if (!geo.single_chart()) continue;
      drift = std::max(drift, killing_integral_drift(p.g, geo, lbar));
    }
    c.below("killing_integral_drift", drift, 1e-7);
  }
  r.results["runs"] = runs;
}

void merge_scenario(const ScenarioConfig& cfg, Report& r) {
  if (cfg.inputs.empty()) throw Error(ErrorKind::Config, "report-merge needs input reports");
  json merged = json::array();
  for (const auto& path : cfg.inputs) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot read " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Config, path + ": " + e.what());
    }
    if (!j.contains("checks") || !j.contains("scenario")) throw Error(ErrorKind::Config, path + " is not a report");
    const std::string prefix = j["scenario"].get<std::string>() + "/";
    for (const auto& chk : j["checks"])
      r.checks.push_back({prefix + chk.at("name").get<std::string>(), chk.at("max_residual").get<double>(),
                          chk.at("tolerance").get<double>(), chk.at("pass").get<bool>(),
                          chk.value("lower_bound", false)});
    merged.push_back({{"path", path}, {"scenario", j["scenario"]}, {"pass", j.value("pass", false)}});
  }
  r.results["reports"] = merged;
}

using Runner = std::function<void(const ScenarioConfig&, const KahlerModel&, Report&, Checks&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r{
      {"verify-kahler", verify_kahler_scenario}, {"curvature", curvature_scenario},
      {"hpr-check", hpr_scenario},               {"mobility", mobility_scenario},
      {"spectral", spectral_scenario},           {"tanno", tanno_scenario},
      {"hplanar", hplanar_scenario},
  };
  return r;
}

}  // namespace

json CheckResult::to_json() const {
  json j{{"name", name}, {"max_residual", max_residual}, {"tolerance", tolerance}, {"pass", pass}};
  if (lower_bound) j["lower_bound"] = true;
  return j;
}

const std::vector<std::pair<std::string, std::string>>& scenario_list() {
  static const std::vector<std::pair<std::string, std::string>> list{
      {"verify-kahler", "Kahler identities (J^2, g-compatibility, nabla J, symmetries) on every chart"},
      {"curvature", "R + 4BK against the constant holomorphic curvature tensor"},
      {"hpr-check", "h-projective pair residual, Killing lambda-bar, B estimate, c-identity"},
      {"mobility", "local mobility estimate of the extended system by transport and holonomy"},
      {"spectral", "extended operator algebra, minimal polynomial, projector eigenstructure"},
      {"tanno", "Tanno equation, round trip to the extended system, Laplace identity"},
      {"hplanar", "h-planar curves: line membership, wedge defect, RK4 order, Killing integral"},
      {"report-merge", "merge JSON reports; passes iff every merged check passes"},
  };
  return list;
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  static const std::vector<std::string> known{"scenario", "model", "n",    "A",      "seed",   "tol",
                                              "samples",  "step",  "B",    "expect-dimension", "curves",
                                              "mobility", "csv",   "dump", "inputs", "periods"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
  ScenarioConfig c;
  try {
    c.scenario = j.value("scenario", c.scenario);
    if (j.contains("model")) {
      c.model = j["model"].is_string() ? json{{"kind", j["model"]}} : j["model"];
      if (!c.model.contains("n")) c.model["n"] = 2;
    }
    if (j.contains("n")) c.model["n"] = j["n"].get<int>();
    if (j.contains("periods")) c.model["periods"] = j["periods"];
    if (j.contains("A")) c.A = j["A"];
    c.seed = j.value("seed", c.seed);
    if (j.contains("tol")) c.tol = j["tol"].get<double>();
    c.samples = j.value("samples", c.samples);
    c.step = j.value("step", c.step);
    if (j.contains("B")) c.B = j["B"].get<double>();
    if (j.contains("expect-dimension")) c.expect_dimension = j["expect-dimension"].get<int>();
    c.curves = j.value("curves", c.curves);
    c.mobility = j.value("mobility", c.mobility);
    c.csv = j.value("csv", c.csv);
    c.dump = j.value("dump", c.dump);
    c.inputs = j.value("inputs", c.inputs);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return c;
}

json ScenarioConfig::to_json() const {
  json j{{"scenario", scenario}, {"model", model}, {"seed", seed},     {"samples", samples},
         {"step", step},         {"curves", curves}, {"mobility", mobility}};
  if (A) j["A"] = *A;
  if (tol) j["tol"] = *tol;
  if (B) j["B"] = *B;
  if (expect_dimension) j["expect-dimension"] = *expect_dimension;
  return j;
}

void ScenarioConfig::validate() const {
  const bool known = scenario == "report-merge" || runners().count(scenario);
  if (!known) throw Error(ErrorKind::Config, "unknown scenario '" + scenario + "'");
  if (samples < 1 || samples > 10000) throw Error(ErrorKind::Config, "samples must lie in [1, 10000]");
  if (!(step > 0.0 && step <= 0.5)) throw Error(ErrorKind::Config, "step must lie in (0, 0.5]");
  if (tol && !(*tol > 0.0 && *tol < 1.0)) throw Error(ErrorKind::Config, "tol must lie in (0, 1)");
  if (curves < 1 || curves > 1000) throw Error(ErrorKind::Config, "curves must lie in [1, 1000]");
  if (B && !std::isfinite(*B)) throw Error(ErrorKind::Config, "B must be finite");
  if (expect_dimension && *expect_dimension < 0) throw Error(ErrorKind::Config, "expected dimension must be >= 0");
}

KahlerModel build_model(const ScenarioConfig& cfg) {
  json d = cfg.model;
  const std::string kind = d.value("kind", std::string("fs"));
  const int n = d.value("n", 2);
  if (kind == "pullback" && !d.contains("A")) d["A"] = complex_matrix_to_json(config_A(cfg, n));
  if (kind == "product" && !d.contains("factors")) {
    d["factors"] = json::array();
    for (int k = 0; k < 3; ++k) d["factors"].push_back({{"kind", "torus"}, {"n", 2}, {"periods", {1.0}}});
  }
  return model_from_json(d);
}

bool Report::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

json Report::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) cs.push_back(c.to_json());
  return {{"version", kVersion}, {"scenario", scenario}, {"model", model},         {"seed", seed},
          {"tolerances", tolerances}, {"checks", cs},    {"artifacts", artifacts}, {"results", results},
          {"pass", pass()}};
}

Report run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Report r;
  r.scenario = cfg.scenario;
  r.seed = cfg.seed;
  Checks checks(r, cfg.tol);
  if (cfg.scenario == "report-merge") {
    r.model = nullptr;
    merge_scenario(cfg, r);
    return r;
  }
  const KahlerModel m = build_model(cfg);
  r.model = m.descriptor();
  runners().at(cfg.scenario)(cfg, m, r, checks);
  return r;
}

int exit_code(const Report& r) { return r.pass() ? 0 : 1; }

}  // namespace kahler::cli
