#include "kahler/hproj.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace kahler {

namespace {

JetTensor jet_inverse_metric(const JetTensor& g) {
  return JetTensor({Slot::Upper, Slot::Upper}, g.dim(), inverse<Jet>(g.components(), g.dim()));
}

Jet jet_trace(const JetTensor& g_inv, const JetTensor& t) {
  Jet acc = g_inv[0] * t[0];
  for (std::size_t f = 1; f < t.size(); ++f) acc += g_inv[f] * t[f];
  return acc;
}

JetTensor scalar_jets(Jet v) { return JetTensor({}, v.dim(), std::vector<Jet>{std::move(v)}); }

TensorValue scalar_value(int dim, double v) { return TensorValue({}, dim, std::vector<double>{v}); }

TensorField linear_field(double c1, const TensorField& f1, double c2, const TensorField& f2) {
  return TensorField(f1.variance(), f1.dim(), [=](std::span<const double> x, int order) {
    JetTensor a = f1.jets(x, order);
    const JetTensor b = f2.jets(x, order);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = c1 * a[i] + c2 * b[i];
    return a;
  });
}

TensorValue trace_free(const TensorValue& t, const TensorValue& g, const TensorValue& g_inv) {
  const double tr = metric_trace(g_inv, t);
  return t - (tr / g.dim()) * g;
}

/// Fixed (k, l): Jten applied to X, written into out(i, j, k, l).
void jten_into(TensorValue& out, const std::vector<double>& X, const TensorValue& J, int k, int l) {
  const int n = J.dim();
  std::vector<double> W(static_cast<std::size_t>(n) * n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j)
      for (int b = 0; b < n; ++b) W[a * n + j] += X[a * n + b] * J(b, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = X[i * n + j];
      for (int a = 0; a < n; ++a) s += J(a, i) * W[a * n + j];
      out(i, j, k, l) = s;
    }
}

}  // namespace

HSolution solution_from_a(const TensorField& g, TensorField a) {
  const int d = a.dim();
  HSolution sol;
  sol.a = std::move(a);
  const TensorField af = sol.a;
  sol.lambda_scalar = TensorField({}, d, [g, af](std::span<const double> x, int order) {
    const JetTensor gj = g.jets(x, order);
    return scalar_jets(0.25 * jet_trace(jet_inverse_metric(gj), af.jets(x, order)));
  });
  const TensorField ls = sol.lambda_scalar;
  sol.lambda = TensorField(lower_slots(1), d, [ls](std::span<const double> x, int order) {
    const JetTensor s = ls.jets(x, order + 1);
    std::vector<Jet> out;
    for (int k = 0; k < s.dim(); ++k) out.push_back(s[0].derivative(k));
    return JetTensor(lower_slots(1), s.dim(), std::move(out));
  });
  return sol;
}

HSolution pair_solution(const TensorField& g, const TensorField& gbar) {
  TensorField a(lower_slots(2), g.dim(), [g, gbar](std::span<const double> x, int order) {
    return a_from_pair(g.jets(x, order), gbar.jets(x, order));
  });
  return solution_from_a(g, std::move(a));
}

HSolution with_fitted_mu(const TensorField& g, HSolution sol, double B) {
  const int d = g.dim();
  const TensorField a = sol.a, lambda = sol.lambda;
  sol.mu = TensorField({}, d, [g, a, lambda, B, d](std::span<const double> x, int order) {
    const Connection conn(MetricJet{{"", {x.begin(), x.end()}}, g.jets(x, order + 1)});
    const JetTensor dl = conn.covariant_derivative(lambda.jets(x, order + 1));
    const JetTensor gi = conn.inverse_metric();
    Jet mu = (jet_trace(gi, dl) - B * jet_trace(gi, a.jets(x, order))) * (1.0 / d);
    return scalar_jets(mu.truncated(order));
  });
  return sol;
}

HSolution combine(double c1, const HSolution& s1, double c2, const HSolution& s2) {
  HSolution out;
  out.a = linear_field(c1, s1.a, c2, s2.a);
  out.lambda = linear_field(c1, s1.lambda, c2, s2.lambda);
  out.lambda_scalar = linear_field(c1, s1.lambda_scalar, c2, s2.lambda_scalar);
  if (s1.has_mu() && s2.has_mu()) out.mu = linear_field(c1, s1.mu, c2, s2.mu);
  return out;
}

HSolution trivial_solution(const TensorField& g, double B) {
  const int d = g.dim();
  HSolution sol;
  sol.a = g;
  sol.lambda = TensorField::constant(TensorValue(lower_slots(1), d, 0.0));
  sol.lambda_scalar = TensorField::constant(scalar_value(d, d / 4.0));
  sol.mu = TensorField::constant(scalar_value(d, -B));
  return sol;
}

TensorValue a_from_pair(const TensorValue& g, const TensorValue& gbar) {
  return value_of(a_from_pair(constant_jets(g, g.dim(), 0), constant_jets(gbar, g.dim(), 0)));
}

JetTensor a_from_pair(const JetTensor& g, const JetTensor& gbar) {
  const int d = g.dim();
  const int n = d / 2;
  const Jet ratio = determinant<Jet>(gbar.components(), d) / determinant<Jet>(g.components(), d);
  if (!(ratio.value() > 0.0))
    throw Error(ErrorKind::Domain, "det(gbar)/det(g) is not positive; metrics of different signature classes");
  const Jet s = pow(ratio, 1.0 / (2.0 * (n + 1)));
  const auto gbar_inv = inverse<Jet>(gbar.components(), d);
  const auto left = matmul<Jet>(g.components(), gbar_inv, d);
  auto a = matmul<Jet>(left, g.components(), d);
  for (auto& c : a) c = s * c;
  return JetTensor(lower_slots(2), d, std::move(a));
}

TensorValue gbar_from_a(const TensorValue& g, const TensorValue& a) {
  const int d = g.dim();
  const double det_a = determinant<double>(a.components(), d);
  const double det_g = determinant<double>(g.components(), d);
  const double scale = std::max(1.0, max_abs(a));
  if (std::abs(det_a) <= 1e-12 * std::pow(scale, d))
    throw Error(ErrorKind::SingularMetric, "a is degenerate; no metric corresponds to it");
  const double ratio = det_a / det_g;
  if (ratio <= 0.0) throw Error(ErrorKind::Domain, "det(a)/det(g) is not positive");
  const auto gi = inverse<double>(g.components(), d);
  auto m = matmul<double>(matmul<double>(gi, a.components(), d), gi, d);
  const double s = std::sqrt(ratio);
  for (auto& c : m) c *= s;
  return TensorValue(lower_slots(2), d, inverse<double>(m, d));
}

TensorValue hpr_residual(const TensorField& g, const TensorField& J, const HSolution& sol,
                         const ChartPoint& x) {
  const Connection conn(metric_jet(g, x, 1));
  const TensorValue da = value_of(conn.covariant_derivative(sol.a.jets(x.x, 1)));
  const TensorValue g0 = value_of(conn.metric());
  const TensorValue J0 = J.value(x.x);
  const TensorValue l = sol.lambda.value(x.x);
  const TensorValue lb = bar(l, J0);
  const TensorValue omega = kahler_form(g0, J0);
  const int d = g0.dim();
  TensorValue r = da;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        r(i, j, k) -= l(i) * g0(j, k) + l(j) * g0(i, k) - lb(i) * omega(j, k) - lb(j) * omega(i, k);
  return r;
}

TensorValue lambda_from_a(const TensorField& g, const TensorField& a, const ChartPoint& x) {
  const JetTensor gj = g.jets(x.x, 1);
  const Jet tr = jet_trace(jet_inverse_metric(gj), a.jets(x.x, 1));
  TensorValue l(lower_slots(1), g.dim(), 0.0);
  for (int k = 0; k < g.dim(); ++k) l(k) = 0.25 * tr.partial(k);
  return l;
}

LambdaFit lambda_least_squares(const TensorField& g, const TensorField& J, const TensorField& a,
                               const ChartPoint& x) {
  const Connection conn(metric_jet(g, x, 1));
  const TensorValue da = value_of(conn.covariant_derivative(a.jets(x.x, 1)));
  const TensorValue g0 = value_of(conn.metric());
  const TensorValue J0 = J.value(x.x);
  const TensorValue omega = kahler_form(g0, J0);
  const int d = g0.dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d * d * d, d);
  Eigen::VectorXd rhs(d * d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const int row = (i * d + j) * d + k;
        rhs(row) = da(i, j, k);
        M(row, i) += g0(j, k);
        M(row, j) += g0(i, k);
        for (int m = 0; m < d; ++m) M(row, m) -= J0(m, i) * omega(j, k) + J0(m, j) * omega(i, k);
      }
  const Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
  LambdaFit fit{TensorValue(lower_slots(1), d, std::vector<double>(sol.data(), sol.data() + d)), 0.0};
  fit.residual = (M * sol - rhs).cwiseAbs().maxCoeff();
  return fit;
}

TensorValue killing_residual(const TensorField& g, const TensorField& v, const ChartPoint& x) {
  const Connection conn(metric_jet(g, x, 1));
  const JetTensor vj = v.jets(x.x, 1);
  const int d = g.dim();
  std::vector<Jet> low;
  for (int i = 0; i < d; ++i) {
    Jet acc = conn.metric()(i, 0) * vj(0);
    for (int a = 1; a < d; ++a) acc += conn.metric()(i, a) * vj(a);
    low.push_back(std::move(acc));
  }
  const TensorValue dv = value_of(conn.covariant_derivative(JetTensor(lower_slots(1), d, std::move(low))));
  TensorValue r(lower_slots(2), d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) r(i, j) = dv(i, j) + dv(j, i);
  return r;
}

TensorField bar_vector_field(const TensorField& g, const TensorField& J, const TensorField& lambda) {
  return TensorField({Slot::Upper}, g.dim(), [g, J, lambda](std::span<const double> x, int order) {
    const JetTensor gi = jet_inverse_metric(g.jets(x, order));
    const JetTensor lb = bar(lambda.jets(x, order), J.jets(x, order));
    const int d = gi.dim();
    std::vector<Jet> out;
    for (int i = 0; i < d; ++i) {
      Jet acc = gi(i, 0) * lb(0);
      for (int a = 1; a < d; ++a) acc += gi(i, a) * lb(a);
      out.push_back(std::move(acc));
    }
    return JetTensor({Slot::Upper}, d, std::move(out));
  });
}

TensorField raised_vector_field(const TensorField& g, const TensorField& w) {
  return TensorField({Slot::Upper}, g.dim(), [g, w](std::span<const double> x, int order) {
    const JetTensor gi = jet_inverse_metric(g.jets(x, order));
    const JetTensor wj = w.jets(x, order);
    const int d = gi.dim();
    std::vector<Jet> out;
    for (int i = 0; i < d; ++i) {
      Jet acc = gi(i, 0) * wj(0);
      for (int a = 1; a < d; ++a) acc += gi(i, a) * wj(a);
      out.push_back(std::move(acc));
    }
    return JetTensor({Slot::Upper}, d, std::move(out));
  });
}

TensorField lie_derivative_metric(const TensorField& g, const TensorField& u) {
  return TensorField(lower_slots(2), g.dim(), [g, u](std::span<const double> x, int order) {
    const JetTensor gj = g.jets(x, order + 1);
    const JetTensor uj = u.jets(x, order + 1);
    const int d = gj.dim();
    std::vector<Jet> out;
    out.reserve(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Jet acc = uj(0) * gj(i, j).derivative(0);
        for (int k = 1; k < d; ++k) acc += uj(k) * gj(i, j).derivative(k);
        for (int k = 0; k < d; ++k) acc += gj(k, j) * uj(k).derivative(i) + gj(i, k) * uj(k).derivative(j);
        out.push_back(std::move(acc));
      }
    return JetTensor(lower_slots(2), d, std::move(out));
  });
}

TensorField psi_field(const TensorField& g, const TensorField& u) {
  const TensorField lie = lie_derivative_metric(g, u);
  return TensorField(lower_slots(2), g.dim(), [g, lie](std::span<const double> x, int order) {
    const JetTensor L = lie.jets(x, order);
    const JetTensor gj = g.jets(x, order);
    const int n = gj.dim() / 2;
    const Jet c = jet_trace(jet_inverse_metric(gj), L) * (1.0 / (2.0 * (n + 1)));
    JetTensor out = L;
    for (std::size_t f = 0; f < out.size(); ++f) out[f] -= c * gj[f];
    return out;
  });
}

TensorValue psi_infinitesimal(const TensorField& g, const TensorField& u, const ChartPoint& x) {
  return psi_field(g, u).value(x.x);
}

TensorValue nabla_lambda(const TensorField& g, const HSolution& sol, const ChartPoint& x) {
  const Connection conn(metric_jet(g, x, 1));
  return value_of(conn.covariant_derivative(sol.lambda.jets(x.x, 1)));
}

TensorValue curvature_action(const TensorValue& a, const TensorValue& R) {
  const int d = a.dim();
  TensorValue out(lower_slots(4), d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += a(i, m) * R(m, j, k, l) + a(j, m) * R(m, i, k, l);
          out(i, j, k, l) = s;
        }
  return out;
}

TensorValue integrability_rhs(const TensorValue& D, const TensorValue& g, const TensorValue& J) {
  const int d = g.dim();
  TensorValue out(lower_slots(4), d, 0.0);
  std::vector<double> X(static_cast<std::size_t>(d) * d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          X[a * d + b] = D(l, a) * g(b, k) + D(l, b) * g(a, k) - D(k, a) * g(b, l) - D(k, b) * g(a, l);
      jten_into(out, X, J, k, l);
    }
  return out;
}

TensorValue integrability_residual(const TensorField& g, const TensorField& J, const HSolution& sol,
                                   const ChartPoint& x, std::optional<double> B) {
  const MetricJet m = metric_jet(g, x, 2);
  const TensorValue g0 = m.g();
  const TensorValue R = riemann(m);
  const TensorValue a = sol.a.value(x.x);
  TensorValue D;
  if (B && sol.has_mu()) {
    const double mu = sol.mu.value(x.x)[0];
    D = mu * g0 + *B * a;
  } else {
    D = nabla_lambda(g, sol, x);
  }
  return curvature_action(a, R) - integrability_rhs(D, g0, J.value(x.x));
}

CIdentityResult c_identity_check(const TensorField& g, const TensorField& J, const HSolution& sa,
                                 const HSolution& sA, const ChartPoint& x) {
  const TensorValue g0 = g.value(x.x);
  const TensorValue gi = inverse_metric(g0);
  const TensorValue J0 = J.value(x.x);
  const int d = g0.dim();
  const TensorValue a = trace_free(sa.a.value(x.x), g0, gi);
  const TensorValue A = trace_free(sA.a.value(x.x), g0, gi);
  const TensorValue dl = trace_free(nabla_lambda(g, sa, x), g0, gi);
  const TensorValue dL = trace_free(nabla_lambda(g, sA, x), g0, gi);

  CIdentityResult res;
  Eigen::MatrixXd stack(d * d, 3);
  for (int f = 0; f < d * d; ++f) {
    stack(f, 0) = g0[f];
    stack(f, 1) = sa.a.value(x.x)[f];
    stack(f, 2) = sA.a.value(x.x)[f];
  }
  for (int c = 0; c < 3; ++c) stack.col(c).normalize();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(stack).singularValues();
  res.independence = sv(2);
  res.independent = sv(2) > 1e-6;

  const TensorValue a_up = raise_index(a, 0, gi);
  const TensorValue A_up = raise_index(A, 0, gi);
  for (int i = 0; i < d; ++i)
    for (int l = 0; l < d; ++l) {
      double c = 0.0;
      for (int m = 0; m < d; ++m) c += a_up(m, i) * dL(m, l) - A_up(m, l) * dl(m, i);
      res.max_c = std::max(res.max_c, std::abs(c));
    }

  TensorValue wc(lower_slots(4), d, 0.0);
  std::vector<double> X(static_cast<std::size_t>(d) * d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q)
          X[p * d + q] = a(p, k) * dL(q, l) + a(p, l) * dL(q, k) + a(q, k) * dL(p, l) + a(q, l) * dL(p, k) -
                         A(q, l) * dl(k, p) - A(p, l) * dl(k, q) - A(q, k) * dl(l, p) - A(p, k) * dl(l, q);
      jten_into(wc, X, J0, k, l);
    }
  res.without_c = max_abs(wc);
  return res;
}

AnticommutationDefect anticommutation_defect(const TensorField& g, const TensorField& J,
                                             const HSolution& sol, const ChartPoint& x) {
  const TensorValue J0 = J.value(x.x);
  return {max_abs(hermitian_defect(sol.a.value(x.x), J0)),
          max_abs(hermitian_defect(nabla_lambda(g, sol, x), J0))};
}

nlohmann::json solution_to_json(const HSolution& sol, const std::string& chart,
                                std::span<const ChartPoint> points) {
  nlohmann::json j{{"chart", chart}};
  auto& pts = j["points"] = nlohmann::json::array();
  auto& a = j["a"] = nlohmann::json::array();
  auto& l = j["lambda"] = nlohmann::json::array();
  auto& s = j["lambda_scalar"] = nlohmann::json::array();
  nlohmann::json mu = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back(p.x);
    const auto av = sol.a.value(p.x);
    a.push_back(std::vector<double>(av.components().begin(), av.components().end()));
    const auto lv = sol.lambda.value(p.x);
    l.push_back(std::vector<double>(lv.components().begin(), lv.components().end()));
    s.push_back(sol.lambda_scalar.value(p.x)[0]);
    if (sol.has_mu()) mu.push_back(sol.mu.value(p.x)[0]);
  }
  if (sol.has_mu()) j["mu"] = std::move(mu);
  return j;
}

}  // namespace kahler
