#include "kahler/geometry.hpp"

#include <cmath>

namespace kahler {

MetricJet metric_jet(const TensorField& g, const ChartPoint& p, int order) {
  if (g.rank() != 2 || g.variance() != lower_slots(2))
    throw Error(ErrorKind::InvalidInput, "metric field must be a (0,2) tensor");
  MetricJet m{p, g.jets(p.x, order)};
  const TensorValue g0 = m.g();
  const int n = g0.dim();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(g0(i, j) - g0(j, i)) > 1e-12 * (1.0 + std::abs(g0(i, j))))
        throw Error(ErrorKind::InvalidInput, "metric is not symmetric");
  require_nondegenerate(g0);
  return m;
}

ComplexStructureJet complex_structure_jet(const TensorField& J, const ChartPoint& p, int order) {
  if (J.variance() != Variance{Slot::Upper, Slot::Lower})
    throw Error(ErrorKind::InvalidInput, "complex structure must be a (1,1) tensor");
  return {p, J.jets(p.x, order)};
}

void require_nondegenerate(const TensorValue& g) {
  const int n = g.dim();
  double norms = 1.0;
  for (int i = 0; i < n; ++i) {
    double r = 0.0;
    for (int j = 0; j < n; ++j) r += g(i, j) * g(i, j);
    norms *= std::sqrt(r);
  }
  const double det = determinant<double>(g.components(), n);
  if (!(std::abs(det) > 1e-12 * norms))
    throw Error(ErrorKind::SingularMetric, "metric determinant below threshold");
}

Connection::Connection(const MetricJet& m) : dim_(m.jets.dim()), order_(m.order()), g_(m.jets) {
  if (order_ < 1) throw Error(ErrorKind::InsufficientJet, "connection needs first partials of g");
  const int n = dim_;
  g_inv_ = JetTensor({Slot::Upper, Slot::Upper}, n, inverse<Jet>(g_.components(), n));
  const JetTensor dg = partial_derivative(g_);  // dg(m, k, j) = d_j g_mk

  std::vector<Jet> lowered;  // Gamma_{m jk}
  lowered.reserve(static_cast<std::size_t>(n) * n * n);
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) lowered.push_back(0.5 * (dg(a, k, j) + dg(a, j, k) - dg(j, k, a)));

  std::vector<Jet> gamma;
  gamma.reserve(lowered.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet acc = g_inv_(i, 0).truncated(order_ - 1) * lowered[(0 * n + j) * n + k];
        for (int a = 1; a < n; ++a) acc += g_inv_(i, a) * lowered[(a * n + j) * n + k];
        gamma.push_back(std::move(acc));
      }
  gamma_ = JetTensor({Slot::Upper, Slot::Lower, Slot::Lower}, n, std::move(gamma));
}

JetTensor Connection::covariant_derivative(const JetTensor& t) const {
  const int n = dim_;
  if (t.dim() != n) throw Error(ErrorKind::InvalidInput, "tensor and metric dimensions differ");
  if (jet_order(t) < 1) throw Error(ErrorKind::InsufficientJet, "covariant derivative needs order >= 1");
  JetTensor out = partial_derivative(t);
  const int rank = t.rank();
  std::vector<std::size_t> strides(rank, 1);
  for (int s = rank - 2; s >= 0; --s) strides[s] = strides[s + 1] * n;

  for (std::size_t f = 0; f < t.size(); ++f) {
    const auto idx = t.unflat(f);
    for (int k = 0; k < n; ++k) {
      Jet& acc = out[f * n + k];
      for (int s = 0; s < rank; ++s) {
        const std::size_t base = f - static_cast<std::size_t>(idx[s]) * strides[s];
        for (int m = 0; m < n; ++m) {
          const Jet& tm = t[base + static_cast<std::size_t>(m) * strides[s]];
          if (t.variance()[s] == Slot::Upper)
            acc += gamma_(idx[s], k, m) * tm;
          else
            acc -= gamma_(m, k, idx[s]) * tm;
        }
      }
    }
  }
  return out;
}

JetTensor Connection::riemann() const {
  if (order_ < 2) throw Error(ErrorKind::InsufficientJet, "curvature needs second partials of g");
  const int n = dim_;
  const JetTensor dgamma = partial_derivative(gamma_);  // dgamma(i, j, k, l) = d_l Gamma^i_jk
  std::vector<Jet> r;
  r.reserve(JetTensor::count(4, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Jet acc = dgamma(i, l, j, k) - dgamma(i, k, j, l);
          for (int m = 0; m < n; ++m)
            acc += gamma_(i, k, m) * gamma_(m, l, j) - gamma_(i, l, m) * gamma_(m, k, j);
          r.push_back(std::move(acc));
        }
  return JetTensor({Slot::Upper, Slot::Lower, Slot::Lower, Slot::Lower}, n, std::move(r));
}

TensorValue christoffels(const MetricJet& m) {
  if (m.order() < 1) throw Error(ErrorKind::InsufficientJet, "christoffels need first partials");
  const TensorValue g = m.g();
  const TensorValue dg = m.dg();  // dg(a, k, j) = d_j g_ak
  const TensorValue gi = inverse_metric(g);
  const int n = g.dim();
  std::vector<double> lowered(static_cast<std::size_t>(n) * n * n);
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) lowered[(a * n + j) * n + k] = 0.5 * (dg(a, k, j) + dg(a, j, k) - dg(j, k, a));
  TensorValue gamma({Slot::Upper, Slot::Lower, Slot::Lower}, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) {
      const double gia = gi(i, a);
      if (gia == 0.0) continue;
      for (int jk = 0; jk < n * n; ++jk) gamma[static_cast<std::size_t>(i) * n * n + jk] += gia * lowered[a * n * n + jk];
    }
  return gamma;
}

TensorValue riemann(const MetricJet& m) {
  if (m.order() < 2) throw Error(ErrorKind::InsufficientJet, "curvature needs second partials");
  return value_of(Connection(m).riemann());
}

TensorValue covariant_derivative(const TensorField& t, const TensorField& g, const ChartPoint& p,
                                 int order) {
  if (order < 1 || order > 3) throw Error(ErrorKind::InvalidInput, "derivative order must be 1..3");
  const Connection conn(metric_jet(g, p, order));
  JetTensor d = t.jets(p.x, order);
  if (jet_order(d) < order) throw Error(ErrorKind::InsufficientJet, "field jets too short");
  for (int r = 0; r < order; ++r) d = conn.covariant_derivative(d);
  return value_of(d);
}

namespace {

void require_pair(const TensorValue& t, const TensorValue& J) {
  if (t.variance() != lower_slots(2) || J.variance() != Variance{Slot::Upper, Slot::Lower} ||
      t.dim() != J.dim())
    throw Error(ErrorKind::InvalidInput, "expected a (0,2) tensor and a (1,1) complex structure");
}

}  // namespace

TensorValue hermitize(const TensorValue& t, const TensorValue& J) {
  require_pair(t, J);
  const int n = t.dim();
  TensorValue out(lower_slots(2), n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = t(i, j) + t(j, i);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) acc += (J(a, i) * J(b, j) + J(a, j) * J(b, i)) * t(a, b);
      out(i, j) = 0.25 * acc;
    }
  return out;
}

TensorValue jtensor_contract(const TensorValue& t, const TensorValue& J) {
  require_pair(t, J);
  const int n = t.dim();
  TensorValue out = t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out(i, j) += J(a, i) * J(b, j) * t(a, b);
  return out;
}

TensorValue kahler_form(const TensorValue& g, const TensorValue& J) {
  require_pair(g, J);
  const int n = g.dim();
  TensorValue out(lower_slots(2), n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a) out(i, j) += g(i, a) * J(a, j);
  return out;
}

JetTensor kahler_form(const JetTensor& g, const JetTensor& J) {
  const int n = g.dim();
  std::vector<Jet> out;
  out.reserve(g.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet acc = g(i, 0) * J(0, j);
      for (int a = 1; a < n; ++a) acc += g(i, a) * J(a, j);
      out.push_back(std::move(acc));
    }
  return JetTensor(lower_slots(2), n, std::move(out));
}

TensorValue bar(const TensorValue& w, const TensorValue& J) {
  const int n = w.dim();
  TensorValue out(lower_slots(1), n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) out(i) += J(a, i) * w(a);
  return out;
}

JetTensor bar(const JetTensor& w, const JetTensor& J) {
  const int n = w.dim();
  std::vector<Jet> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Jet acc = J(0, i) * w(0);
    for (int a = 1; a < n; ++a) acc += J(a, i) * w(a);
    out.push_back(std::move(acc));
  }
  return JetTensor(lower_slots(1), n, std::move(out));
}

TensorValue hermitian_defect(const TensorValue& t, const TensorValue& J) {
  require_pair(t, J);
  const int n = t.dim();
  TensorValue out(lower_slots(2), n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a) out(i, j) += J(a, i) * t(a, j) + t(i, a) * J(a, j);
  return out;
}

double holomorphic_sectional_curvature(const TensorValue& R, const TensorValue& g,
                                       const TensorValue& J, std::span<const double> v) {
  const int n = g.dim();
  std::vector<double> jv(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) jv[i] += J(i, j) * v[j];
  std::vector<double> rv(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) rv[i] += R(i, j, k, l) * jv[j] * v[k] * jv[l];
  double num = 0.0, vv = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      num += g(i, j) * rv[i] * v[j];
      vv += g(i, j) * v[i] * v[j];
    }
  return num / (vv * vv);
}

bool KahlerReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass()) return false;
  return true;
}

KahlerReport verify_kahler(const TensorField& g, const TensorField& J,
                           std::span<const ChartPoint> points, double tol) {
  KahlerReport report;
  report.checks = {{"J^2+Id", 0.0, tol}, {"g-hermitian", 0.0, tol}, {"nabla J", 0.0, tol},
                   {"d Omega", 0.0, tol}};
  for (const auto& p : points) {
    const MetricJet m = metric_jet(g, p, 1);
    const JetTensor Jj = J.jets(p.x, 1);
    const TensorValue g0 = m.g();
    const TensorValue J0 = value_of(Jj);
    const int n = g0.dim();
    const double scale = std::max(1.0, max_abs(g0));

    double sq = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = i == j ? 1.0 : 0.0;
        for (int a = 0; a < n; ++a) acc += J0(i, a) * J0(a, j);
        sq = std::max(sq, std::abs(acc));
      }
    report.checks[0].max_residual = std::max(report.checks[0].max_residual, sq);
    report.checks[1].max_residual =
        std::max(report.checks[1].max_residual, max_abs(hermitian_defect(g0, J0)) / scale);

    const Connection conn(m);
    report.checks[2].max_residual =
        std::max(report.checks[2].max_residual, max_abs(value_of(conn.covariant_derivative(Jj))));

    const TensorValue dOmega = partials_value(kahler_form(m.jets, Jj), 1);  // (i, j, k) = d_k Omega_ij
    double cyc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          cyc = std::max(cyc, std::abs(dOmega(j, k, i) + dOmega(k, i, j) + dOmega(i, j, k)));
    report.checks[3].max_residual = std::max(report.checks[3].max_residual, cyc / scale);
    ++report.points;
  }
  return report;
}

TensorValue identity_tensor(int dim, Variance v) {
  TensorValue out(std::move(v), dim, 0.0);
  for (int i = 0; i < dim; ++i) out(i, i) = 1.0;
  return out;
}

TensorValue inverse_metric(const TensorValue& g) {
  return TensorValue({Slot::Upper, Slot::Upper}, g.dim(), inverse<double>(g.components(), g.dim()));
}

double trace(const TensorValue& t) {
  double s = 0.0;
  for (int i = 0; i < t.dim(); ++i) s += t(i, i);
  return s;
}

double metric_trace(const TensorValue& g_inv, const TensorValue& t) {
  double s = 0.0;
  for (std::size_t f = 0; f < t.size(); ++f) s += g_inv[f] * t[f];
  return s;
}

TensorValue transpose(const TensorValue& t) {
  const int n = t.dim();
  Variance v{t.variance()[1], t.variance()[0]};
  TensorValue out(v, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = t(j, i);
  return out;
}

}  // namespace kahler
