#include "kahler/prolongation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace kahler {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd to_matrix(const TensorValue& t) {
  const int d = t.dim();
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = t(i, j);
  return m;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int state_size(int d) { return d * d + d + 1; }

/// Pointwise data the transport right-hand side needs along a path.
struct Geometry {
  Eigen::MatrixXd C;   // C(m, i) = Gamma^m_{ki} v^k
  Eigen::MatrixXd J;   // J(a, i) = J^a_i
  Eigen::VectorXd gv;  // g_jk v^k
  Eigen::VectorXd Ov;  // Omega_jk v^k
  Eigen::VectorXd v;
  bool flat = false;
};

Geometry geometry_at(const TensorField& g, const TensorField& Jf, std::span<const double> x,
                     std::span<const double> v) {
  const JetTensor jets = g.jets(x, 1);
  const int d = jets.dim();
  Geometry geo;
  geo.v = to_eigen(v);
  Eigen::MatrixXd G(d, d);
  bool flat = true;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const Jet& c = jets(i, j);
      G(i, j) = c.value();
      for (int k = 0; k < d && flat; ++k) flat = c.partial(k) == 0.0;
    }
  if (!G.allFinite()) throw Error(ErrorKind::Domain, "metric is not finite along the path");
  geo.flat = flat;
  geo.J = to_matrix(Jf.value(x));
  geo.gv = G * geo.v;
  geo.Ov = G * geo.J * geo.v;
  if (flat) return geo;
  // M(a, i) = Gamma_{a k i} v^k, then C = g^-1 M.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int k = 0; k < d; ++k)
        s += v[k] * (jets(a, i).partial(k) + jets(a, k).partial(i) - jets(k, i).partial(a));
      M(a, i) = 0.5 * s;
    }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(G);
  if (!(std::abs(lu.determinant()) > 0.0)) throw Error(ErrorKind::SingularMetric, "metric is singular along the path");
  geo.C = lu.solve(M);
  return geo;
}

/// d/dt of every state along the path.  States are rows of Z, so each state
/// component is a contiguous column.
void rhs(const Geometry& geo, double B, const Eigen::MatrixXd& Z, Eigen::MatrixXd& dZ) {
  const int d = static_cast<int>(geo.v.size());
  const int dd = d * d;
  const Eigen::Index N = Z.rows();
  dZ.resize(N, Z.cols());
  const auto L = Z.middleCols(dd, d);
  const Eigen::MatrixXd LB = L * geo.J;  // row c: bar(lambda_c)
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      dZ.col(i * d + j) = geo.gv(j) * L.col(i) + geo.gv(i) * L.col(j) - geo.Ov(j) * LB.col(i) - geo.Ov(i) * LB.col(j);
  auto dL = dZ.middleCols(dd, d);
  dL = Z.col(dd + d) * geo.gv.transpose();
  if (B != 0.0)
    for (int i = 0; i < d; ++i) dL.col(i) += B * (Z.middleCols(i * d, d) * geo.v);
  dZ.col(dd + d) = (2.0 * B) * (L * geo.v);
  if (!geo.flat) {
    dL += L * geo.C;
    Eigen::MatrixXd A(d, d);
    for (Eigen::Index c = 0; c < N; ++c) {
      for (int i = 0; i < d; ++i) A.row(i) = Z.row(c).segment(i * d, d);
      const Eigen::MatrixXd dA = geo.C.transpose() * A + A * geo.C;
      for (int i = 0; i < d; ++i) dZ.row(c).segment(i * d, d) += dA.row(i);
    }
  }
}

/// Projects the a-block of every state onto symmetric J-hermitian forms,
/// returning the largest change.
double hermitize_states(const Eigen::MatrixXd& J, Eigen::MatrixXd& Z) {
  const int d = static_cast<int>(J.rows());
  std::vector<std::vector<std::pair<int, double>>> nz(d);  // nonzeros of column i of J
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < d; ++a)
      if (J(a, i) != 0.0) nz[i].emplace_back(a, J(a, i));
  const Eigen::MatrixXd A = Z.leftCols(d * d);
  double drift = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd h = 0.25 * (A.col(i * d + j) + A.col(j * d + i));
      for (const auto& [a, ja] : nz[i])
        for (const auto& [b, jb] : nz[j]) h += (0.25 * ja * jb) * (A.col(a * d + b) + A.col(b * d + a));
      drift = std::max(drift, (A.col(i * d + j) - h).cwiseAbs().maxCoeff());
      Z.col(i * d + j) = h;
    }
  return drift;
}

class PathIntegrator {
 public:
  PathIntegrator(const TensorField& g, const TensorField& J, double B, const Path& path, const Box* domain)
      : g_(g), J_(J), B_(B), path_(path), domain_(domain) {
    breaks_.push_back(0.0);
    for (double c : path.corners)
      if (c > 0.0 && c < 1.0) breaks_.push_back(c);
    breaks_.push_back(1.0);
    std::sort(breaks_.begin(), breaks_.end());
  }

  Eigen::MatrixXd run(const Eigen::MatrixXd& Y0, double h, double& drift) {
    Eigen::MatrixXd Y = Y0, k1, k2, k3, k4;
    for (std::size_t s = 0; s + 1 < breaks_.size(); ++s) {
      const double t0 = breaks_[s], t1 = breaks_[s + 1];
      const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / h - 1e-9)));
      const double dt = (t1 - t0) / steps;
      for (int i = 0; i < steps; ++i) {
        const double t = t0 + i * dt;
        const Geometry& a = at(t, s);
        const Geometry& m = at(t + 0.5 * dt, s);
        const Geometry& b = at(t + dt, s);
        rhs(a, B_, Y, k1);
        rhs(m, B_, Y + 0.5 * dt * k1, k2);
        rhs(m, B_, Y + 0.5 * dt * k2, k3);
        rhs(b, B_, Y + dt * k3, k4);
        Y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        drift = std::max(drift, hermitize_states(b.J, Y));
      }
    }
    return Y;
  }

 private:
  const Geometry& at(double t, std::size_t piece) {
    const auto key = std::make_pair(static_cast<long long>(piece), std::llround(t * 1073741824.0));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    // Evaluate just inside the piece so corner velocities come from the piece itself.
    const double lo = breaks_[piece], hi = breaks_[piece + 1];
    const double te = std::clamp(t, lo + 1e-12 * (hi - lo), hi - 1e-12 * (hi - lo));
    const auto x = path_.position(t);
    if (domain_ && !domain_->contains(x))
      throw Error(ErrorKind::OutOfDomain, "transport path leaves chart " + path_.chart);
    const auto v = path_.velocity(te);
    return cache_.emplace(key, geometry_at(g_, J_, x, v)).first->second;
  }

  const TensorField& g_;
  const TensorField& J_;
  double B_;
  const Path& path_;
  const Box* domain_;
  std::vector<double> breaks_;
  std::map<std::pair<long long, long long>, Geometry> cache_;
};

Eigen::MatrixXd state_columns(std::span<const ProlongedState> states) {
  const int d = states.front().dim();
  Eigen::MatrixXd Y(state_size(d), static_cast<Eigen::Index>(states.size()));
  for (std::size_t c = 0; c < states.size(); ++c) Y.col(static_cast<Eigen::Index>(c)) = states[c].to_vector();
  return Y;
}

/// Curvature condition applied to the a-block of every column: rows are the
/// (i, j, k, l) components.
Eigen::MatrixXd condition_rows(const TensorValue& R, const TensorValue& g, const TensorValue& J, double B,
                               const Eigen::MatrixXd& Y) {
  const int d = g.dim();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(d) * d * d * d, Y.cols());
  for (Eigen::Index c = 0; c < Y.cols(); ++c) {
    TensorValue a(lower_slots(2), d, std::vector<double>(Y.col(c).data(), Y.col(c).data() + d * d));
    const TensorValue r = curvature_B_condition(R, g, J, B, a);
    rows.col(c) = to_eigen(r.components());
  }
  return rows;
}

/// Accumulated row space of the constraints, kept compressed to at most N rows.
class ConstraintSpace {
 public:
  ConstraintSpace(int n, double rank_tol, double floor) : n_(n), tol_(rank_tol), floor_(floor) {
    rows_.resize(0, n);
  }

  void add(const Eigen::MatrixXd& rows) {
    if (rows.cols() != n_) throw Error(ErrorKind::InvalidInput, "constraint rows have the wrong width");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < rows.rows(); ++r)
      if (rows.row(r).norm() >= floor_) keep.push_back(r);
    if (keep.empty()) return;
    Eigen::MatrixXd stacked(rows_.rows() + static_cast<Eigen::Index>(keep.size()), n_);
    stacked.topRows(rows_.rows()) = rows_;
    for (std::size_t i = 0; i < keep.size(); ++i)
      stacked.row(rows_.rows() + static_cast<Eigen::Index>(i)) = rows.row(keep[i]).normalized();
    if (stacked.rows() > n_) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
      rows_ = qr.matrixQR().topRows(n_).triangularView<Eigen::Upper>();
    } else {
      rows_ = stacked;
    }
  }

  Eigen::VectorXd singular_values() const {
    if (rows_.rows() == 0) return Eigen::VectorXd::Zero(n_);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows_);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n_);
    s.head(svd.singularValues().size()) = svd.singularValues();
    return s;
  }

  int rank() const {
    const Eigen::VectorXd s = singular_values();
    if (s(0) <= 0.0) return 0;
    int r = 0;
    while (r < n_ && s(r) >= tol_ * s(0)) ++r;
    return r;
  }

  Eigen::MatrixXd kernel() const {
    const int r = rank();
    if (rows_.rows() == 0) return Eigen::MatrixXd::Identity(n_, n_);
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(rows_.rows(), n_), n_);
    padded.topRows(rows_.rows()) = rows_;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(padded, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(n_ - r);
  }

 private:
  int n_;
  double tol_, floor_;
  Eigen::MatrixXd rows_;
};

std::vector<double> unit_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> nd;
  std::vector<double> u(d);
  double s = 0.0;
  for (auto& c : u) {
    c = nd(rng);
    s += c * c;
  }
  for (auto& c : u) c /= std::sqrt(s);
  return u;
}

/// Component of w orthogonal to u, normalised.
std::vector<double> orthogonal_unit(std::vector<double> w, const std::vector<double>& u) {
  double p = 0.0, s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) p += w[i] * u[i];
  for (std::size_t i = 0; i < u.size(); ++i) {
    w[i] -= p * u[i];
    s += w[i] * w[i];
  }
  for (auto& c : w) c /= std::sqrt(s);
  return w;
}

void append_lattice(const KahlerModel& m, int offset, int total, std::vector<std::vector<double>>& out) {
  if (m.kind == ModelKind::FlatTorus) {
    for (int i = 0; i < m.dim(); ++i) {
      std::vector<double> v(total, 0.0);
      v[offset + i] = m.periods[i];
      out.push_back(std::move(v));
    }
  } else if (m.kind == ModelKind::Product) {
    for (const auto& f : m.factors) {
      append_lattice(f, offset, total, out);
      offset += f.dim();
    }
  }
}

}  // namespace

// ProlongedState

Eigen::VectorXd ProlongedState::to_vector() const {
  const int d = dim();
  Eigen::VectorXd v(state_size(d));
  for (int f = 0; f < d * d; ++f) v(f) = a[f];
  for (int i = 0; i < d; ++i) v(d * d + i) = lambda[i];
  v(d * d + d) = mu;
  return v;
}

ProlongedState ProlongedState::from_vector(const Eigen::VectorXd& v, int d) {
  if (v.size() != state_size(d)) throw Error(ErrorKind::InvalidInput, "state vector has the wrong length");
  ProlongedState s;
  s.a = TensorValue(lower_slots(2), d, std::vector<double>(v.data(), v.data() + d * d));
  s.lambda = TensorValue(lower_slots(1), d, std::vector<double>(v.data() + d * d, v.data() + d * d + d));
  s.mu = v(d * d + d);
  return s;
}

ProlongedState ProlongedState::trivial(const TensorValue& g, double B) {
  return {g, TensorValue(lower_slots(1), g.dim(), 0.0), -B};
}

ProlongedState ProlongedState::operator+(const ProlongedState& o) const {
  return {a + o.a, lambda + o.lambda, mu + o.mu};
}

ProlongedState operator*(double s, const ProlongedState& st) { return {s * st.a, s * st.lambda, s * st.mu}; }

double ProlongedState::max_abs() const {
  return std::max({kahler::max_abs(a), kahler::max_abs(lambda), std::abs(mu)});
}

nlohmann::json ProlongedState::to_json() const {
  return {{"a", std::vector<double>(a.components().begin(), a.components().end())},
          {"lambda", std::vector<double>(lambda.components().begin(), lambda.components().end())},
          {"mu", mu}};
}

ProlongedState state_at(const HSolution& sol, const ChartPoint& x) {
  if (!sol.has_mu()) throw Error(ErrorKind::InvalidInput, "solution has no mu");
  return {sol.a.value(x.x), sol.lambda.value(x.x), sol.mu.value(x.x)[0]};
}

// Extended system

double ExtendedResidual::max_abs() const {
  return std::max({kahler::max_abs(hpr), kahler::max_abs(lambda), kahler::max_abs(mu)});
}

ExtendedResidual extended_residual(const TensorField& g, const TensorField& J, double B, const HSolution& sol,
                                   const ChartPoint& x) {
  if (!sol.has_mu()) throw Error(ErrorKind::InvalidInput, "extended residual needs mu");
  ExtendedResidual r;
  r.hpr = hpr_residual(g, J, sol, x);
  const TensorValue g0 = g.value(x.x);
  const TensorValue a = sol.a.value(x.x);
  const TensorValue l = sol.lambda.value(x.x);
  const JetTensor mu = sol.mu.jets(x.x, 1);
  r.lambda = nabla_lambda(g, sol, x) - mu[0].value() * g0 - B * a;
  r.mu = TensorValue(lower_slots(1), g0.dim(), 0.0);
  for (int i = 0; i < g0.dim(); ++i) r.mu(i) = mu[0].partial(i) - 2.0 * B * l(i);
  return r;
}

BFit estimate_B(const TensorField& g, const TensorField&, const HSolution& sol, const ChartPoint& x) {
  const TensorValue g0 = g.value(x.x);
  const TensorValue gi = inverse_metric(g0);
  const int d = g0.dim();
  const int n = d / 2;
  const TensorValue a = sol.a.value(x.x);
  const double lam = 0.25 * metric_trace(gi, a);
  const TensorValue S = a - (2.0 / n * lam) * g0;
  if (max_abs(S) < 1e-8 * std::max(1.0, max_abs(a)))
    throw Error(ErrorKind::ProportionalSolution, "a is proportional to g; B is undetermined");
  const TensorValue dl = nabla_lambda(g, sol, x);
  const TensorValue T = dl - (metric_trace(gi, dl) / d) * g0;
  double st = 0.0, ss = 0.0;
  for (std::size_t f = 0; f < S.size(); ++f) {
    st += S[f] * T[f];
    ss += S[f] * S[f];
  }
  BFit fit{st / ss, 0.0};
  fit.residual = max_abs(T - fit.B * S);
  return fit;
}

TensorValue curvature_B_condition(const TensorValue& R, const TensorValue& g, const TensorValue& J, double B,
                                  const TensorValue& a) {
  return curvature_action(a, R) - B * integrability_rhs(a, g, J);
}

TensorValue curvature_B_condition(const TensorField& g, const TensorField& J, double B, const TensorField& a,
                                  const ChartPoint& x) {
  const MetricJet m = metric_jet(g, x, 2);
  return curvature_B_condition(riemann(m), m.g(), J.value(x.x), B, a.value(x.x));
}

TensorValue constant_curvature_tensor(const TensorValue& g, const TensorValue& J) {
  const int d = g.dim();
  const TensorValue O = kahler_form(g, J);
  TensorValue K({Slot::Upper, Slot::Lower, Slot::Lower, Slot::Lower}, d, 0.0);
  for (int al = 0; al < d; ++al)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          K(al, j, k, l) = 0.25 * ((al == k) * g(j, l) - (al == l) * g(j, k) + J(al, k) * O(j, l) -
                                   J(al, l) * O(j, k) + 2.0 * J(al, j) * O(k, l));
  return K;
}

TensorValue constant_curvature_tensor(const TensorField& g, const TensorField& J, const ChartPoint& x) {
  return constant_curvature_tensor(g.value(x.x), J.value(x.x));
}

// Paths

Path polyline_path(const std::string& chart, std::vector<std::vector<double>> vertices) {
  if (vertices.size() < 2) throw Error(ErrorKind::InvalidInput, "a path needs at least two vertices");
  std::vector<double> cum{0.0};
  for (std::size_t s = 0; s + 1 < vertices.size(); ++s) {
    double l = 0.0;
    for (std::size_t i = 0; i < vertices[s].size(); ++i)
      l += (vertices[s + 1][i] - vertices[s][i]) * (vertices[s + 1][i] - vertices[s][i]);
    cum.push_back(cum.back() + std::sqrt(l));
  }
  const double total = cum.back();
  Path p;
  p.chart = chart;
  p.length = total;
  std::vector<double> knots;
  for (double c : cum) knots.push_back(total > 0.0 ? c / total : 0.0);
  for (std::size_t s = 1; s + 1 < knots.size(); ++s) p.corners.push_back(knots[s]);
  auto piece = [knots](double t) {
    std::size_t s = 0;
    while (s + 2 < knots.size() && t >= knots[s + 1]) ++s;
    return s;
  };
  p.position = [vertices, knots, piece](double t) {
    const std::size_t s = piece(t);
    const double w = knots[s + 1] > knots[s] ? (t - knots[s]) / (knots[s + 1] - knots[s]) : 0.0;
    std::vector<double> x(vertices[s].size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = vertices[s][i] + w * (vertices[s + 1][i] - vertices[s][i]);
    return x;
  };
  p.velocity = [vertices, knots, piece](double t) {
    const std::size_t s = piece(t);
    const double span = knots[s + 1] - knots[s];
    std::vector<double> v(vertices[s].size(), 0.0);
    if (span > 0.0)
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = (vertices[s + 1][i] - vertices[s][i]) / span;
    return v;
  };
  return p;
}

Path segment_path(const std::string& chart, std::vector<double> from, std::vector<double> to) {
  return polyline_path(chart, {std::move(from), std::move(to)});
}

Path rectangle_loop(const std::string& chart, std::vector<double> base, int i, int j, double side) {
  auto p1 = base, p2 = base, p3 = base;
  p1[i] += side;
  p2[i] += side;
  p2[j] += side;
  p3[j] += side;
  return polyline_path(chart, {base, p1, p2, p3, base});
}

Path smooth_loop(const std::string& chart, std::vector<double> base, std::vector<double> u,
                 std::vector<double> w, double r) {
  constexpr double tau = 2.0 * std::numbers::pi;
  Path p;
  p.chart = chart;
  double nu = 0.0, nw = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    nu += u[i] * u[i];
    nw += w[i] * w[i];
  }
  p.length = tau * r * std::sqrt(std::max(nu, nw));  // upper bound, used only for scaling
  p.position = [=](double t) {
    std::vector<double> x(base);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += r * (std::sin(tau * t) * u[i] + (1.0 - std::cos(tau * t)) * w[i]);
    return x;
  };
  p.velocity = [=](double t) {
    std::vector<double> v(base.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = r * tau * (std::cos(tau * t) * u[i] + std::sin(tau * t) * w[i]);
    return v;
  };
  return p;
}

// Transport

Eigen::MatrixXd transport_states(const TensorField& g, const TensorField& J, double B, const Path& path,
                                 const Eigen::MatrixXd& states, const TransportOptions& opt,
                                 TransportStats* stats, const Box* domain) {
  const int d = g.dim();
  if (states.rows() != state_size(d)) throw Error(ErrorKind::InvalidInput, "state matrix has the wrong row count");
  TransportStats st;
  if (path.length == 0.0 || states.cols() == 0) {
    st.step = opt.step;
    if (stats) *stats = st;
    return states;
  }
  PathIntegrator integ(g, J, B, path, domain);
  double h = opt.step;
  const Eigen::MatrixXd Z0 = states.transpose();
  Eigen::MatrixXd coarse = integ.run(Z0, h, st.hermitian_drift);
  Eigen::MatrixXd fine;
  for (int k = 0;; ++k) {
    fine = integ.run(Z0, 0.5 * h, st.hermitian_drift);
    const double scale = std::max(1.0, fine.cwiseAbs().maxCoeff());
    st.change = (fine - coarse).cwiseAbs().maxCoeff() / scale / path.length;
    st.halvings = k + 1;
    st.step = 0.5 * h;
    if (st.change < opt.halving_tol) break;
    if (k + 1 >= opt.max_halvings) {
      st.converged = false;
      break;
    }
    h *= 0.5;
    coarse = std::move(fine);
  }
  if (stats) *stats = st;
  return fine.transpose();
}

ProlongedState transport(const TensorField& g, const TensorField& J, double B, const Path& path,
                         const ProlongedState& state0, const TransportOptions& opt, TransportStats* stats) {
  const Eigen::MatrixXd Y = transport_states(g, J, B, path, state0.to_vector(), opt, stats);
  return ProlongedState::from_vector(Y.col(0), g.dim());
}

ProlongedState transport(const KahlerModel& model, double B, const Path& path, const ProlongedState& state0,
                         const TransportOptions& opt, TransportStats* stats) {
  const auto& c = model.chart(path.chart);
  const Eigen::MatrixXd Y = transport_states(c.metric, c.complex_structure, B, path, state0.to_vector(), opt,
                                             stats, &c.chart.domain());
  return ProlongedState::from_vector(Y.col(0), model.dim());
}

Eigen::MatrixXd fiber_basis(const TensorValue& J) {
  const int d = J.dim();
  const int n = d / 2;
  std::vector<Eigen::VectorXd> forms;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      TensorValue s(lower_slots(2), d, 0.0);
      s(i, j) = s(j, i) = 1.0;
      forms.push_back(to_eigen(hermitize(s, J).components()));
    }
  Eigen::MatrixXd M(d * d, static_cast<Eigen::Index>(forms.size()));
  for (std::size_t c = 0; c < forms.size(); ++c) M.col(static_cast<Eigen::Index>(c)) = forms[c];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int r = 0;
  while (r < s.size() && s(r) > 1e-8 * s(0)) ++r;
  if (r != n * n) throw Error(ErrorKind::InvalidInput, "complex structure does not give n^2 hermitian forms");
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(state_size(d), (n + 1) * (n + 1));
  Eigen::MatrixXd U = svd.matrixU().leftCols(r);
  // Fix signs so the basis does not depend on SVD conventions.
  for (int c = 0; c < r; ++c) {
    Eigen::Index idx;
    U.col(c).cwiseAbs().maxCoeff(&idx);
    if (U(idx, c) < 0.0) U.col(c) *= -1.0;
  }
  F.topLeftCorner(d * d, r) = U;
  F.block(d * d, r, d + 1, d + 1) = Eigen::MatrixXd::Identity(d + 1, d + 1);
  return F;
}

// Mobility

std::vector<std::vector<double>> lattice_vectors(const KahlerModel& model) {
  std::vector<std::vector<double>> out;
  append_lattice(model, 0, model.dim(), out);
  return out;
}

MobilityConfig MobilityConfig::from_json(const nlohmann::json& j) {
  MobilityConfig c;
  c.sample_points = j.value("sample_points", c.sample_points);
  c.loop_side = j.value("loop_side", c.loop_side);
  c.random_loops = j.value("random_loops", c.random_loops);
  c.loops_per_batch = j.value("loops_per_batch", c.loops_per_batch);
  c.max_planes = j.value("max_planes", c.max_planes);
  c.lattice_loops = j.value("lattice_loops", c.lattice_loops);
  c.rank_tol = j.value("rank_tol", c.rank_tol);
  c.row_floor = j.value("row_floor", c.row_floor);
  c.seed = j.value("seed", c.seed);
  c.transport.step = j.value("step", c.transport.step);
  c.transport.halving_tol = j.value("halving_tol", c.transport.halving_tol);
  c.transport.max_halvings = j.value("max_halvings", c.transport.max_halvings);
  if (c.sample_points < 0 || c.random_loops < 0 || c.loops_per_batch < 1 || c.loop_side <= 0.0 ||
      c.rank_tol <= 0.0 || c.transport.step <= 0.0)
    throw Error(ErrorKind::Config, "invalid mobility configuration");
  return c;
}

nlohmann::json MobilityConfig::to_json() const {
  return {{"sample_points", sample_points}, {"loop_side", loop_side},
          {"random_loops", random_loops},   {"loops_per_batch", loops_per_batch},
          {"max_planes", max_planes},       {"lattice_loops", lattice_loops},
          {"rank_tol", rank_tol},           {"row_floor", row_floor},
          {"seed", seed},                   {"step", transport.step},
          {"halving_tol", transport.halving_tol}, {"max_halvings", transport.max_halvings}};
}

nlohmann::json MobilityReport::to_json() const {
  nlohmann::json j{{"label", "local mobility estimate"},
                   {"B", B},
                   {"dimension", dimension},
                   {"fiber_dimension", fiber_dimension},
                   {"base", {{"chart", base.chart}, {"x", base.x}}},
                   {"constraint_history", constraint_history},
                   {"batches", batch_labels},
                   {"singular_values", singular_values},
                   {"converged", converged},
                   {"warnings", warnings}};
  j["gap"] = std::isfinite(gap) ? nlohmann::json(gap) : nlohmann::json(nullptr);
  auto& b = j["basis"] = nlohmann::json::array();
  for (const auto& s : basis) b.push_back(s.to_json());
  if (!swept_B.empty()) j["sweep"] = {{"B", swept_B}, {"dimension", swept_dimension}};
  return j;
}

MobilityReport degree_of_mobility(const KahlerModel& model, double B, const ChartPoint& base,
                                  const MobilityConfig& cfg) {
  const ModelChart& mc = model.chart(base.chart);
  const TensorField& g = mc.metric;
  const TensorField& Jf = mc.complex_structure;
  const Box& domain = mc.chart.domain();
  if (!domain.contains(base.x)) throw Error(ErrorKind::OutOfDomain, "base point outside its chart");
  const int d = model.dim();
  const TensorValue J0 = Jf.value(base.x);
  const Eigen::MatrixXd F = fiber_basis(J0);
  const int N = static_cast<int>(F.cols());
  std::mt19937_64 rng(cfg.seed);

  MobilityReport rep;
  rep.B = B;
  rep.base = base;
  rep.fiber_dimension = N;
  ConstraintSpace space(N, cfg.rank_tol, cfg.row_floor);
  bool transport_ok = true;

  auto transport_basis = [&](const Path& p) {
    TransportStats st;
    Eigen::MatrixXd Y = transport_states(g, Jf, B, p, F, cfg.transport, &st, &domain);
    transport_ok = transport_ok && st.converged;
    return Y;
  };
  auto record = [&](const std::string& label) {
    rep.batch_labels.push_back(label);
    rep.constraint_history.push_back(space.rank());
  };
  auto condition_at = [&](const ChartPoint& p, const Eigen::MatrixXd& Y) {
    const MetricJet m = metric_jet(g, p, 2);
    return condition_rows(riemann(m), m.g(), Jf.value(p.x), B, Y);
  };

  space.add(condition_at(base, F));
  record("curvature condition at base");

  if (cfg.lattice_loops) {
    const auto lattice = lattice_vectors(model);
    if (!lattice.empty()) {
      for (const auto& L : lattice) {
        auto end = base.x;
        for (int i = 0; i < d; ++i) end[i] += L[i];
        space.add(transport_basis(segment_path(base.chart, base.x, end)) - F);
      }
      record("lattice loops");
    }
  }

  if (cfg.sample_points > 0) {
    for (const auto& p : model.sample_points(rng, cfg.sample_points, model.chart_index(base.chart)))
      space.add(condition_at(p, transport_basis(segment_path(base.chart, base.x, p.x))));
    record("curvature condition at transported samples");
  }

  std::vector<Path> loops;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (cfg.max_planes < 0 || static_cast<int>(loops.size()) < cfg.max_planes)
        loops.push_back(rectangle_loop(base.chart, base.x, i, j, cfg.loop_side));
  for (int r = 0; r < cfg.random_loops; ++r) {
    const auto u = unit_vector(rng, d);
    const auto w = orthogonal_unit(unit_vector(rng, d), u);
    loops.push_back(smooth_loop(base.chart, base.x, u, w, 0.5 * cfg.loop_side));
  }

  int stable = 0;
  for (std::size_t start = 0; start < loops.size() && stable < 2; start += cfg.loops_per_batch) {
    const int before = space.rank();
    const std::size_t stop = std::min(loops.size(), start + static_cast<std::size_t>(cfg.loops_per_batch));
    for (std::size_t l = start; l < stop; ++l) space.add(transport_basis(loops[l]) - F);
    record("holonomy loops " + std::to_string(start) + ".." + std::to_string(stop - 1));
    stable = space.rank() == before ? stable + 1 : 0;
  }
  if (stable < 2) {
    rep.converged = false;
    rep.warnings.push_back("rank not confirmed stable over two loop batches");
  }
  if (!transport_ok) rep.warnings.push_back("transport step halving did not reach its tolerance");

  const Eigen::VectorXd sv = space.singular_values();
  rep.singular_values = to_std(sv);
  const int rank = space.rank();
  rep.dimension = N - rank;
  if (rank == 0 || rank == N) {
    rep.gap = std::numeric_limits<double>::infinity();
  } else {
    rep.gap = sv(rank) > 0.0 ? sv(rank - 1) / sv(rank) : std::numeric_limits<double>::infinity();
  }
  const Eigen::MatrixXd K = space.kernel();
  for (Eigen::Index c = 0; c < K.cols(); ++c)
    rep.basis.push_back(ProlongedState::from_vector(F * K.col(c), d));
  return rep;
}

MobilityReport degree_of_mobility_sweep(const KahlerModel& model, const ChartPoint& base,
                                        const MobilityConfig& cfg, std::vector<double> candidates) {
  if (candidates.empty()) throw Error(ErrorKind::InvalidInput, "no candidate B values");
  std::vector<double> swept;
  std::vector<int> dims;
  MobilityReport best;
  bool have = false;
  for (double B : candidates) {
    MobilityReport r = degree_of_mobility(model, B, base, cfg);
    swept.push_back(B);
    dims.push_back(r.dimension);
    if (!have || r.dimension > best.dimension) {
      best = std::move(r);
      have = true;
    }
  }

  // Refine B from the kernel element whose a is furthest from a multiple of g.
  const ModelChart& mc = model.chart(base.chart);
  const MetricJet m = metric_jet(mc.metric, base, 2);
  const TensorValue g0 = m.g(), gi = inverse_metric(g0), R = riemann(m);
  const TensorValue J0 = mc.complex_structure.value(base.x);
  const ProlongedState* pick = nullptr;
  double spread = 1e-8;
  for (const auto& s : best.basis) {
    const double tf = max_abs(s.a - (metric_trace(gi, s.a) / g0.dim()) * g0);
    if (tf > spread) {
      spread = tf;
      pick = &s;
    }
  }
  if (pick) {
    const TensorValue C0 = curvature_action(pick->a, R);
    const TensorValue C1 = integrability_rhs(pick->a, g0, J0);
    double num = 0.0, den = 0.0;
    for (std::size_t f = 0; f < C0.size(); ++f) {
      num += C0[f] * C1[f];
      den += C1[f] * C1[f];
    }
    if (den > 1e-24) {
      const double refined = num / den;
      if (std::abs(refined - best.B) > 1e-9 * std::max(1.0, std::abs(best.B))) {
        MobilityReport r = degree_of_mobility(model, refined, base, cfg);
        swept.push_back(refined);
        dims.push_back(r.dimension);
        if (r.dimension >= best.dimension) best = std::move(r);
      }
    }
  }
  best.swept_B = std::move(swept);
  best.swept_dimension = std::move(dims);
  return best;
}

KernelCheck check_kernel(const KahlerModel& model, const MobilityReport& report, std::span<const ChartPoint> points,
                         double h, const TransportOptions& opt) {
  KernelCheck out;
  if (report.basis.empty()) return out;
  const ModelChart& mc = model.chart(report.base.chart);
  const TensorField& g = mc.metric;
  const TensorField& Jf = mc.complex_structure;
  const Box& domain = mc.chart.domain();
  const int d = model.dim();
  const double B = report.B;
  const Eigen::MatrixXd S0 = state_columns(report.basis);
  auto go = [&](const std::vector<double>& y) {
    return transport_states(g, Jf, B, segment_path(report.base.chart, report.base.x, y), S0, opt, nullptr, &domain);
  };

  for (const auto& p : points) {
    const Eigen::MatrixXd Y = go(p.x);
    std::vector<Eigen::MatrixXd> dY(d);
    for (int k = 0; k < d; ++k) {
      auto shifted = [&](double s) {
        auto y = p.x;
        y[k] += s * h;
        return go(y);
      };
      dY[k] = (shifted(-2) - 8.0 * shifted(-1) + 8.0 * shifted(1) - shifted(2)) / (12.0 * h);
    }

    // Same endpoint through a detour.
    auto mid = p.x;
    for (int i = 0; i < d; ++i) mid[i] = 0.5 * (mid[i] + report.base.x[i]) + (i % 2 ? 0.05 : -0.05);
    const Eigen::MatrixXd Yd = transport_states(g, Jf, B, polyline_path(report.base.chart, {report.base.x, mid, p.x}),
                                                S0, opt, nullptr, &domain);
    out.path_independence = std::max(out.path_independence, (Yd - Y).cwiseAbs().maxCoeff());

    const MetricJet m = metric_jet(g, p, 1);
    const TensorValue G = christoffels(m), g0 = m.g(), J0 = Jf.value(p.x);
    const TensorValue O = kahler_form(g0, J0);
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      const ProlongedState s = ProlongedState::from_vector(Y.col(c), d);
      const TensorValue lb = bar(s.lambda, J0);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          for (int k = 0; k < d; ++k) {
            double da = dY[k](i * d + j, c);
            for (int q = 0; q < d; ++q) da -= G(q, k, i) * s.a(q, j) + G(q, k, j) * s.a(i, q);
            const double r = da - (s.lambda(i) * g0(j, k) + s.lambda(j) * g0(i, k) - lb(i) * O(j, k) - lb(j) * O(i, k));
            out.hpr = std::max(out.hpr, std::abs(r));
          }
          double dl = dY[j](d * d + i, c);
          for (int q = 0; q < d; ++q) dl -= G(q, j, i) * s.lambda(q);
          out.extended = std::max(out.extended, std::abs(dl - s.mu * g0(i, j) - B * s.a(i, j)));
        }
        out.extended = std::max(out.extended, std::abs(dY[i](d * d + d, c) - 2.0 * B * s.lambda(i)));
      }
    }
  }
  out.extended = std::max(out.extended, out.hpr);
  return out;
}

// Tanno

TensorValue tanno_residual(const TensorField& g, const TensorField& J, const TensorField& f, double kappa,
                           const ChartPoint& x) {
  if (jet_order(f.jets(x.x, 3)) < 3) throw Error(ErrorKind::InsufficientJet, "Tanno residual needs order-3 jets of f");
  const TensorValue d3 = covariant_derivative(f, g, x, 3);
  const TensorValue g0 = g.value(x.x), J0 = J.value(x.x);
  const TensorValue df = partials_value(f.jets(x.x, 1), 1);
  TensorValue df1(lower_slots(1), g0.dim(), std::vector<double>(df.components().begin(), df.components().end()));
  const TensorValue fb = bar(df1, J0);
  const TensorValue O = kahler_form(g0, J0);
  const int d = g0.dim();
  TensorValue r = d3;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        r(i, j, k) -= kappa * (2.0 * df1(k) * g0(i, j) + df1(i) * g0(j, k) + df1(j) * g0(i, k) - fb(i) * O(j, k) -
                               fb(j) * O(i, k));
  return r;
}

HSolution tanno_to_extended(const TensorField& g, const TensorField&, const TensorField& f, double kappa) {
  if (kappa == 0.0) throw Error(ErrorKind::InvalidInput, "kappa must be nonzero");
  const int d = g.dim();
  HSolution sol;
  sol.a = TensorField(lower_slots(2), d, [g, f, kappa](std::span<const double> x, int order) {
    const Connection conn(MetricJet{{"", {x.begin(), x.end()}}, g.jets(x, order + 2)});
    const JetTensor fj = f.jets(x, order + 2);
    const JetTensor hess = conn.covariant_derivative(conn.covariant_derivative(fj));
    const JetTensor g0 = truncated(conn.metric(), order);
    const Jet f0 = fj[0].truncated(order);
    JetTensor a = hess;
    for (std::size_t c = 0; c < a.size(); ++c) a[c] = (1.0 / kappa) * hess[c] - 2.0 * f0 * g0[c];
    return a;
  });
  sol.lambda = TensorField(lower_slots(1), d, [f](std::span<const double> x, int order) {
    JetTensor p = partial_derivative(f.jets(x, order + 1));
    return JetTensor(lower_slots(1), p.dim(), std::vector<Jet>(p.components().begin(), p.components().end()));
  });
  sol.lambda_scalar = f;
  sol.mu = TensorField({}, d, [f, kappa](std::span<const double> x, int order) {
    JetTensor m = f.jets(x, order);
    m[0] = (2.0 * kappa) * m[0];
    return m;
  });
  return sol;
}

double tanno_round_trip_defect(const TensorField& g, const TensorField& J, const HSolution& sol, double B,
                               const ChartPoint& x) {
  const ProlongedState s = state_at(sol, x);
  const ProlongedState t = state_at(tanno_to_extended(g, J, sol.lambda_scalar, B), x);
  const Eigen::VectorXd diff = t.to_vector() - s.to_vector();
  const Eigen::VectorXd line = ProlongedState::trivial(g.value(x.x), B).to_vector();
  const Eigen::VectorXd rest = diff - (diff.dot(line) / line.squaredNorm()) * line;
  return rest.cwiseAbs().maxCoeff();
}

TensorValue laplace_identity_residual(const TensorField& g, const TensorField&, double B,
                                      const TensorField& lambda_scalar, const ChartPoint& x) {
  const TensorValue d3 = covariant_derivative(lambda_scalar, g, x, 3);
  const TensorValue gi = inverse_metric(g.value(x.x));
  const TensorValue dl = partials_value(lambda_scalar.jets(x.x, 1), 1);
  const int d = gi.dim();
  const int n = d / 2;
  TensorValue r(lower_slots(1), d, 0.0);
  for (int k = 0; k < d; ++k) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += gi(i, j) * d3(i, j, k);
    r(k) = s - 4.0 * B * (n + 1) * dl[k];
  }
  return r;
}

std::pair<int, int> signature(const TensorValue& g) {
  const Eigen::MatrixXd G = to_matrix(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  int pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) < 1e-10 * scale) throw Error(ErrorKind::DegenerateMetric, "metric has a near-zero eigenvalue");
    (ev(i) > 0.0 ? pos : neg) += 1;
  }
  return {pos, neg};
}

std::pair<int, int> signature(const TensorField& g, const ChartPoint& x) { return signature(g.value(x.x)); }

}  // namespace kahler
