#include "kahler/curves.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>

namespace kahler {

namespace {

using Vec = std::vector<double>;

TensorValue gamma_at(const KahlerModel& model, const ChartPoint& p) {
  return christoffels(metric_jet(model.metric(p.chart), p, 1));
}

/// Gamma^i_jk v^j w^k
Vec contract_gamma(const TensorValue& G, std::span<const double> v, std::span<const double> w) {
  const int d = G.dim();
  Vec out(d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (v[j] == 0.0) continue;
      for (int k = 0; k < d; ++k) out[i] += G(i, j, k) * v[j] * w[k];
    }
  return out;
}

Vec apply_J(const TensorValue& J, std::span<const double> v) {
  const int d = J.dim();
  Vec out(d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i] += J(i, j) * v[j];
  return out;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Torus coordinates are only defined up to the lattice: shift x to the image nearest ref.
void nearest_image(const KahlerModel& model, std::span<const double> ref, Vec& x) {
  if (model.kind != ModelKind::FlatTorus) return;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = model.periods[i];
    x[i] -= p * std::round((x[i] - ref[i]) / p);
  }
}

void require_uniform(const CurveSample& c) {
  if (c.size() < 3) throw Error(ErrorKind::InvalidInput, "curve needs at least 3 samples");
  const double h = c.times[1] - c.times[0];
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double hk = c.times[k] - c.times[k - 1];
    if (!(hk > 0.0)) throw Error(ErrorKind::InvalidInput, "curve times must increase");
    if (std::abs(hk - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw Error(ErrorKind::InvalidInput, "curve samples must be equally spaced");
  }
}

/// Coordinate acceleration of sample k in `chart` from the neighbouring velocities.
Vec coordinate_acceleration(const KahlerModel& model, const CurveSample& c, std::size_t k,
                            const std::string& chart) {
  const std::size_t N = c.size();
  const double h = c.times[1] - c.times[0];
  auto vel = [&](std::size_t m) { return express_in(model, c.points[m], c.velocities[m], chart).second; };
  std::vector<std::pair<std::size_t, double>> stencil;
  if (N >= 5) {
    if (k >= 2 && k + 2 < N) stencil = {{k - 2, 1.0}, {k - 1, -8.0}, {k + 1, 8.0}, {k + 2, -1.0}};
    else if (k == 0) stencil = {{0, -25.0}, {1, 48.0}, {2, -36.0}, {3, 16.0}, {4, -3.0}};
    else if (k == 1) stencil = {{0, -3.0}, {1, -10.0}, {2, 18.0}, {3, -6.0}, {4, 1.0}};
    else if (k == N - 1) stencil = {{N - 1, 25.0}, {N - 2, -48.0}, {N - 3, 36.0}, {N - 4, -16.0}, {N - 5, 3.0}};
    else stencil = {{N - 1, 3.0}, {N - 2, 10.0}, {N - 3, -18.0}, {N - 4, 6.0}, {N - 5, -1.0}};
    for (auto& s : stencil) s.second /= 12.0 * h;
  } else {
    if (k == 0) stencil = {{0, -3.0}, {1, 4.0}, {2, -1.0}};
    else if (k == N - 1) stencil = {{N - 1, 3.0}, {N - 2, -4.0}, {N - 3, 1.0}};
    else stencil = {{k - 1, -1.0}, {k + 1, 1.0}};
    for (auto& s : stencil) s.second /= 2.0 * h;
  }
  Vec a(c.velocities[k].size(), 0.0);
  for (const auto& [m, w] : stencil) {
    const Vec v = vel(m);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += w * v[i];
  }
  return a;
}

struct Quintic {
  // value, first and second derivative of the six basis polynomials at u
  std::array<std::array<double, 3>, 6> basis;

  explicit Quintic(double u) {
    static constexpr double c[6][6] = {
        {1, 0, 0, -10, 15, -6},     // p0
        {0, 1, 0, -6, 8, -3},       // h v0
        {0, 0, 0.5, -1.5, 1.5, -0.5},  // h^2 a0
        {0, 0, 0, 0.5, -1, 0.5},    // h^2 a1
        {0, 0, 0, -4, 7, -3},       // h v1
        {0, 0, 0, 10, -15, 6},      // p1
    };
    for (int b = 0; b < 6; ++b) {
      double v = 0.0, d1 = 0.0, d2 = 0.0;
      for (int p = 5; p >= 0; --p) {
        v = v * u + c[b][p];
        if (p >= 1) d1 = d1 * u + p * c[b][p];
        if (p >= 2) d2 = d2 * u + p * (p - 1) * c[b][p];
      }
      basis[b] = {v, d1, d2};
    }
  }
};

}  // namespace

bool CurveSample::single_chart() const {
  for (const auto& p : points)
    if (p.chart != points.front().chart) return false;
  return true;
}

Coefficient constant_coefficient(double c) {
  return [c](double) { return c; };
}

Coefficient polynomial_coefficient(std::vector<double> c) {
  return [c = std::move(c)](double t) {
    double s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * t + *it;
    return s;
  };
}

std::pair<Vec, Vec> express_in(const KahlerModel& model, const ChartPoint& p, std::span<const double> v,
                               const std::string& chart) {
  if (p.chart == chart) return {p.x, Vec(v.begin(), v.end())};
  const Chart& from = model.chart(p.chart).chart;
  Vec y = from.map_to(chart, p.x);
  const Vec jac = from.jacobian_to(chart, p.x);
  const int d = static_cast<int>(v.size());
  Vec w(d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) w[i] += jac[i * d + j] * v[j];
  return {std::move(y), std::move(w)};
}

CurveSample integrate_hplanar(const KahlerModel& model, const ChartPoint& x0, Vec v0, const Coefficient& alpha,
                              const Coefficient& beta, double t_end, double step, double margin) {
  const int d = model.dim();
  if (static_cast<int>(v0.size()) != d || static_cast<int>(x0.x.size()) != d)
    throw Error(ErrorKind::InvalidInput, "initial point and velocity must have the model dimension");
  if (norm(v0) == 0.0) throw Error(ErrorKind::InvalidInput, "initial velocity must be nonzero");
  if (!(step > 0.0) || !(t_end > 0.0)) throw Error(ErrorKind::InvalidInput, "step and t_end must be positive");
  if (!model.inside(x0)) throw Error(ErrorKind::OutOfDomain, "initial point outside its chart");

  const auto steps = static_cast<long>(std::ceil(t_end / step - 1e-9));
  const double h = t_end / static_cast<double>(steps);

  CurveSample out;
  std::string chart = x0.chart;
  Vec x = x0.x, v = std::move(v0);
  auto record = [&](double t) {
    out.times.push_back(t);
    out.points.push_back({chart, x});
    out.velocities.push_back(v);
  };
  record(0.0);

  auto rhs = [&](double t, const Vec& xs, const Vec& vs) {
    const ModelChart& mc = model.chart(chart);
    const Vec gvv = contract_gamma(gamma_at(model, {chart, xs}), vs, vs);
    const Vec jv = apply_J(mc.J, vs);
    const double a = alpha(t), b = beta(t);
    Vec acc(d);
    for (int i = 0; i < d; ++i) acc[i] = -gvv[i] + a * vs[i] + b * jv[i];
    return acc;
  };

  for (long s = 0; s < steps; ++s) {
    const double t = h * static_cast<double>(s);
    auto shifted = [&](const Vec& base, const Vec& dir, double c) {
      Vec r(base);
      for (int i = 0; i < d; ++i) r[i] += c * dir[i];
      return r;
    };
    const Vec k1x = v, k1v = rhs(t, x, v);
    const Vec x2 = shifted(x, k1x, h / 2), v2 = shifted(v, k1v, h / 2);
    const Vec k2x = v2, k2v = rhs(t + h / 2, x2, v2);
    const Vec x3 = shifted(x, k2x, h / 2), v3 = shifted(v, k2v, h / 2);
    const Vec k3x = v3, k3v = rhs(t + h / 2, x3, v3);
    const Vec x4 = shifted(x, k3x, h), v4 = shifted(v, k3v, h);
    const Vec k4x = v4, k4v = rhs(t + h, x4, v4);
    for (int i = 0; i < d; ++i) {
      x[i] += h / 6 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i]);
      v[i] += h / 6 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
    }

    if (!model.inside({chart, x}, margin)) {
      if (model.kind == ModelKind::FlatTorus) {
        for (int i = 0; i < d; ++i) {
          const double p = model.periods[i];
          x[i] -= p * std::floor(x[i] / p);
        }
      } else {
        const ChartPoint moved = model.recenter({chart, x});
        if (moved.chart != chart) {
          auto [y, w] = express_in(model, {chart, x}, v, moved.chart);
          chart = moved.chart;
          x = std::move(y);
          v = std::move(w);
        }
      }
      if (!model.inside({chart, x}))
        throw CurveOutOfDomain("curve left every chart at t = " + std::to_string(t + h), std::move(out));
    }
    record(s + 1 == steps ? t_end : h * static_cast<double>(s + 1));
  }
  return out;
}

CurveSample integrate_geodesic(const KahlerModel& model, const ChartPoint& x0, Vec v0, double t_end,
                               double step) {
  return integrate_hplanar(model, x0, std::move(v0), constant_coefficient(0.0), constant_coefficient(0.0), t_end,
                           step);
}

std::vector<Vec> covariant_accelerations(const KahlerModel& model, const CurveSample& curve) {
  require_uniform(curve);
  std::vector<Vec> out;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const ChartPoint& p = curve.points[k];
    Vec a = coordinate_acceleration(model, curve, k, p.chart);
    const Vec gvv = contract_gamma(gamma_at(model, p), curve.velocities[k], curve.velocities[k]);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += gvv[i];
    out.push_back(std::move(a));
  }
  return out;
}

double wedge_defect(std::span<const double> acc, std::span<const double> v, const TensorValue& J) {
  const int d = static_cast<int>(v.size());
  const double nv = norm(v);
  if (nv == 0.0) return 0.0;
  const Vec jv = apply_J(J, v);
  const double scale = std::max(norm(acc), nv * nv);
  const double njv = norm(jv);
  Eigen::MatrixXd M(d, 3);
  for (int i = 0; i < d; ++i) {
    M(i, 0) = acc[i] / scale;
    M(i, 1) = v[i] / nv;
    M(i, 2) = jv[i] / njv;
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(2);
}

std::vector<double> hplanar_defects(const KahlerModel& model, const CurveSample& curve) {
  const auto acc = covariant_accelerations(model, curve);
  std::vector<double> out;
  for (std::size_t k = 0; k < curve.size(); ++k)
    out.push_back(wedge_defect(acc[k], curve.velocities[k], model.chart(curve.points[k].chart).J));
  return out;
}

double max_hplanar_defect(const KahlerModel& model, const CurveSample& curve) {
  double m = 0.0;
  for (double x : hplanar_defects(model, curve)) m = std::max(m, x);
  return m;
}

std::vector<double> line_deviations(const KahlerModel& model, const CurveSample& curve, const ChartPoint& x0,
                                    std::span<const double> v0) {
  const int d = model.dim();
  std::vector<double> out;
  if (model.kind == ModelKind::Flat || model.kind == ModelKind::FlatTorus) {
    const TensorValue& J = model.chart(x0.chart).J;
    Eigen::MatrixXd S(d, 2);
    const Vec jv = apply_J(J, v0);
    for (int i = 0; i < d; ++i) {
      S(i, 0) = v0[i];
      S(i, 1) = jv[i];
    }
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(S).householderQ() * Eigen::MatrixXd::Identity(d, 2);
    Vec prev = x0.x;  // lift to the covering space, sample by sample
    for (const auto& p : curve.points) {
      Vec x = p.x;
      nearest_image(model, prev, x);
      prev = x;
      Eigen::VectorXd w(d);
      for (int i = 0; i < d; ++i) w(i) = x[i] - x0.x[i];
      out.push_back((w - Q * (Q.transpose() * w)).norm());
    }
    return out;
  }
  if (model.kind != ModelKind::FubiniStudy && model.kind != ModelKind::Pullback)
    throw Error(ErrorKind::UnsupportedModel, "no line notion for model kind " + std::string(to_string(model.kind)));

  const int chart = std::stoi(x0.chart.substr(1));  // affine slot of U<k>
  const ComplexMatrix A = model.A.size() ? model.A : ComplexMatrix::Identity(model.n + 1, model.n + 1);
  Eigen::VectorXcd z0 = homogeneous_lift(x0);
  Eigen::VectorXcd w = Eigen::VectorXcd::Zero(model.n + 1);
  for (int j = 0, slot = 0; slot <= model.n; ++slot) {
    if (slot == chart) continue;
    w(slot) = {v0[2 * j], v0[2 * j + 1]};
    ++j;
  }
  Eigen::MatrixXcd S(model.n + 1, 2);
  S.col(0) = A * z0;
  S.col(1) = A * w;
  const Eigen::MatrixXcd Q =
      Eigen::HouseholderQR<Eigen::MatrixXcd>(S).householderQ() * Eigen::MatrixXcd::Identity(model.n + 1, 2);
  for (const auto& p : curve.points) {
    Eigen::VectorXcd z = A * homogeneous_lift(p);
    z.normalize();
    out.push_back((z - Q * (Q.adjoint() * z)).norm());
  }
  return out;
}

double line_deviation(const KahlerModel& model, const CurveSample& curve, const ChartPoint& x0,
                      std::span<const double> v0) {
  if (curve.size() == 0) throw Error(ErrorKind::InvalidInput, "empty curve");
  double m = 0.0;
  for (double x : line_deviations(model, curve, x0, v0)) m = std::max(m, x);
  return m;
}

double killing_integral_drift(const TensorField& g, const CurveSample& curve, const TensorField& v) {
  if (!curve.single_chart()) throw Error(ErrorKind::InvalidInput, "Killing drift needs a single-chart curve");
  double first = 0.0, drift = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const TensorValue gv = g.value(curve.points[k].x);
    const TensorValue vv = v.value(curve.points[k].x);
    const auto& xd = curve.velocities[k];
    double s = 0.0;
    for (int i = 0; i < gv.dim(); ++i)
      for (int j = 0; j < gv.dim(); ++j) s += gv(i, j) * xd[i] * vv(j);
    if (k == 0) first = s;
    drift = std::max(drift, std::abs(s - first));
  }
  return drift;
}

double energy_drift(const KahlerModel& model, const CurveSample& curve) {
  double first = 0.0, drift = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const TensorValue gv = model.metric(curve.points[k].chart).value(curve.points[k].x);
    const auto& xd = curve.velocities[k];
    double s = 0.0;
    for (int i = 0; i < gv.dim(); ++i)
      for (int j = 0; j < gv.dim(); ++j) s += gv(i, j) * xd[i] * xd[j];
    if (k == 0) first = s;
    drift = std::max(drift, std::abs(s - first));
  }
  return drift;
}

ReparametrizationCheck reparametrization_invariance_check(const KahlerModel& model, const CurveSample& curve,
                                                          double tol) {
  require_uniform(curve);
  ReparametrizationCheck r;
  r.original = max_hplanar_defect(model, curve);

  const std::size_t N = curve.size();
  const double t0 = curve.times.front(), T = curve.times.back() - t0;
  const double h = curve.times[1] - curve.times[0];
  for (std::size_t m = 0; m < N; ++m) {
    const double s = static_cast<double>(m) / static_cast<double>(N - 1);
    const double psi = s * s * (3.0 - 2.0 * s), dpsi = 6.0 * s * (1.0 - s), ddpsi = 6.0 - 12.0 * s;
    const double t = t0 + T * psi;
    std::size_t k = std::min(N - 2, static_cast<std::size_t>(std::max(0.0, std::floor((t - t0) / h))));
    const double u = std::clamp((t - curve.times[k]) / h, 0.0, 1.0);

    const std::string& chart = curve.points[k].chart;
    const Vec& p0 = curve.points[k].x;
    const Vec& v0 = curve.velocities[k];
    auto [p1, v1] = express_in(model, curve.points[k + 1], curve.velocities[k + 1], chart);
    nearest_image(model, p0, p1);
    const Vec a0 = coordinate_acceleration(model, curve, k, chart);
    const Vec a1 = coordinate_acceleration(model, curve, k + 1, chart);

    const Quintic q(u);
    const int d = model.dim();
    Vec x(d), xd(d), xdd(d);
    for (int i = 0; i < d; ++i) {
      const double data[6] = {p0[i], h * v0[i], h * h * a0[i], h * h * a1[i], h * v1[i], p1[i]};
      double val = 0.0, d1 = 0.0, d2 = 0.0;
      for (int b = 0; b < 6; ++b) {
        val += q.basis[b][0] * data[b];
        d1 += q.basis[b][1] * data[b];
        d2 += q.basis[b][2] * data[b];
      }
      x[i] = val;
      xd[i] = d1 / h;
      xdd[i] = d2 / (h * h);
    }
    Vec c1(d), c2(d);
    for (int i = 0; i < d; ++i) {
      c1[i] = T * dpsi * xd[i];
      c2[i] = T * ddpsi * xd[i] + T * T * dpsi * dpsi * xdd[i];
    }
    const Vec gcc = contract_gamma(gamma_at(model, {chart, x}), c1, c1);
    for (int i = 0; i < d; ++i) c2[i] += gcc[i];
    r.reparametrized = std::max(r.reparametrized, wedge_defect(c2, c1, model.chart(chart).J));
  }
  r.pass = (r.original < tol) == (r.reparametrized < tol);
  return r;
}

void write_curve_csv(std::ostream& os, const CurveSample& curve, std::span<const double> defects,
                     std::span<const double> deviations) {
  if (curve.size() == 0) return;
  const std::size_t d = curve.points.front().x.size();
  os << "t,chart";
  for (std::size_t i = 0; i < d; ++i) os << ",x" << i;
  for (std::size_t i = 0; i < d; ++i) os << ",v" << i;
  os << ",defect,deviation\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    os << curve.times[k] << ',' << curve.points[k].chart;
    for (double x : curve.points[k].x) os << ',' << x;
    for (double v : curve.velocities[k]) os << ',' << v;
    os << ',';
    if (k < defects.size()) os << defects[k];
    os << ',';
    if (k < deviations.size()) os << deviations[k];
    os << '\n';
  }
}

}  // namespace kahler
