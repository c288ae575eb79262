#pragma once

#include "kahler/models.hpp"

#include <functional>
#include <ostream>
#include <span>
#include <vector>

namespace kahler {

/// Samples of a curve; consecutive samples may sit in different charts.
struct CurveSample {
  std::vector<double> times;
  std::vector<ChartPoint> points;
  std::vector<std::vector<double>> velocities;

  std::size_t size() const { return times.size(); }
  bool single_chart() const;
};

/// Raised with the samples computed before the curve left every chart.
class CurveOutOfDomain : public Error {
 public:
  CurveOutOfDomain(const std::string& what, CurveSample partial)
      : Error(ErrorKind::OutOfDomain, what), partial_(std::move(partial)) {}
  const CurveSample& partial() const { return partial_; }

 private:
  CurveSample partial_;
};

using Coefficient = std::function<double(double)>;

Coefficient constant_coefficient(double c);
/// c0 + c1 t + c2 t^2 + ...
Coefficient polynomial_coefficient(std::vector<double> c);

/// RK4 for x'' + Gamma(x', x') = alpha x' + beta J x', t in [0, t_end].
/// Charts are switched when a sample leaves the domain shrunk by `margin`.
CurveSample integrate_hplanar(const KahlerModel& model, const ChartPoint& x0, std::vector<double> v0,
                              const Coefficient& alpha, const Coefficient& beta, double t_end, double step,
                              double margin = 0.05);

CurveSample integrate_geodesic(const KahlerModel& model, const ChartPoint& x0, std::vector<double> v0,
                               double t_end, double step);

/// Coordinate velocity and position of sample k expressed in another chart.
std::pair<std::vector<double>, std::vector<double>> express_in(const KahlerModel& model, const ChartPoint& p,
                                                               std::span<const double> v,
                                                               const std::string& chart);

/// Per-sample covariant acceleration nabla_v v (4th-order differences of the velocities).
std::vector<std::vector<double>> covariant_accelerations(const KahlerModel& model, const CurveSample& curve);

/// Smallest singular value of [nabla_v v | v | J v], columns normalized
/// (the acceleration by max(|nabla_v v|, |v|^2)).
double wedge_defect(std::span<const double> acc, std::span<const double> v, const TensorValue& J);

std::vector<double> hplanar_defects(const KahlerModel& model, const CurveSample& curve);
double max_hplanar_defect(const KahlerModel& model, const CurveSample& curve);

/// Per-sample distance from the complex line through (x0, v0): the affine plane
/// x0 + span(v0, J v0) on flat models, the projective line on Fubini-Study and
/// its pullbacks (distance of the unit homogeneous lift from the 2-dim subspace).
std::vector<double> line_deviations(const KahlerModel& model, const CurveSample& curve, const ChartPoint& x0,
                                    std::span<const double> v0);
double line_deviation(const KahlerModel& model, const CurveSample& curve, const ChartPoint& x0,
                      std::span<const double> v0);

/// max_t |g(x', v) - g(x', v)(0)| for a vector field v on the curve's chart.
double killing_integral_drift(const TensorField& g, const CurveSample& curve, const TensorField& v);

/// max_t |g(x', x') - g(x', x')(0)|.
double energy_drift(const KahlerModel& model, const CurveSample& curve);

struct ReparametrizationCheck {
  double original = 0.0;
  double reparametrized = 0.0;
  bool pass = false;
};

/// Wedge defect of the copy s -> curve(t0 + T s^2 (3 - 2s)), interpolated by quintic Hermite.
ReparametrizationCheck reparametrization_invariance_check(const KahlerModel& model, const CurveSample& curve,
                                                          double tol = 1e-6);

/// t, chart, x_i, v_i, defect, deviation.
void write_curve_csv(std::ostream& os, const CurveSample& curve, std::span<const double> defects,
                     std::span<const double> deviations);

}  // namespace kahler
