#pragma once

#include "kahler/field.hpp"
#include "kahler/tensor.hpp"

#include <string>
#include <vector>

namespace kahler {

struct Tolerances {
  double exact = 1e-9;
  double finite_difference = 1e-5;
};

/// Metric components with their coordinate partials up to the jet order.
struct MetricJet {
  ChartPoint point;
  JetTensor jets;

  int order() const { return jet_order(jets); }
  TensorValue g() const { return value_of(jets); }
  TensorValue dg() const { return partials_value(jets, 1); }
  TensorValue d2g() const { return partials_value(jets, 2); }
  TensorValue d3g() const { return partials_value(jets, 3); }
};

struct ComplexStructureJet {
  ChartPoint point;
  JetTensor jets;

  TensorValue J() const { return value_of(jets); }
  TensorValue dJ() const { return partials_value(jets, 1); }
};

MetricJet metric_jet(const TensorField& g, const ChartPoint& p, int order);
ComplexStructureJet complex_structure_jet(const TensorField& J, const ChartPoint& p, int order);

/// Throws singular-metric when |det g| < 1e-12 times the product of row norms.
void require_nondegenerate(const TensorValue& g);

/// Levi-Civita data of a metric jet: inverse metric and Christoffel symbols
/// as jets, so covariant derivatives of any order reduce to jet arithmetic.
class Connection {
 public:
  explicit Connection(const MetricJet& m);

  int dim() const { return dim_; }
  int order() const { return order_; }
  const JetTensor& metric() const { return g_; }
  const JetTensor& inverse_metric() const { return g_inv_; }
  /// Gamma^i_{jk}, one jet order below the metric.
  const JetTensor& christoffel() const { return gamma_; }

  /// Appends one lower slot; the result loses one jet order.
  JetTensor covariant_derivative(const JetTensor& t) const;
  /// R^i_{jkl}, two jet orders below the metric.
  JetTensor riemann() const;

 private:
  int dim_;
  int order_;
  JetTensor g_;
  JetTensor g_inv_;
  JetTensor gamma_;
};

TensorValue christoffels(const MetricJet& m);
TensorValue riemann(const MetricJet& m);

/// Applies nabla `order` times to the field at p (derivative slots appended).
TensorValue covariant_derivative(const TensorField& t, const TensorField& g, const ChartPoint& p,
                                 int order);

TensorValue hermitize(const TensorValue& t, const TensorValue& J);
TensorValue jtensor_contract(const TensorValue& t, const TensorValue& J);
/// Omega_{ij} = g_{i a} J^a_j.
TensorValue kahler_form(const TensorValue& g, const TensorValue& J);
/// Omega_{ij} = g_{i a} J^a_j, kept as jets.
JetTensor kahler_form(const JetTensor& g, const JetTensor& J);

/// J^a_i w_a.
TensorValue bar(const TensorValue& w, const TensorValue& J);
JetTensor bar(const JetTensor& w, const JetTensor& J);

/// J^a_i T_{a j} + T_{i a} J^a_j.
TensorValue hermitian_defect(const TensorValue& t, const TensorValue& J);

/// g(R(v, Jv)Jv, v) / g(v, v)^2 with R(X,Y)Z = R^i_{jkl} Z^j X^k Y^l.
double holomorphic_sectional_curvature(const TensorValue& R, const TensorValue& g,
                                       const TensorValue& J, std::span<const double> v);

struct Check {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass() const { return max_residual < tolerance; }
};

struct KahlerReport {
  std::vector<Check> checks;
  int points = 0;
  bool pass() const;
};

KahlerReport verify_kahler(const TensorField& g, const TensorField& J,
                           std::span<const ChartPoint> points, double tol = 1e-9);

/// Matrix helpers on rank-2 values.
TensorValue identity_tensor(int dim, Variance v = {Slot::Upper, Slot::Lower});
TensorValue inverse_metric(const TensorValue& g);
double trace(const TensorValue& t);
/// g^{ij} t_{ij}.
double metric_trace(const TensorValue& g_inv, const TensorValue& t);
TensorValue transpose(const TensorValue& t);

}  // namespace kahler
