#pragma once

#include "kahler/prolongation.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace kahler {

/// (2n+2) x (2n+2) matrix
///   [ mu  0   | lambda_j    ]
///   [ 0   mu  | bar lambda_j ]
///   [ lambda^i  bar lambda^i | a^i_j ]
struct ExtendedOperator {
  ChartPoint base;
  Eigen::MatrixXd matrix;
  TensorValue g;  // metric used to raise indices
  TensorValue J;

  int dim() const { return static_cast<int>(matrix.rows()); }
  nlohmann::json to_json() const;
};

/// diag(1, 1, g) and diag(J2, J), J2 = [[0, 1], [-1, 0]].
Eigen::MatrixXd extended_metric(const TensorValue& g);
Eigen::MatrixXd extended_complex_structure(const TensorValue& J);

ExtendedOperator build_L(const TensorField& g, const TensorField& J, const HSolution& sol, const ChartPoint& x);
ExtendedOperator build_L(const ProlongedState& s, const TensorValue& g, const TensorValue& J, const ChartPoint& x);

/// (a, lambda, mu) read back from a matrix of the L layout.
ProlongedState triple_from_L(const ExtendedOperator& L);

/// || ghat L - (ghat L)^T || and || Jhat L - L Jhat ||.
double self_adjointness_defect(const ExtendedOperator& L);
double complex_commutation_defect(const ExtendedOperator& L);

struct ProductResult {
  ExtendedOperator L;
  ProlongedState triple;  // (a A + lambda Lambda + bar.., mu Lambda + lambda A, mu M + lambda Lambda)
  double op_eq_linear = 0.0;  // mu Lambda_j + lambda_k A^k_j - M lambda_j - a^k_j Lambda_k
  double op_eq_orthogonal = 0.0;  // lambda^k bar Lambda_k
  bool closed = true;
  std::vector<std::string> warnings;
};

ProductResult L_product(const ExtendedOperator& L1, const ExtendedOperator& L2, double tol = 1e-8);

/// Solution field whose operator is L(s1) L(s2), assembled with jets.
HSolution product_solution(const TensorField& g, const TensorField& J, const HSolution& s1, const HSolution& s2);

/// Solution field of sum_k c_k L^k (c_0 multiplies L(g, 0, 1)).
HSolution polynomial_solution(const TensorField& g, const TensorField& J, const HSolution& sol,
                              const std::vector<double>& coefficients);

struct EigenCluster {
  std::complex<double> value;
  int multiplicity = 0;
  int exponent = 1;  // size of the largest Jordan block
};

struct MinimalPolynomial {
  std::vector<double> coefficients;  // ascending, monic
  std::vector<EigenCluster> clusters;
  bool jordan = false;
  bool ambiguous = false;
  std::vector<std::string> warnings;

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  nlohmann::json to_json() const;
};

MinimalPolynomial minimal_poly(const Eigen::MatrixXd& L, double tol = 1e-6);
MinimalPolynomial minimal_poly(const ExtendedOperator& L, double tol = 1e-6);

/// Max coefficient distance; polynomials of different degree are infinitely far apart.
double polynomial_distance(const MinimalPolynomial& p, const MinimalPolynomial& q);

/// Lagrange coefficients (ascending) of the polynomial sending the cluster
/// nearest `target` to 1 and every other cluster to 0.
std::vector<double> projector_polynomial(const MinimalPolynomial& mp, double target);

/// P(L) for the cluster nearest `target` (largest real eigenvalue if absent).
ExtendedOperator make_projector(const ExtendedOperator& L, std::optional<double> target = std::nullopt,
                                double tol = 1e-6);

struct EigenstructureReport {
  double mu = 0.0;
  std::string regime;  // "interior", "mu=1" or "mu=0"
  std::vector<std::pair<double, int>> multiplicities;  // eigenvalues of a^i_j
  int k = -1;
  bool matches = false;  // multiplicities follow the pattern for the regime
  bool even = true;
  double eigenspace_angle = 0.0;  // (1 - mu)-eigenspace vs span(lambda^i, bar lambda^i)

  nlohmann::json to_json() const;
};

EigenstructureReport eigenstructure_report(const TensorField& g, const TensorField& J, const HSolution& sol,
                                           const ChartPoint& x, double tol = 1e-6);

/// nabla^2 mu - 2a + 2 mu g.
TensorValue hessian_mu_check(const TensorField& g, const HSolution& sol, const ChartPoint& x);

struct NormalizedSystem {
  TensorField g;
  HSolution sol;
  double B = 0.0;  // the original constant
};

/// g -> -B g with (a, lambda, mu) -> (-B a, lambda, -mu / B).
NormalizedSystem normalize_to_B_minus_one(const TensorField& g, const HSolution& sol, double B);

}  // namespace kahler
