#pragma once

#include "kahler/field.hpp"
#include "kahler/geometry.hpp"

#include <nlohmann/json.hpp>

#include <optional>

namespace kahler {

/// (a_ij, lambda_i) with lambda = (1/4) a^i_i and an optional mu.  All four
/// are fields on one chart so their jets (hence covariant derivatives) are
/// available at any point.
struct HSolution {
  TensorField a;              // (0,2)
  TensorField lambda;         // (0,1)
  TensorField lambda_scalar;  // scalar
  TensorField mu;             // scalar, empty until fitted

  bool has_mu() const { return static_cast<bool>(mu); }
};

/// Scalar field (1/4) g^ij a_ij and its gradient attached to a.
HSolution solution_from_a(const TensorField& g, TensorField a);

/// The solution (a, lambda) built from a metric pair.
HSolution pair_solution(const TensorField& g, const TensorField& gbar);

/// Attaches mu = (1/2n)(g^ij lambda_{i,j} - B tr_g a).
HSolution with_fitted_mu(const TensorField& g, HSolution sol, double B);

/// c1 * s1 + c2 * s2, componentwise on every field (mu kept only if both have it).
HSolution combine(double c1, const HSolution& s1, double c2, const HSolution& s2);

/// (g, 0, -B): the trivial solution of the extended system.
HSolution trivial_solution(const TensorField& g, double B);

TensorValue a_from_pair(const TensorValue& g, const TensorValue& gbar);
JetTensor a_from_pair(const JetTensor& g, const JetTensor& gbar);
TensorValue gbar_from_a(const TensorValue& g, const TensorValue& a);

/// a_{ij,k} - lambda_i g_jk - lambda_j g_ik + bar(lambda)_i J_jk + bar(lambda)_j J_ik.
TensorValue hpr_residual(const TensorField& g, const TensorField& J, const HSolution& sol,
                         const ChartPoint& x);

/// lambda_k = (1/4) d_k (g^ij a_ij).
TensorValue lambda_from_a(const TensorField& g, const TensorField& a, const ChartPoint& x);

struct LambdaFit {
  TensorValue lambda;
  double residual = 0.0;  // max |hpr_residual| at the fitted lambda
};

/// Least-squares lambda minimising the hpr residual for fixed a.
LambdaFit lambda_least_squares(const TensorField& g, const TensorField& J, const TensorField& a,
                               const ChartPoint& x);

/// v_{i,j} + v_{j,i} for a vector field v^i.
TensorValue killing_residual(const TensorField& g, const TensorField& v, const ChartPoint& x);

/// bar(lambda)^i = g^{i a} J^b_a lambda_b as a vector field.
TensorField bar_vector_field(const TensorField& g, const TensorField& J, const TensorField& lambda);

/// Raises a (0,1) field with g.
TensorField raised_vector_field(const TensorField& g, const TensorField& w);

/// L_u g - (tr g^-1 L_u g / 2(n+1)) g.
TensorValue psi_infinitesimal(const TensorField& g, const TensorField& u, const ChartPoint& x);
TensorField psi_field(const TensorField& g, const TensorField& u);

/// Lie derivative of g along u as a (0,2) field.
TensorField lie_derivative_metric(const TensorField& g, const TensorField& u);

/// Residual of the curvature identity satisfied by solutions:
/// a_ia R^a_jkl + a_ja R^a_ikl - Jten(lambda_{l,a} g_bk + ... ).  When B is given
/// and sol has mu, lambda_{i,j} is replaced by mu g + B a.
TensorValue integrability_residual(const TensorField& g, const TensorField& J, const HSolution& sol,
                                   const ChartPoint& x, std::optional<double> B = std::nullopt);

/// Jten_{ij}^{ab}(D_{la} g_bk + D_{lb} g_ak - D_{ka} g_bl - D_{kb} g_al), (i, j, k, l).
TensorValue integrability_rhs(const TensorValue& D, const TensorValue& g, const TensorValue& J);

/// a_ia R^a_jkl + a_ja R^a_ikl, (i, j, k, l).
TensorValue curvature_action(const TensorValue& a, const TensorValue& R);

struct CIdentityResult {
  double max_c = 0.0;         // max |c_il|
  double without_c = 0.0;     // residual of the remaining Jten identity
  double independence = 0.0;  // smallest singular value of (g, a, A), normalised
  bool independent = true;
};

/// c_il = a^a_i Lambda_{a,l} - A^a_l lambda_{a,i} on trace-free parts.
CIdentityResult c_identity_check(const TensorField& g, const TensorField& J, const HSolution& a,
                                 const HSolution& A, const ChartPoint& x);

/// Defect J^a_i T_aj + T_ia J^a_j of a and of nabla lambda.
struct AnticommutationDefect {
  double a = 0.0;
  double nabla_lambda = 0.0;
};
AnticommutationDefect anticommutation_defect(const TensorField& g, const TensorField& J,
                                             const HSolution& sol, const ChartPoint& x);

/// nabla lambda_i as a value, (i, j) = lambda_{i,j}.
TensorValue nabla_lambda(const TensorField& g, const HSolution& sol, const ChartPoint& x);

nlohmann::json solution_to_json(const HSolution& sol, const std::string& chart,
                                std::span<const ChartPoint> points);

}  // namespace kahler
