#include "kahler/hproj.hpp"
#include "kahler/models.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

using namespace kahler;

namespace {

ComplexMatrix diag3(double a, double b, double c) {
  ComplexMatrix A = ComplexMatrix::Zero(3, 3);
  A(0, 0) = a;
  A(1, 1) = b;
  A(2, 2) = c;
  return A;
}

struct Pair {
  KahlerModel fs = fubini_study(2);
  KahlerModel ga;
  TensorField g, J;
  HSolution sol;

  explicit Pair(const ComplexMatrix& A) : ga(pullback_fs(A)) {
    g = fs.primary_chart().metric;
    J = fs.primary_chart().complex_structure;
    sol = pair_solution(g, ga.primary_chart().metric);
  }
};

// (det gbar / det g)^{1/2(n+1)} g gbar^-1 g, computed with Eigen.
Eigen::MatrixXd a_oracle(const Eigen::MatrixXd& g, const Eigen::MatrixXd& gb) {
  const int n = static_cast<int>(g.rows()) / 2;
  const double s = std::pow(gb.determinant() / g.determinant(), 1.0 / (2.0 * (n + 1)));
  return s * g * gb.inverse() * g;
}

Eigen::MatrixXd as_matrix(const TensorValue& t) {
  Eigen::MatrixXd m(t.dim(), t.dim());
  for (int i = 0; i < t.dim(); ++i)
    for (int j = 0; j < t.dim(); ++j) m(i, j) = t(i, j);
  return m;
}

}  // namespace

TEST(AFromPair, IdentityAndScaling) {
  std::mt19937_64 rng(1);
  const auto fs = fubini_study(2);
  for (const auto& p : fs.sample_points(rng, 5)) {
    const auto g = fs.primary_chart().metric.value(p.x);
    EXPECT_LT(max_abs_diff(a_from_pair(g, g), g), 1e-13);
    const double c = 2.5;
    const auto a = a_from_pair(g, c * g);
    EXPECT_LT(max_abs_diff(a, std::pow(c, -1.0 / 3.0) * g), 1e-13);
    EXPECT_LT((as_matrix(a) - a_oracle(as_matrix(g), c * as_matrix(g))).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(AFromPair, FubiniStudyPairHasNonconstantTrace) {
  Pair pair(diag3(2, 1, 1));
  const ChartPoint p{"U0", {0.1, 0.2, -0.3, 0.4}}, q{"U0", {-0.5, 0.3, 0.2, 0.1}};
  const double t1 = pair.sol.lambda_scalar.value(p.x)[0];
  const double t2 = pair.sol.lambda_scalar.value(q.x)[0];
  EXPECT_GT(std::abs(t1 - t2), 1e-3 / 4);
  const auto a = pair.sol.a.value(p.x);
  const auto oracle = a_oracle(as_matrix(pair.g.value(p.x)), as_matrix(pair.ga.primary_chart().metric.value(p.x)));
  EXPECT_LT((as_matrix(a) - oracle).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(GbarFromA, RoundTripAndInverseExamples) {
  Pair pair(diag3(2, 1, 1));
  std::mt19937_64 rng(2);
  for (const auto& p : pair.fs.sample_points(rng, 10)) {
    const auto g = pair.g.value(p.x);
    const auto gb = pair.ga.primary_chart().metric.value(p.x);
    EXPECT_LT(max_abs_diff(gbar_from_a(g, a_from_pair(g, gb)), gb), 1e-10);
    EXPECT_LT(max_abs_diff(gbar_from_a(g, g), g), 1e-12);
    EXPECT_LT(max_abs_diff(gbar_from_a(g, std::pow(3.0, -1.0 / 3.0) * g), 3.0 * g), 1e-11);
  }
  const auto g = pair.g.value(std::vector<double>(4, 0.0));
  TensorValue degenerate = g;
  degenerate(0, 0) = degenerate(1, 1) = 0.0;
  EXPECT_THROW(gbar_from_a(g, degenerate), Error);
}

TEST(HprResidual, TrivialSolutionVanishes) {
  const auto fs = fubini_study(2);
  const auto sol = trivial_solution(fs.primary_chart().metric, -0.25);
  std::mt19937_64 rng(3);
  for (const auto& p : fs.sample_points(rng, 5))
    EXPECT_LT(max_abs(hpr_residual(fs.primary_chart().metric, fs.primary_chart().complex_structure, sol, p)), 1e-13);
}

TEST(HprResidual, PairSolutionSolvesTheEquation) {
  Pair pair(diag3(2, 1, 1));
  std::mt19937_64 rng(4);
  double lambda_norm = 0.0;
  for (const auto& p : pair.fs.sample_points(rng, 20)) {
    EXPECT_LT(max_abs(hpr_residual(pair.g, pair.J, pair.sol, p)), 1e-7);
    lambda_norm = std::max(lambda_norm, max_abs(pair.sol.lambda.value(p.x)));
  }
  EXPECT_GT(lambda_norm, 1e-2);
}

TEST(HprResidual, PerturbedLambdaIsDetected) {
  Pair pair(diag3(2, 1, 1));
  HSolution bad = pair.sol;
  const TensorField lambda = pair.sol.lambda;
  bad.lambda = TensorField(lower_slots(1), 4, [lambda](std::span<const double> x, int order) {
    auto l = lambda.jets(x, order);
    l[1] += 1e-2;
    return l;
  });
  const ChartPoint p{"U0", {0.2, 0.1, -0.1, 0.3}};
  EXPECT_GE(max_abs(hpr_residual(pair.g, pair.J, bad, p)), 1e-3);
}

TEST(LambdaFromA, TraceFormulaAgreesWithLeastSquares) {
  Pair pair(diag3(2, 1, 1));
  std::mt19937_64 rng(5);
  for (const auto& p : pair.fs.sample_points(rng, 10)) {
    const auto l = lambda_from_a(pair.g, pair.sol.a, p);
    const auto fit = lambda_least_squares(pair.g, pair.J, pair.sol.a, p);
    EXPECT_LT(max_abs_diff(l, fit.lambda), 1e-7);
    EXPECT_LT(fit.residual, 1e-7);
    EXPECT_GT(max_abs(l), 1e-4);
    EXPECT_LT(max_abs(lambda_from_a(pair.g, pair.g, p)), 1e-13);
    const auto scaled = TensorField(lower_slots(2), 4, [g = pair.g](std::span<const double> x, int order) {
      auto t = g.jets(x, order);
      for (auto& c : t.components()) c *= 3.0;
      return t;
    });
    EXPECT_LT(max_abs(lambda_from_a(pair.g, scaled, p)), 1e-12);
  }
}

TEST(LambdaScalar, GradientMatchesLambda) {
  Pair pair(diag3(2, 1, 1));
  std::mt19937_64 rng(6);
  for (const auto& p : pair.fs.sample_points(rng, 5)) {
    const auto fd = finite_difference_jets(pair.sol.lambda_scalar, p.x, 1);
    const auto l = pair.sol.lambda.value(p.x);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(fd[0].partial(k), l(k), 1e-7);
  }
}

TEST(Killing, BarLambdaIsKillingAndGradientIsNot) {
  Pair pair(diag3(2, 1, 1));
  const auto v = bar_vector_field(pair.g, pair.J, pair.sol.lambda);
  const auto grad = raised_vector_field(pair.g, pair.sol.lambda);
  const auto zero = TensorField::constant(TensorValue({Slot::Upper}, 4, 0.0));
  std::mt19937_64 rng(7);
  for (const auto& p : pair.fs.sample_points(rng, 10)) {
    EXPECT_LT(max_abs(killing_residual(pair.g, v, p)), 1e-7);
    EXPECT_GT(max_abs(killing_residual(pair.g, grad, p)), 1e-3);
    EXPECT_EQ(max_abs(killing_residual(pair.g, zero, p)), 0.0);
  }
}

TEST(Psi, UnitaryGeneratorGivesZero) {
  const auto fs = fubini_study(2);
  ComplexMatrix X = ComplexMatrix::Zero(3, 3);
  X(0, 1) = 1.0;
  X(1, 0) = -1.0;
  X(2, 2) = {0.0, 0.7};
  const auto u = projective_vector_field(X, 0);
  std::mt19937_64 rng(8);
  for (const auto& p : fs.sample_points(rng, 5))
    EXPECT_LT(max_abs(psi_infinitesimal(fs.primary_chart().metric, u, p)), 1e-12);
}

TEST(Psi, NonUnitaryGeneratorGivesASolution) {
  const auto fs = fubini_study(2);
  const auto& g = fs.primary_chart().metric;
  ComplexMatrix X = ComplexMatrix::Zero(3, 3);
  X(0, 0) = 1.0;
  X(1, 2) = {0.3, 0.2};
  const auto u = projective_vector_field(X, 0);
  const auto sol = solution_from_a(g, psi_field(g, u));
  std::mt19937_64 rng(9);
  for (const auto& p : fs.sample_points(rng, 5)) {
    EXPECT_LT(max_abs(hpr_residual(g, fs.primary_chart().complex_structure, sol, p)), 1e-6);
    EXPECT_GT(max_abs(sol.a.value(p.x)), 1e-2);
  }
}

TEST(Psi, IsLinear) {
  const auto fs = fubini_study(2);
  const auto& g = fs.primary_chart().metric;
  ComplexMatrix X = ComplexMatrix::Random(3, 3), Y = ComplexMatrix::Random(3, 3);
  const auto u = projective_vector_field(X, 0), v = projective_vector_field(Y, 0);
  const auto w = projective_vector_field(2.0 * X - 0.5 * Y, 0);
  const ChartPoint p{"U0", {0.3, -0.2, 0.1, 0.5}};
  const auto lhs = psi_infinitesimal(g, w, p);
  const auto rhs = 2.0 * psi_infinitesimal(g, u, p) - 0.5 * psi_infinitesimal(g, v, p);
  EXPECT_LT(max_abs_diff(lhs, rhs), 1e-12);
}

TEST(Integrability, HoldsForSolutionsAndFailsOtherwise) {
  Pair pair(diag3(2, 1, 1));
  std::mt19937_64 rng(10);
  for (const auto& p : pair.fs.sample_points(rng, 5))
    EXPECT_LT(max_abs(integrability_residual(pair.g, pair.J, pair.sol, p)), 1e-6);

  const auto fl = flat(2);
  TensorValue a = identity_tensor(4, lower_slots(2));
  a(0, 1) = a(1, 0) = 0.0;
  a(0, 2) = a(2, 0) = a(1, 3) = a(3, 1) = 0.4;
  const auto sol = solution_from_a(fl.primary_chart().metric, TensorField::constant(a));
  const ChartPoint q{"flat", {0.1, 0.2, 0.3, 0.4}};
  EXPECT_EQ(max_abs(integrability_residual(fl.primary_chart().metric, fl.primary_chart().complex_structure, sol, q)), 0.0);

  // a = g + x_0^2 e_0 e_0 is not a solution on flat space.
  const auto g = fl.primary_chart().metric;
  const auto bad = solution_from_a(g, TensorField::closed_form(lower_slots(2), 4, [](std::span<const Jet> x) {
    std::vector<Jet> t(16, x[0] * 0.0);
    for (int i = 0; i < 4; ++i) t[i * 5] += 1.0;
    t[0] += x[0] * x[0] * x[1];
    t[5] += x[2] * x[2];
    return t;
  }));
  EXPECT_GE(max_abs(integrability_residual(g, fl.primary_chart().complex_structure, bad, q)), 1e-3);
}

TEST(CIdentity, VanishesForTwoPullbackSolutions) {
  const auto fs = fubini_study(2);
  const auto& g = fs.primary_chart().metric;
  const auto& J = fs.primary_chart().complex_structure;
  const auto s1 = pair_solution(g, pullback_fs(diag3(2, 1, 1)).primary_chart().metric);
  const auto s2 = pair_solution(g, pullback_fs(diag3(1, 3, 1)).primary_chart().metric);
  std::mt19937_64 rng(11);
  for (const auto& p : fs.sample_points(rng, 10)) {
    const auto r = c_identity_check(g, J, s1, s2, p);
    EXPECT_TRUE(r.independent);
    EXPECT_LT(r.max_c, 1e-6);
    EXPECT_LT(r.without_c, 1e-6);
    EXPECT_LT(c_identity_check(g, J, s1, s1, p).max_c, 1e-9);
    const auto trivial = c_identity_check(g, J, s1, trivial_solution(g, -0.25), p);
    EXPECT_LT(trivial.max_c, 1e-12);
    EXPECT_FALSE(trivial.independent);
  }
}

TEST(Solutions, LinearityAndAnticommutation) {
  Pair pair(diag3(2, 1, 1));
  Pair other(diag3(1, 1, 3));
  const auto mix = combine(0.7, pair.sol, -1.3, other.sol);
  std::mt19937_64 rng(12);
  for (const auto& p : pair.fs.sample_points(rng, 5)) {
    EXPECT_LT(max_abs(hpr_residual(pair.g, pair.J, mix, p)), 1e-7);
    const auto d = anticommutation_defect(pair.g, pair.J, pair.sol, p);
    EXPECT_LT(d.a, 1e-7);
    EXPECT_LT(d.nabla_lambda, 1e-7);
  }
}

TEST(Solutions, JsonHasComponentArrays) {
  Pair pair(diag3(2, 1, 1));
  const auto sol = with_fitted_mu(pair.g, pair.sol, -0.25);
  const std::vector<ChartPoint> pts{{"U0", {0.1, 0.1, 0.1, 0.1}}, {"U0", {0.2, 0.0, 0.0, 0.3}}};
  const auto j = solution_to_json(sol, "U0", pts);
  EXPECT_EQ(j["a"].size(), 2u);
  EXPECT_EQ(j["a"][0].size(), 16u);
  EXPECT_EQ(j["lambda"][1].size(), 4u);
  EXPECT_EQ(j["mu"].size(), 2u);
}
