#include "kahler/prolongation.hpp"

#include <gtest/gtest.h>

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

struct FsPair {
  KahlerModel fs = fubini_study(2);
  TensorField g = fs.primary_chart().metric;
  TensorField J = fs.primary_chart().complex_structure;
  HSolution sol = with_fitted_mu(g, pair_solution(g, pullback_fs(diag3(2, 1, 1)).primary_chart().metric), -0.25);
};

TensorField shifted_scalar(const TensorField& f, double c) {
  return TensorField({}, f.dim(), [f, c](std::span<const double> x, int order) {
    auto j = f.jets(x, order);
    j[0] += c;
    return j;
  });
}

/// Distance of v from the span of the columns of K (orthonormal).
double distance_to_span(const Eigen::VectorXd& v, const Eigen::MatrixXd& K) {
  return (v - K * (K.transpose() * v)).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd orthonormal_columns(const std::vector<ProlongedState>& basis) {
  Eigen::MatrixXd M(basis.front().to_vector().size(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t c = 0; c < basis.size(); ++c) M.col(static_cast<Eigen::Index>(c)) = basis[c].to_vector();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  return qr.householderQ() * Eigen::MatrixXd::Identity(M.rows(), M.cols());
}

}  // namespace

TEST(ExtendedResidual, TrivialLineSolvesForEveryB) {
  FsPair p;
  const ChartPoint x{"U0", {0.2, -0.1, 0.3, 0.4}};
  for (double B : {-0.25, 0.0, 0.7}) {
    const auto triv = trivial_solution(p.g, B);
    EXPECT_LT(extended_residual(p.g, p.J, B, triv, x).max_abs(), 1e-12);
  }
}

TEST(ExtendedResidual, FubiniStudyPairWithFittedMu) {
  FsPair p;
  std::mt19937_64 rng(1);
  for (const auto& x : p.fs.sample_points(rng, 10)) EXPECT_LT(extended_residual(p.g, p.J, -0.25, p.sol, x).max_abs(), 1e-6);
}

TEST(ExtendedResidual, MuPerturbationShowsInSecondEquation) {
  FsPair p;
  HSolution bad = p.sol;
  bad.mu = shifted_scalar(p.sol.mu, 1e-2);
  const ChartPoint x{"U0", {0.1, 0.3, -0.2, 0.1}};
  const auto r = extended_residual(p.g, p.J, -0.25, bad, x);
  EXPECT_NEAR(max_abs(r.lambda), 1e-2 * max_abs(p.g.value(x.x)), 1e-7);
  EXPECT_LT(max_abs(r.mu), 1e-7);
  EXPECT_THROW(extended_residual(p.g, p.J, -0.25, pair_solution(p.g, p.g), x), Error);
}

TEST(EstimateB, FubiniStudyPairGivesMinusQuarterEverywhere) {
  FsPair p;
  std::mt19937_64 rng(2);
  double lo = 1.0, hi = -1.0;
  for (const auto& x : p.fs.sample_points(rng, 10)) {
    const auto fit = estimate_B(p.g, p.J, p.sol, x);
    EXPECT_NEAR(fit.B, -0.25, 1e-5);
    EXPECT_LT(fit.residual, 1e-6);
    lo = std::min(lo, fit.B);
    hi = std::max(hi, fit.B);
  }
  EXPECT_LT(hi - lo, 1e-4);
}

TEST(EstimateB, ProportionalSolutionIsRejected) {
  FsPair p;
  const auto sol = solution_from_a(p.g, TensorField(lower_slots(2), 4, [g = p.g](std::span<const double> x, int o) {
                                     auto t = g.jets(x, o);
                                     for (auto& c : t.components()) c *= 2.0;
                                     return t;
                                   }));
  try {
    estimate_B(p.g, p.J, sol, {"U0", {0.1, 0.1, 0.1, 0.1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ProportionalSolution);
  }
}

TEST(EstimateB, FlatTorusConstantFormGivesZero) {
  const auto t = flat_torus(2, {1.0});
  const auto& g = t.primary_chart().metric;
  TensorValue a = identity_tensor(4, lower_slots(2));
  a(0, 0) = a(1, 1) = 3.0;
  const auto sol = solution_from_a(g, TensorField::constant(a));
  const auto fit = estimate_B(g, t.primary_chart().complex_structure, sol, {"torus", {0.2, 0.3, 0.4, 0.5}});
  EXPECT_EQ(fit.B, 0.0);
  EXPECT_EQ(fit.residual, 0.0);
}

TEST(CurvatureBCondition, HoldsOnlyAtTheRightB) {
  FsPair p;
  std::mt19937_64 rng(3);
  for (const auto& x : p.fs.sample_points(rng, 5)) {
    EXPECT_LT(max_abs(curvature_B_condition(p.g, p.J, -0.25, p.sol.a, x)), 1e-6);
    EXPECT_GE(max_abs(curvature_B_condition(p.g, p.J, 1.0, p.sol.a, x)), 1e-2);
  }
  const auto fl = flat(2);
  TensorValue a = identity_tensor(4, lower_slots(2));
  a(0, 2) = a(2, 0) = a(1, 3) = a(3, 1) = 0.5;
  EXPECT_EQ(max_abs(curvature_B_condition(fl.primary_chart().metric, fl.primary_chart().complex_structure, 0.0,
                                          TensorField::constant(a), {"flat", {0.1, 0.2, 0.3, 0.4}})),
            0.0);
}

TEST(ConstantCurvatureTensor, AlgebraicSymmetries) {
  FsPair p;
  const ChartPoint x{"U0", {0.3, 0.1, -0.2, 0.2}};
  const auto g = p.g.value(x.x);
  const auto K = constant_curvature_tensor(p.g, p.J, x);
  const auto Kl = lower_index(K, 0, g);
  double err = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          err = std::max(err, std::abs(Kl(i, j, k, l) + Kl(j, i, k, l)));
          err = std::max(err, std::abs(Kl(i, j, k, l) + Kl(i, j, l, k)));
          err = std::max(err, std::abs(Kl(i, j, k, l) - Kl(k, l, i, j)));
          err = std::max(err, std::abs(K(i, j, k, l) + K(i, k, l, j) + K(i, l, j, k)));
        }
  EXPECT_LT(err, 1e-13);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 5; ++t) {
    std::vector<double> v{nd(rng), nd(rng), nd(rng), nd(rng)};
    EXPECT_NEAR(holomorphic_sectional_curvature(K, g, p.J.value(x.x), v), 1.0, 1e-12);
  }
}

TEST(ConstantCurvatureTensor, MatchesFubiniStudyCurvature) {
  FsPair p;
  std::mt19937_64 rng(5);
  for (const auto& x : p.fs.sample_points(rng, 10)) {
    const auto R = riemann(metric_jet(p.g, x, 2));
    const auto K = constant_curvature_tensor(p.g, p.J, x);
    EXPECT_LT(max_abs(R + (4.0 * -0.25) * K), 1e-7);
  }
}

TEST(Paths, PolylineAndLoopsCloseUp) {
  const auto r = rectangle_loop("c", {0.0, 0.0, 0.0}, 0, 2, 0.3);
  EXPECT_NEAR(r.length, 1.2, 1e-15);
  EXPECT_EQ(r.corners.size(), 3u);
  EXPECT_NEAR(r.position(0.375)[0], 0.3, 1e-15);
  EXPECT_NEAR(r.position(0.375)[2], 0.15, 1e-15);
  EXPECT_NEAR(r.velocity(0.1)[0], 1.2, 1e-15);
  const auto s = smooth_loop("c", {1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, 0.2);
  EXPECT_NEAR(s.position(1.0)[0], 1.0, 1e-15);
  EXPECT_NEAR(s.position(0.5)[1], 1.4, 1e-15);
  // Velocity is the derivative of position.
  const double h = 1e-6;
  EXPECT_NEAR((s.position(0.3 + h)[0] - s.position(0.3 - h)[0]) / (2 * h), s.velocity(0.3)[0], 1e-7);
}

TEST(FiberBasis, OrthonormalHermitianForms) {
  const auto J = standard_complex_structure(3);
  const auto F = fiber_basis(J);
  EXPECT_EQ(F.cols(), 16);
  EXPECT_EQ(F.rows(), 36 + 6 + 1);
  EXPECT_LT((F.transpose() * F - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-13);
  for (int c = 0; c < 9; ++c) {
    const auto s = ProlongedState::from_vector(F.col(c), 6);
    EXPECT_LT(max_abs(hermitian_defect(s.a, J)), 1e-14);
    EXPECT_LT(max_abs_diff(s.a, transpose(s.a)), 1e-15);
  }
}

TEST(Transport, TrivialStateIsConstant) {
  FsPair p;
  const auto path = segment_path("U0", {0.1, 0.2, -0.3, 0.0}, {-0.4, 0.5, 0.2, 0.3});
  TransportStats st;
  const auto s0 = ProlongedState::trivial(p.g.value(path.position(0.0)), -0.25);
  const auto s1 = transport(p.fs, -0.25, path, s0, {}, &st);
  const auto expect = ProlongedState::trivial(p.g.value(path.position(1.0)), -0.25);
  EXPECT_LT((s1.to_vector() - expect.to_vector()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(st.converged);
  const auto zero = transport(p.fs, -0.25, path, 0.0 * s0);
  EXPECT_EQ(zero.max_abs(), 0.0);
}

TEST(Transport, ReproducesTheFieldSolution) {
  FsPair p;
  const ChartPoint x0{"U0", {0.1, 0.2, -0.3, 0.0}}, x1{"U0", {-0.4, 0.5, 0.2, 0.3}};
  const auto s1 = transport(p.fs, -0.25, segment_path("U0", x0.x, x1.x), state_at(p.sol, x0));
  EXPECT_LT((s1.to_vector() - state_at(p.sol, x1).to_vector()).cwiseAbs().maxCoeff(), 1e-6);
  const auto loop = transport(p.fs, -0.25, rectangle_loop("U0", x0.x, 0, 3, 0.3), state_at(p.sol, x0));
  EXPECT_LT((loop.to_vector() - state_at(p.sol, x0).to_vector()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Transport, IsLinear) {
  FsPair p;
  const ChartPoint x0{"U0", {0.1, 0.2, -0.3, 0.0}};
  const auto path = smooth_loop("U0", x0.x, {1.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.6, 0.8}, 0.2);
  const auto s1 = state_at(p.sol, x0);
  const auto s2 = ProlongedState::trivial(p.g.value(x0.x), 0.3);
  const auto lhs = transport(p.fs, -0.25, path, 0.7 * s1 + (-1.9) * s2);
  const auto rhs = 0.7 * transport(p.fs, -0.25, path, s1) + (-1.9) * transport(p.fs, -0.25, path, s2);
  EXPECT_LT((lhs.to_vector() - rhs.to_vector()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Transport, LeavingTheChartIsAnError) {
  FsPair p;
  const auto path = segment_path("U0", {0.0, 0.0, 0.0, 0.0}, {3.0, 0.0, 0.0, 0.0});
  try {
    transport(p.fs, -0.25, path, ProlongedState::trivial(p.g.value(std::vector<double>(4, 0.0)), -0.25));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
}

TEST(Mobility, FubiniStudyHasFullFiber) {
  FsPair p;
  const ChartPoint base{"U0", {0.1, -0.2, 0.15, 0.05}};
  const auto rep = degree_of_mobility(p.fs, -0.25, base);
  EXPECT_EQ(rep.dimension, 9);
  EXPECT_EQ(rep.fiber_dimension, 9);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.basis.size(), 9u);
  // The pair solution's state lies in the kernel.
  EXPECT_LT(distance_to_span(state_at(p.sol, base).to_vector(), orthonormal_columns(rep.basis)), 1e-8);
  std::mt19937_64 rng(6);
  const auto fresh = p.fs.sample_points(rng, 2);
  const auto check = check_kernel(p.fs, rep, fresh);
  EXPECT_LT(check.hpr, 1e-5);
  EXPECT_LT(check.extended, 1e-5);
  EXPECT_LT(check.path_independence, 1e-5);
}

TEST(Mobility, WrongBCutsFubiniStudyDown) {
  FsPair p;
  const ChartPoint base{"U0", {0.1, -0.2, 0.15, 0.05}};
  const auto rep = degree_of_mobility(p.fs, 0.0, base);
  EXPECT_LT(rep.dimension, 9);
  EXPECT_GE(rep.dimension, 1);  // (g, 0, -B) survives for any B
}

TEST(Mobility, FlatTorusKeepsOnlyConstantForms) {
  const auto t = flat_torus(2, {1.0});
  const ChartPoint base{"torus", {0.5, 0.5, 0.5, 0.5}};
  const auto rep = degree_of_mobility(t, 0.0, base);
  EXPECT_EQ(rep.dimension, 4);
  for (const auto& s : rep.basis) {
    EXPECT_LT(max_abs(s.lambda), 1e-8);
    EXPECT_LT(std::abs(s.mu), 1e-8);
  }
  EXPECT_EQ(lattice_vectors(t).size(), 4u);
}

TEST(Mobility, ReportJson) {
  const auto t = flat_torus(2, {1.0});
  const auto rep = degree_of_mobility(t, 0.0, {"torus", {0.5, 0.5, 0.5, 0.5}});
  const auto j = rep.to_json();
  EXPECT_EQ(j["label"], "local mobility estimate");
  EXPECT_EQ(j["dimension"], 4);
  EXPECT_EQ(j["basis"].size(), 4u);
  EXPECT_EQ(j["constraint_history"].size(), j["batches"].size());
  EXPECT_EQ(MobilityConfig::from_json(MobilityConfig{}.to_json()).to_json(), MobilityConfig{}.to_json());
  EXPECT_THROW(MobilityConfig::from_json({{"loops_per_batch", 0}}), Error);
}

TEST(Tanno, ResidualExamples) {
  FsPair p;
  std::mt19937_64 rng(7);
  const auto c = TensorField::constant(TensorValue({}, 4, std::vector<double>{2.0}));
  for (const auto& x : p.fs.sample_points(rng, 5)) {
    EXPECT_LT(max_abs(tanno_residual(p.g, p.J, p.sol.lambda_scalar, -0.25, x)), 1e-5);
    EXPECT_EQ(max_abs(tanno_residual(p.g, p.J, c, -0.25, x)), 0.0);
  }
  const auto fl = flat(2);
  const auto q = TensorField::closed_form({}, 4, [](std::span<const Jet> x) {
    return std::vector<Jet>{x[0] * x[1] + 3.0 * x[2] * x[2] - x[3] + 1.0};
  });
  EXPECT_EQ(max_abs(tanno_residual(fl.primary_chart().metric, fl.primary_chart().complex_structure, q, 0.0,
                                   {"flat", {0.3, 0.2, 0.1, 0.4}})),
            0.0);
}

TEST(Tanno, ToExtendedAndBack) {
  FsPair p;
  const auto ext = tanno_to_extended(p.g, p.J, p.sol.lambda_scalar, -0.25);
  std::mt19937_64 rng(8);
  for (const auto& x : p.fs.sample_points(rng, 5)) {
    EXPECT_LT(extended_residual(p.g, p.J, -0.25, ext, x).max_abs(), 1e-5);
    EXPECT_LT(tanno_round_trip_defect(p.g, p.J, p.sol, -0.25, x), 1e-6);
  }
  const double kappa = 0.5;
  const auto c = TensorField::constant(TensorValue({}, 4, std::vector<double>{1.5}));
  const ChartPoint x{"U0", {0.1, 0.1, 0.2, 0.2}};
  const auto s = state_at(tanno_to_extended(p.g, p.J, c, kappa), x);
  EXPECT_LT(max_abs_diff(s.a, -3.0 * p.g.value(x.x)), 1e-12);
  EXPECT_EQ(max_abs(s.lambda), 0.0);
  EXPECT_DOUBLE_EQ(s.mu, 1.5);
  EXPECT_LT(extended_residual(p.g, p.J, kappa, tanno_to_extended(p.g, p.J, c, kappa), x).max_abs(), 1e-12);
  EXPECT_THROW(tanno_to_extended(p.g, p.J, c, 0.0), Error);
}

TEST(Tanno, LaplaceIdentity) {
  FsPair p;
  std::mt19937_64 rng(9);
  for (const auto& x : p.fs.sample_points(rng, 5)) {
    const auto r = laplace_identity_residual(p.g, p.J, -0.25, p.sol.lambda_scalar, x);
    EXPECT_LT(max_abs(r), 1e-5);
    const auto wrong = laplace_identity_residual(p.g, p.J, 0.25, p.sol.lambda_scalar, x);
    const auto l = p.sol.lambda.value(x.x);
    EXPECT_LT(max_abs(wrong - r + (4.0 * 0.5 * 3.0) * l), 1e-10);
  }
  const auto c = TensorField::constant(TensorValue({}, 4, std::vector<double>{2.0}));
  EXPECT_EQ(max_abs(laplace_identity_residual(p.g, p.J, -0.25, c, {"U0", {0.1, 0.2, 0.3, 0.4}})), 0.0);
}

TEST(Signature, Examples) {
  FsPair p;
  std::mt19937_64 rng(10);
  for (const auto& x : p.fs.sample_points(rng, 5)) EXPECT_EQ(signature(p.g, x), std::make_pair(4, 0));
  const auto fl = flat(2, {1.0, -1.0});
  EXPECT_EQ(signature(fl.primary_chart().metric, {"flat", {0, 0, 0, 0}}), std::make_pair(2, 2));
  const auto g = p.g.value(std::vector<double>(4, 0.1));
  EXPECT_EQ(signature(-1.0 * g), std::make_pair(0, 4));
  TensorValue deg = g;
  for (int i = 0; i < 4; ++i) deg(0, i) = deg(i, 0) = 0.0;
  EXPECT_THROW(signature(deg), Error);
}

TEST(Mobility, SweepFindsTheCurvatureConstant) {
  FsPair p;
  MobilityConfig cfg;
  cfg.sample_points = 3;
  cfg.random_loops = 0;
  const auto rep = degree_of_mobility_sweep(p.fs, {"U0", {0.1, -0.2, 0.15, 0.05}}, cfg);
  EXPECT_DOUBLE_EQ(rep.B, -0.25);
  EXPECT_EQ(rep.dimension, 9);
  EXPECT_EQ(rep.swept_B.size(), 5u);
  for (std::size_t i = 0; i + 1 < rep.swept_B.size(); ++i) EXPECT_LT(rep.swept_dimension[i], 9);
}
