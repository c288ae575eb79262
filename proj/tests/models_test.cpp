#include "kahler/geometry.hpp"
#include "kahler/models.hpp"

#include <gtest/gtest.h>

#include <complex>
#include <random>

using namespace kahler;

namespace {

// Textbook FS hermitian matrix (1+|z|^2) delta - conj(z_j) z_k over (1+|z|^2)^2, times 4.
TensorValue fs_oracle(std::span<const double> x) {
  const int n = static_cast<int>(x.size()) / 2;
  std::vector<std::complex<double>> z(n);
  double r2 = 0.0;
  for (int j = 0; j < n; ++j) {
    z[j] = {x[2 * j], x[2 * j + 1]};
    r2 += std::norm(z[j]);
  }
  TensorValue g(lower_slots(2), 2 * n, 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const std::complex<double> h = ((j == k ? 1.0 + r2 : 0.0) - std::conj(z[j]) * z[k]) / ((1 + r2) * (1 + r2));
      g(2 * j, 2 * k) = g(2 * j + 1, 2 * k + 1) = 4 * h.real();
      g(2 * j, 2 * k + 1) = 4 * h.imag();
      g(2 * j + 1, 2 * k) = -4 * h.imag();
    }
  return g;
}

std::vector<double> random_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> nd;
  std::vector<double> v(d);
  for (auto& c : v) c = nd(rng);
  return v;
}

// Pullback (Df)^T g_FS(f(x)) Df evaluated directly from the projective map.
TensorValue pullback_oracle(const ComplexMatrix& A, const ChartPoint& p) {
  const int d = static_cast<int>(p.x.size());
  const auto map = projective_map(A, 0, 0);
  const auto y = map(coordinate_jets(p.x, 1));
  std::vector<double> fx(d);
  for (int i = 0; i < d; ++i) fx[i] = y[i].value();
  const TensorValue gf = fs_oracle(fx);
  TensorValue g(lower_slots(2), d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) g(i, j) += y[a].partial(i) * gf(a, b) * y[b].partial(j);
  return g;
}

}  // namespace

TEST(FubiniStudy, OriginIsFourTimesIdentity) {
  const auto fs = fubini_study(2);
  const auto g = fs.primary_chart().metric.value(std::vector<double>(4, 0.0));
  EXPECT_LT(max_abs_diff(g, 4.0 * identity_tensor(4, lower_slots(2))), 1e-15);
  const auto gamma = christoffels(metric_jet(fs.primary_chart().metric, {"U0", std::vector<double>(4, 0.0)}, 1));
  EXPECT_LT(max_abs(gamma), 1e-15);
}

TEST(FubiniStudy, MatchesTextbookFormula) {
  std::mt19937_64 rng(11);
  const auto fs = fubini_study(3);
  for (const auto& p : fs.sample_points(rng, 10))
    EXPECT_LT(max_abs_diff(fs.primary_chart().metric.value(p.x), fs_oracle(p.x)), 1e-14);
}

TEST(FubiniStudy, HolomorphicSectionalCurvatureIsOne) {
  std::mt19937_64 rng(3);
  for (int n : {2, 3}) {
    const auto fs = fubini_study(n);
    for (const auto& p : fs.sample_points(rng, 10)) {
      const auto m = metric_jet(fs.primary_chart().metric, p, 2);
      const auto R = riemann(m);
      const auto v = random_vector(rng, 2 * n);
      EXPECT_NEAR(holomorphic_sectional_curvature(R, m.g(), fs.primary_chart().J, v), 1.0, 1e-7);
    }
  }
}

TEST(FubiniStudy, ChartTransitionsPreserveTheMetric) {
  std::mt19937_64 rng(5);
  const auto fs = fubini_study(2);
  const auto& c0 = fs.chart(0);
  for (int target = 1; target <= 2; ++target) {
    const auto& ct = fs.chart(target);
    for (auto p : fs.sample_points(rng, 10)) {
      p.x[2 * (target - 1)] = 1.0 + 0.3 * p.x[2 * (target - 1)];  // stay off Z_target = 0
      const auto y = c0.chart.map_to(ct.chart.name(), p.x);
      const auto jac = c0.chart.jacobian_to(ct.chart.name(), p.x);
      const auto gt = ct.metric.value(y);
      const auto g0 = c0.metric.value(p.x);
      TensorValue pulled(lower_slots(2), 4, 0.0);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) pulled(i, j) += jac[a * 4 + i] * gt(a, b) * jac[b * 4 + j];
      EXPECT_LT(max_abs_diff(pulled, g0), 1e-9);
      // Round trip back to chart 0.
      const auto back = ct.chart.map_to("U0", y);
      for (int i = 0; i < 4; ++i) EXPECT_NEAR(back[i], p.x[i], 1e-12);
    }
  }
}

TEST(FubiniStudy, RejectsLowDimension) {
  EXPECT_THROW(fubini_study(1), Error);
  try {
    fubini_study(1);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedDimension);
  }
}

TEST(Pullback, MatchesPullbackOfFubiniStudy) {
  ComplexMatrix A = ComplexMatrix::Identity(3, 3);
  A(0, 0) = 2.0;
  A(1, 2) = {0.3, -0.2};
  const auto model = pullback_fs(A);
  std::mt19937_64 rng(8);
  for (const auto& p : model.sample_points(rng, 10))
    EXPECT_LT(max_abs_diff(model.primary_chart().metric.value(p.x), pullback_oracle(A, p)), 1e-12);
}

TEST(Pullback, ScalarMatrixGivesFubiniStudy) {
  const auto fs = fubini_study(2);
  const auto model = pullback_fs(std::complex<double>(0.0, 3.0) * ComplexMatrix::Identity(3, 3));
  std::mt19937_64 rng(9);
  for (const auto& p : fs.sample_points(rng, 5))
    EXPECT_LT(max_abs_diff(model.primary_chart().metric.value(p.x), fs.primary_chart().metric.value(p.x)), 1e-13);
}

TEST(Pullback, FunctorialUnderUnitaryFactor) {
  // g_{AU} is the pullback of g_A by f_U.
  ComplexMatrix A = ComplexMatrix::Identity(3, 3);
  A(0, 0) = 2.0;
  A(2, 1) = 0.5;
  const double t = 0.4;
  ComplexMatrix U = ComplexMatrix::Identity(3, 3);
  U(1, 1) = std::cos(t);
  U(1, 2) = -std::sin(t);
  U(2, 1) = std::sin(t);
  U(2, 2) = std::cos(t);
  const auto gA = pullback_fs(A);
  const auto gAU = pullback_fs(A * U);
  const auto fU = projective_map(U, 0, 0);
  std::mt19937_64 rng(10);
  for (const auto& p : gA.sample_points(rng, 10)) {
    const auto y = fU(coordinate_jets(p.x, 1));
    std::vector<double> fx(4);
    for (int i = 0; i < 4; ++i) fx[i] = y[i].value();
    const auto g = gA.primary_chart().metric.value(fx);
    TensorValue pulled(lower_slots(2), 4, 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) pulled(i, j) += y[a].partial(i) * g(a, b) * y[b].partial(j);
    EXPECT_LT(max_abs_diff(pulled, gAU.primary_chart().metric.value(p.x)), 1e-9);
  }
}

TEST(Pullback, RejectsSingularMatrix) {
  ComplexMatrix A = ComplexMatrix::Identity(3, 3);
  A(2, 2) = 0.0;
  EXPECT_THROW(pullback_fs(A), Error);
}

TEST(Models, AllPassKahlerVerification) {
  std::vector<KahlerModel> models;
  models.push_back(flat(2));
  models.push_back(fubini_study(2));
  ComplexMatrix A = ComplexMatrix::Identity(3, 3);
  A(0, 0) = 2.0;
  models.push_back(pullback_fs(A));
  models.push_back(flat_torus(2, {1.0}));
  models.push_back(product_model({fubini_study(2), flat(2), flat_torus(2, {2.0})}, {1.0, 2.0, 0.5}));
  std::mt19937_64 rng(1);
  for (const auto& m : models)
    for (std::size_t c = 0; c < m.charts.size(); ++c) {
      const auto pts = m.sample_points(rng, 20, static_cast<int>(c));
      const auto report = verify_kahler(m.chart(static_cast<int>(c)).metric,
                                        m.chart(static_cast<int>(c)).complex_structure, pts);
      EXPECT_TRUE(report.pass()) << to_string(m.kind);
      EXPECT_EQ(report.points, 20);
    }
}

TEST(Models, SignFlippedComplexStructureFails) {
  const auto m = flat(2);
  TensorValue J = m.primary_chart().J;
  J(3, 2) = -1.0;  // J^2 != -Id on the second block
  std::mt19937_64 rng(2);
  const auto report = verify_kahler(m.primary_chart().metric, TensorField::constant(J), m.sample_points(rng, 3));
  EXPECT_FALSE(report.pass());
  EXPECT_GT(report.checks[0].max_residual, 0.5);
}

TEST(Models, ProductOfFlatFactorsIsFlat) {
  const auto m = product_model({flat(2), flat(2)}, {1.0, 1.0});
  EXPECT_EQ(m.dim(), 8);
  const auto g = m.primary_chart().metric.value(std::vector<double>(8, 0.3));
  EXPECT_LT(max_abs_diff(g, identity_tensor(8, lower_slots(2))), 1e-15);
  EXPECT_THROW(product_model({flat(2), flat(2)}, {1.0, 0.0}), Error);
}

TEST(Models, ProductWeightsKeepTheConnection) {
  const auto a = product_model({fubini_study(2), pullback_fs(ComplexMatrix::Identity(3, 3)), flat(2)}, {1, 1, 1});
  const auto b = product_model({fubini_study(2), pullback_fs(ComplexMatrix::Identity(3, 3)), flat(2)}, {2, 0.5, -3});
  std::mt19937_64 rng(4);
  for (const auto& p : a.sample_points(rng, 10)) {
    const auto ga = christoffels(metric_jet(a.primary_chart().metric, p, 1));
    const auto gb = christoffels(metric_jet(b.primary_chart().metric, p, 1));
    EXPECT_LT(max_abs_diff(ga, gb), 1e-12);
  }
}

TEST(Models, ProductComplexStructureSquaresToMinusOne) {
  const auto m = product_model({fubini_study(2), flat(2)}, {1, 1});
  const auto& J = m.primary_chart().J;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double s = 0.0;
      for (int a = 0; a < 8; ++a) s += J(i, a) * J(a, j);
      EXPECT_EQ(s, i == j ? -1.0 : 0.0);
    }
}

TEST(Models, FlatTorusIsFlat) {
  const auto m = flat_torus(2, {1.0, 2.0, 1.5, 1.0});
  std::mt19937_64 rng(6);
  for (const auto& p : m.sample_points(rng, 5))
    EXPECT_EQ(max_abs(riemann(metric_jet(m.primary_chart().metric, p, 2))), 0.0);
  EXPECT_THROW(flat_torus(2, {1.0, -1.0, 1.0, 1.0}), Error);
}

TEST(Models, DescriptorRoundTrip) {
  ComplexMatrix A = ComplexMatrix::Identity(3, 3);
  A(0, 0) = 2.0;
  A(1, 0) = {0.0, 1.0};
  const auto m = product_model({pullback_fs(A), flat_torus(2, {1.0})}, {1.0, 3.0});
  const auto j = m.descriptor();
  const auto back = model_from_json(j);
  EXPECT_EQ(back.descriptor(), j);
  EXPECT_THROW(model_from_json({{"kind", "klein-bottle"}}), Error);
}

TEST(Models, RecenterPicksTheDeepestChart) {
  const auto fs = fubini_study(2);
  const ChartPoint p{"U0", {1.9, 0.0, 0.1, 0.0}};
  const auto q = fs.recenter(p);
  EXPECT_EQ(q.chart, "U1");
  const auto Z = homogeneous_lift(q);
  const auto W = homogeneous_lift(p);
  // Same projective point.
  EXPECT_LT((Z / Z(0) - W / W(0)).norm(), 1e-12);
}
