#include "kahler/field.hpp"
#include "kahler/tensor.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace kahler;

namespace {

TensorValue random_metric(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d;
  std::vector<double> a(n * n);
  for (auto& v : a) v = d(rng);
  TensorValue g(lower_slots(2), n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) g(i, j) += a[i * n + k] * a[j * n + k];
      if (i == j) g(i, j) += 1.0;
    }
  return g;
}

}  // namespace

TEST(Tensor, ShapeAndIndexing) {
  TensorValue t({Slot::Upper, Slot::Lower, Slot::Lower}, 4, 0.0);
  EXPECT_EQ(t.size(), 64u);
  t(1, 2, 3) = 5.0;
  EXPECT_EQ(t[t.flat(1, 2, 3)], 5.0);
  EXPECT_EQ(t.unflat(t.flat(1, 2, 3)), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(variance_string(t.variance()), "(1,2)^__");
  EXPECT_THROW(TensorValue(lower_slots(2), 4, std::vector<double>(15)), Error);
}

TEST(Tensor, RaiseLowerRoundTrip) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 10; ++trial) {
    const TensorValue g = random_metric(rng, 4);
    const TensorValue gi({Slot::Upper, Slot::Upper}, 4, inverse<double>(g.components(), 4));
    TensorValue t({Slot::Lower, Slot::Lower, Slot::Lower}, 4, 0.0);
    for (auto& v : t.components()) v = d(rng);
    const auto back = lower_index(raise_index(t, 1, gi), 1, g);
    EXPECT_LT(max_abs_diff(back, t), 1e-12);
  }
}

TEST(Tensor, DeterminantAndInverse) {
  std::vector<double> a{2, 1, 0, 1, 3, 1, 0, 1, 4};
  EXPECT_NEAR(determinant<double>(a, 3), 18.0, 1e-13);
  const auto inv = inverse<double>(a, 3);
  const auto id = matmul<double>(a, inv, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(id[i * 3 + j], i == j ? 1.0 : 0.0, 1e-14);
  std::vector<double> s{1, 2, 2, 4};
  EXPECT_EQ(determinant<double>(s, 2), 0.0);
  EXPECT_THROW(inverse<double>(s, 2), Error);
}

TEST(Tensor, JetDeterminantMatchesJacobiFormula) {
  // d det(M) = det(M) tr(M^-1 dM)
  const double x0 = 0.3;
  const Jet x = Jet::variable(1, 1, 0, x0);
  std::vector<Jet> m{2.0 + x, x * x, sin(x), 3.0 + x * x * x};
  const Jet det = determinant<Jet>(m, 2);
  const double expected = 1.0 * (3 + x0 * x0 * x0) + (2 + x0) * 3 * x0 * x0 - 2 * x0 * std::sin(x0) -
                          x0 * x0 * std::cos(x0);
  EXPECT_NEAR(det.partial(0), expected, 1e-13);
}

TEST(Tensor, PartialDerivativeAppendsLowerSlot) {
  const auto f = TensorField::closed_form({Slot::Upper}, 4, [](std::span<const Jet> x) {
    return std::vector<Jet>{x[0] * x[1], x[2], x[3] * x[3], x[0]};
  });
  const std::vector<double> p{1.0, 2.0, 3.0, 4.0};
  const auto d = partial_derivative(f.jets(p, 2));
  EXPECT_EQ(d.variance(), (Variance{Slot::Upper, Slot::Lower}));
  EXPECT_EQ(jet_order(d), 1);
  EXPECT_NEAR(d(0, 1).value(), 1.0, 1e-15);
  EXPECT_NEAR(d(2, 3).value(), 8.0, 1e-15);
  EXPECT_NEAR(partials_value(f.jets(p, 2), 2)(2, 3, 3), 2.0, 1e-15);
}

TEST(Tensor, FiniteDifferenceJetsAgree) {
  const auto f = TensorField::closed_form(lower_slots(1), 4, [](std::span<const Jet> x) {
    return std::vector<Jet>{exp(x[0]) * x[1], sin(x[2] * x[3]), x[0] * x[0] * x[3], 1.0 / (2.0 + x[1])};
  });
  const std::vector<double> p{0.1, 0.2, -0.3, 0.5};
  const auto exact = f.jets(p, 2);
  const auto fd = finite_difference_jets(f, p, 2);
  for (std::size_t c = 0; c < exact.size(); ++c)
    for (std::size_t k = 0; k < exact[c].coefficients().size(); ++k)
      EXPECT_NEAR(fd[c].coefficients()[k], exact[c].coefficients()[k], 1e-7);
  EXPECT_THROW(finite_difference_jets(f, p, 3), Error);
}
