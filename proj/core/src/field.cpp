#include "kahler/field.hpp"

#include <cmath>

namespace kahler {

bool Box::contains(std::span<const double> x, double margin) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
  return true;
}

Box Box::cube(int dim, double half_width) {
  return Box{std::vector<double>(dim, -half_width), std::vector<double>(dim, half_width)};
}

Chart::Chart(std::string name, int dim, Box domain, std::vector<Transition> transitions)
    : name_(std::move(name)), dim_(dim), domain_(std::move(domain)), transitions_(std::move(transitions)) {
  if (dim_ < 4 || dim_ % 2 != 0)
    throw Error(ErrorKind::UnsupportedDimension, "chart dimension must be even and >= 4");
  if (static_cast<int>(domain_.lo.size()) != dim_ || static_cast<int>(domain_.hi.size()) != dim_)
    throw Error(ErrorKind::InvalidInput, "chart domain box has the wrong dimension");
}

const Transition* Chart::transition_to(const std::string& target) const {
  for (const auto& t : transitions_)
    if (t.target == target) return &t;
  return nullptr;
}

std::vector<double> Chart::map_to(const std::string& target, std::span<const double> x) const {
  if (target == name_) return {x.begin(), x.end()};
  const auto* t = transition_to(target);
  if (!t) throw Error(ErrorKind::OutOfDomain, "no transition from " + name_ + " to " + target);
  auto y = t->map(coordinate_jets(x, 0));
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& j : y) out.push_back(j.value());
  return out;
}

std::vector<double> Chart::jacobian_to(const std::string& target, std::span<const double> x) const {
  const int n = dim_;
  std::vector<double> jac(static_cast<std::size_t>(n) * n, 0.0);
  if (target == name_) {
    for (int i = 0; i < n; ++i) jac[i * n + i] = 1.0;
    return jac;
  }
  const auto* t = transition_to(target);
  if (!t) throw Error(ErrorKind::OutOfDomain, "no transition from " + name_ + " to " + target);
  auto y = t->map(coordinate_jets(x, 1));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) jac[i * n + k] = y[i].partial(k);
  return jac;
}

std::vector<Jet> coordinate_jets(std::span<const double> x, int order) {
  const int d = static_cast<int>(x.size());
  std::vector<Jet> out;
  out.reserve(d);
  for (int i = 0; i < d; ++i) out.push_back(Jet::variable(d, order, i, x[i]));
  return out;
}

TensorField TensorField::closed_form(Variance variance, int dim, JetMap map) {
  Variance v = variance;
  return TensorField(std::move(variance), dim,
                     [v = std::move(v), dim, map = std::move(map)](std::span<const double> x, int order) {
                       return JetTensor(v, dim, map(coordinate_jets(x, order)));
                     });
}

TensorField TensorField::constant(const TensorValue& value) {
  return TensorField(value.variance(), value.dim(), [value](std::span<const double> x, int order) {
    return constant_jets(value, static_cast<int>(x.size()), order);
  });
}

JetTensor TensorField::jets(std::span<const double> x, int order) const {
  if (!eval_) throw Error(ErrorKind::InvalidInput, "evaluating an empty field");
  return eval_(x, order);
}

namespace {

constexpr double kFirst[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
constexpr int kOffsets[4] = {-2, -1, 1, 2};

}  // namespace

JetTensor finite_difference_jets(const TensorField& field, std::span<const double> x, int order,
                                 double step) {
  if (order > 2)
    throw Error(ErrorKind::InsufficientJet, "finite-difference jets are limited to order 2");
  const int d = static_cast<int>(x.size());
  const auto& layout = JetLayout::get(d, order);
  const TensorValue f0 = field.value(x);
  std::vector<std::vector<double>> coeffs(f0.size(), std::vector<double>(layout.size(), 0.0));
  for (std::size_t c = 0; c < f0.size(); ++c) coeffs[c][0] = f0[c];

  std::vector<double> p(x.begin(), x.end());
  auto eval_at = [&](const std::vector<double>& q) { return field.value(q); };

  if (order >= 1) {
    for (int i = 0; i < d; ++i) {
      std::vector<TensorValue> samples;
      for (int s = 0; s < 4; ++s) {
        p = {x.begin(), x.end()};
        p[i] += kOffsets[s] * step;
        samples.push_back(eval_at(p));
      }
      for (std::size_t c = 0; c < f0.size(); ++c) {
        double v = 0.0;
        for (int s = 0; s < 4; ++s) v += kFirst[s] * samples[s][c];
        coeffs[c][1 + i] = v / step;
      }
    }
  }
  if (order >= 2) {
    std::vector<std::uint8_t> alpha(d, 0);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        std::fill(alpha.begin(), alpha.end(), 0);
        ++alpha[i];
        ++alpha[j];
        const std::size_t idx = layout.index_of(alpha);
        std::vector<double> acc(f0.size(), 0.0);
        if (i == j) {
          constexpr double w[5] = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0};
          for (int s = -2; s <= 2; ++s) {
            p = {x.begin(), x.end()};
            p[i] += s * step;
            const auto v = s == 0 ? f0 : eval_at(p);
            for (std::size_t c = 0; c < f0.size(); ++c) acc[c] += w[s + 2] * v[c];
          }
          // Taylor coefficient of x_i^2 is f_ii / 2.
          for (std::size_t c = 0; c < f0.size(); ++c) coeffs[c][idx] = acc[c] / (step * step) / 2.0;
        } else {
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
              p = {x.begin(), x.end()};
              p[i] += kOffsets[a] * step;
              p[j] += kOffsets[b] * step;
              const auto v = eval_at(p);
              for (std::size_t c = 0; c < f0.size(); ++c) acc[c] += kFirst[a] * kFirst[b] * v[c];
            }
          for (std::size_t c = 0; c < f0.size(); ++c) coeffs[c][idx] = acc[c] / (step * step);
        }
      }
    }
  }

  std::vector<Jet> comps;
  comps.reserve(f0.size());
  for (const auto& c : coeffs) comps.push_back(Jet::from_coefficients(d, order, c));
  return JetTensor(f0.variance(), f0.dim(), std::move(comps));
}

TensorField finite_difference_field(TensorField pointwise, double step) {
  auto v = pointwise.variance();
  const int dim = pointwise.dim();
  return TensorField(std::move(v), dim, [pw = std::move(pointwise), step](std::span<const double> x, int order) {
    return finite_difference_jets(pw, x, order, step);
  });
}

}  // namespace kahler
