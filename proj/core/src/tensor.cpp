#include "kahler/tensor.hpp"

namespace kahler {

std::string variance_string(const Variance& v) {
  int up = 0, down = 0;
  std::string s;
  for (auto slot : v) {
    s += slot == Slot::Upper ? '^' : '_';
    (slot == Slot::Upper ? up : down)++;
  }
  return "(" + std::to_string(up) + "," + std::to_string(down) + ")" + s;
}

TensorValue value_of(const JetTensor& t) {
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = t[i].value();
  return TensorValue(t.variance(), t.dim(), std::move(v));
}

JetTensor partial_derivative(const JetTensor& t) {
  Variance v = t.variance();
  v.push_back(Slot::Lower);
  const int n = t.dim();
  std::vector<Jet> out;
  out.reserve(t.size() * n);
  for (std::size_t f = 0; f < t.size(); ++f)
    for (int k = 0; k < n; ++k) out.push_back(t[f].derivative(k));
  return JetTensor(std::move(v), n, std::move(out));
}

TensorValue partials_value(const JetTensor& t, int k) {
  JetTensor d = t;
  for (int i = 0; i < k; ++i) d = partial_derivative(d);
  return value_of(d);
}

JetTensor truncated(const JetTensor& t, int order) {
  std::vector<Jet> out;
  out.reserve(t.size());
  for (const auto& j : t.components()) out.push_back(j.truncated(order));
  return JetTensor(t.variance(), t.dim(), std::move(out));
}

int jet_order(const JetTensor& t) {
  int o = JetLayout::kMaxOrder;
  for (const auto& j : t.components()) o = std::min(o, j.order());
  return o;
}

JetTensor constant_jets(const TensorValue& t, int jet_dim, int order) {
  std::vector<Jet> out;
  out.reserve(t.size());
  for (double v : t.components()) out.push_back(Jet::constant(jet_dim, order, v));
  return JetTensor(t.variance(), t.dim(), std::move(out));
}

}  // namespace kahler
