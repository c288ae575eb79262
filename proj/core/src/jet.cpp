#include "kahler/jet.hpp"

#include "kahler/errors.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace kahler {

namespace {

std::uint64_t pack(std::span<const std::uint8_t> exps, int order) {
  std::uint64_t key = 0;
  for (auto e : exps) key = key * static_cast<std::uint64_t>(order + 1) + e;
  return key;
}

void enumerate(int dim, int degree, int pos, std::vector<std::uint8_t>& current,
               std::vector<std::uint8_t>& out) {
  if (pos == dim - 1) {
    current[pos] = static_cast<std::uint8_t>(degree);
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current[pos] = static_cast<std::uint8_t>(e);
    enumerate(dim, degree - e, pos + 1, current, out);
  }
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

JetLayout::JetLayout(int dim, int order) : dim_(dim), order_(order) {
  degree_offsets_.push_back(0);
  std::vector<std::uint8_t> current(dim, 0);
  for (int deg = 0; deg <= order; ++deg) {
    enumerate(dim, deg, 0, current, exponents_);
    degree_offsets_.push_back(exponents_.size() / dim);
  }
  size_ = degree_offsets_.back();

  std::unordered_map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < size_; ++i) index.emplace(pack(exponents(i), order_), i);

  std::vector<std::uint8_t> sum(dim);
  for (std::size_t a = 0; a < size_; ++a) {
    const int da = degree(a);
    for (std::size_t b = 0; b < degree_offsets_[order_ - da + 1]; ++b) {
      auto ea = exponents(a);
      auto eb = exponents(b);
      for (int k = 0; k < dim; ++k) sum[k] = static_cast<std::uint8_t>(ea[k] + eb[k]);
      products_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                           static_cast<std::uint32_t>(index.at(pack(sum, order_)))});
    }
  }

  derivatives_.resize(dim);
  if (order_ == 0) return;
  for (int k = 0; k < dim; ++k) {
    for (std::size_t i = 0; i < size_; ++i) {
      auto e = exponents(i);
      if (e[k] == 0) continue;
      std::vector<std::uint8_t> lowered(e.begin(), e.end());
      lowered[k] -= 1;
      derivatives_[k].push_back({static_cast<std::uint32_t>(i),
                                 static_cast<std::uint32_t>(index.at(pack(lowered, order_))),
                                 static_cast<double>(e[k])});
    }
  }
}

const JetLayout& JetLayout::get(int dim, int order) {
  if (dim <= 0 || dim > 16) throw Error(ErrorKind::InvalidInput, "jet dimension must be in 1..16");
  if (order < 0 || order > kMaxOrder) throw Error(ErrorKind::InsufficientJet, "jet order out of range");
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> registry;
  std::lock_guard lock(registry_mutex());
  auto& slot = registry[{dim, order}];
  if (!slot) slot.reset(new JetLayout(dim, order));
  return *slot;
}

int JetLayout::degree(std::size_t index) const {
  int d = 0;
  while (index >= degree_offsets_[d + 1]) ++d;
  return d;
}

std::size_t JetLayout::index_of(std::span<const std::uint8_t> exps) const {
  int deg = 0;
  for (auto e : exps) deg += e;
  if (deg > order_) throw Error(ErrorKind::InsufficientJet, "monomial exceeds jet order");
  for (std::size_t i = degree_offsets_[deg]; i < degree_offsets_[deg + 1]; ++i) {
    auto e = exponents(i);
    if (std::equal(e.begin(), e.end(), exps.begin())) return i;
  }
  throw Error(ErrorKind::InvalidInput, "monomial not found");
}

Jet Jet::constant(int dim, int order, double value) {
  const auto& layout = JetLayout::get(dim, order);
  Storage c(layout.size(), 0.0);
  c[0] = value;
  return Jet(&layout, std::move(c));
}

Jet Jet::variable(int dim, int order, int index, double at) {
  Jet j = constant(dim, order, at);
  if (order >= 1) j.coeffs_[1 + index] = 1.0;
  return j;
}

Jet Jet::from_coefficients(int dim, int order, std::span<const double> coeffs) {
  const auto& layout = JetLayout::get(dim, order);
  if (coeffs.size() != layout.size()) throw Error(ErrorKind::InvalidInput, "coefficient count mismatch");
  return Jet(&layout, Storage(coeffs.begin(), coeffs.end()));
}

double Jet::partial(std::span<const std::uint8_t> alpha) const {
  double factorial = 1.0;
  for (auto a : alpha)
    for (int f = 2; f <= a; ++f) factorial *= f;
  return factorial * coeffs_[layout_->index_of(alpha)];
}

double Jet::partial(int i) const {
  if (order() < 1) throw Error(ErrorKind::InsufficientJet, "first partial needs order >= 1");
  return coeffs_[1 + i];
}

double Jet::partial(int i, int j) const {
  std::vector<std::uint8_t> a(dim(), 0);
  ++a[i];
  ++a[j];
  return partial(a);
}

double Jet::partial(int i, int j, int k) const {
  std::vector<std::uint8_t> a(dim(), 0);
  ++a[i];
  ++a[j];
  ++a[k];
  return partial(a);
}

Jet Jet::derivative(int k) const {
  if (order() < 1) throw Error(ErrorKind::InsufficientJet, "cannot differentiate an order-0 jet");
  const auto& lower = JetLayout::get(dim(), order() - 1);
  Storage c(lower.size(), 0.0);
  for (const auto& t : layout_->derivative(k)) c[t.dst] += t.factor * coeffs_[t.src];
  return Jet(&lower, std::move(c));
}

Jet Jet::truncated(int order) const {
  if (order >= this->order()) return *this;
  const auto& lower = JetLayout::get(dim(), order);
  Storage c(coeffs_.begin(), coeffs_.begin() + static_cast<std::ptrdiff_t>(lower.size()));
  return Jet(&lower, std::move(c));
}

const JetLayout* Jet::common(const Jet& a, const Jet& b) {
  if (a.layout_->dim() != b.layout_->dim())
    throw Error(ErrorKind::InvalidInput, "jets over different dimensions");
  return a.layout_->order() <= b.layout_->order() ? a.layout_ : b.layout_;
}

Jet& Jet::operator+=(const Jet& o) {
  const auto* l = common(*this, o);
  if (l != layout_) *this = truncated(l->order());
  for (std::size_t i = 0; i < l->size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  const auto* l = common(*this, o);
  if (l != layout_) *this = truncated(l->order());
  for (std::size_t i = 0; i < l->size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }
Jet& Jet::operator/=(const Jet& o) { return *this = *this / o; }

Jet operator-(Jet a) {
  for (auto& c : a.coeffs_) c = -c;
  return a;
}

Jet operator*(const Jet& a, const Jet& b) {
  const auto* l = Jet::common(a, b);
  Jet::Storage c(l->size(), 0.0);
  for (const auto& p : l->products()) c[p.out] += a.coeffs_[p.lhs] * b.coeffs_[p.rhs];
  return Jet(l, std::move(c));
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
Jet operator/(double s, const Jet& a) { return reciprocal(a) * s; }

Jet Jet::compose(std::span<const double> taylor) const {
  const int k_max = order();
  Jet h = *this;
  h.coeffs_[0] = 0.0;
  Jet result = Jet::constant(dim(), k_max, taylor[k_max]);
  for (int k = k_max - 1; k >= 0; --k) {
    result = result * h;
    result.coeffs_[0] += taylor[k];
  }
  return result;
}

Jet reciprocal(const Jet& u) {
  const double u0 = u.value();
  if (u0 == 0.0) throw Error(ErrorKind::Domain, "division by a jet with zero value");
  double t[JetLayout::kMaxOrder + 1];
  double p = 1.0 / u0;
  for (int k = 0; k <= u.order(); ++k) {
    t[k] = (k % 2 == 0 ? 1.0 : -1.0) * p;
    p /= u0;
  }
  return u.compose({t, static_cast<std::size_t>(u.order() + 1)});
}

Jet pow(const Jet& u, double p) {
  const double u0 = u.value();
  if (u0 <= 0.0 && std::floor(p) != p)
    throw Error(ErrorKind::Domain, "non-integer power of a non-positive jet");
  double t[JetLayout::kMaxOrder + 1];
  double binom = 1.0;
  for (int k = 0; k <= u.order(); ++k) {
    t[k] = binom * std::pow(u0, p - k);
    binom *= (p - k) / (k + 1);
  }
  return u.compose({t, static_cast<std::size_t>(u.order() + 1)});
}

Jet sqrt(const Jet& u) { return pow(u, 0.5); }

Jet exp(const Jet& u) {
  double t[JetLayout::kMaxOrder + 1];
  const double e = std::exp(u.value());
  double f = 1.0;
  for (int k = 0; k <= u.order(); ++k) {
    t[k] = e / f;
    f *= (k + 1);
  }
  return u.compose({t, static_cast<std::size_t>(u.order() + 1)});
}

Jet log(const Jet& u) {
  const double u0 = u.value();
  if (u0 <= 0.0) throw Error(ErrorKind::Domain, "log of a non-positive jet");
  double t[JetLayout::kMaxOrder + 1];
  t[0] = std::log(u0);
  double p = 1.0 / u0;
  for (int k = 1; k <= u.order(); ++k) {
    t[k] = (k % 2 == 1 ? 1.0 : -1.0) * p / k;
    p /= u0;
  }
  return u.compose({t, static_cast<std::size_t>(u.order() + 1)});
}

Jet sin(const Jet& u) {
  double t[JetLayout::kMaxOrder + 1];
  const double s = std::sin(u.value()), c = std::cos(u.value());
  const double cycle[4] = {s, c, -s, -c};
  double f = 1.0;
  for (int k = 0; k <= u.order(); ++k) {
    t[k] = cycle[k % 4] / f;
    f *= (k + 1);
  }
  return u.compose({t, static_cast<std::size_t>(u.order() + 1)});
}

Jet cos(const Jet& u) {
  double t[JetLayout::kMaxOrder + 1];
  const double s = std::sin(u.value()), c = std::cos(u.value());
  const double cycle[4] = {c, -s, -c, s};
  double f = 1.0;
  for (int k = 0; k <= u.order(); ++k) {
    t[k] = cycle[k % 4] / f;
    f *= (k + 1);
  }
  return u.compose({t, static_cast<std::size_t>(u.order() + 1)});
}

}  // namespace kahler
