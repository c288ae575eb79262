#pragma once

#include "kahler/errors.hpp"
#include "kahler/jet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace kahler {

enum class Slot : std::uint8_t { Upper, Lower };
using Variance = std::vector<Slot>;

inline Variance lower_slots(int rank) { return Variance(rank, Slot::Lower); }
std::string variance_string(const Variance& v);

/// Dense multi-index array, row-major, every slot of extent `dim`.  Variance
/// is metadata; it is checked where slots are contracted or converted.
template <class Scalar>
class BasicTensor {
 public:
  BasicTensor() = default;
  BasicTensor(Variance variance, int dim, Scalar fill)
      : variance_(std::move(variance)), dim_(dim), data_(count(variance_.size(), dim), fill) {}
  BasicTensor(Variance variance, int dim, std::vector<Scalar> components)
      : variance_(std::move(variance)), dim_(dim), data_(std::move(components)) {
    if (data_.size() != count(variance_.size(), dim))
      throw Error(ErrorKind::InvalidInput, "component count does not match (dim)^rank");
  }

  const Variance& variance() const { return variance_; }
  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(variance_.size()); }
  std::size_t size() const { return data_.size(); }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }

  template <class... I>
  Scalar& operator()(I... idx) {
    return data_[flat(idx...)];
  }
  template <class... I>
  const Scalar& operator()(I... idx) const {
    return data_[flat(idx...)];
  }

  std::span<Scalar> components() { return data_; }
  std::span<const Scalar> components() const { return data_; }

  template <class... I>
  std::size_t flat(I... idx) const {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }

  /// Multi-index of a flat position.
  std::vector<int> unflat(std::size_t f) const {
    std::vector<int> idx(variance_.size());
    for (int s = rank() - 1; s >= 0; --s) {
      idx[s] = static_cast<int>(f % dim_);
      f /= dim_;
    }
    return idx;
  }

  static std::size_t count(std::size_t rank, int dim) {
    std::size_t c = 1;
    for (std::size_t r = 0; r < rank; ++r) c *= static_cast<std::size_t>(dim);
    return c;
  }

 private:
  Variance variance_;
  int dim_ = 0;
  std::vector<Scalar> data_;
};

using TensorValue = BasicTensor<double>;
using JetTensor = BasicTensor<Jet>;

inline void require_same_shape(const Variance& a, int da, const Variance& b, int db,
                               const char* what) {
  if (a != b || da != db)
    throw Error(ErrorKind::InvalidInput, std::string(what) + ": shape mismatch (" +
                                             variance_string(a) + " vs " + variance_string(b) + ")");
}

template <class S>
BasicTensor<S> operator+(BasicTensor<S> a, const BasicTensor<S>& b) {
  require_same_shape(a.variance(), a.dim(), b.variance(), b.dim(), "tensor sum");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

template <class S>
BasicTensor<S> operator-(BasicTensor<S> a, const BasicTensor<S>& b) {
  require_same_shape(a.variance(), a.dim(), b.variance(), b.dim(), "tensor difference");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

template <class S>
BasicTensor<S> operator*(double s, BasicTensor<S> a) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= s;
  return a;
}

inline double max_abs(const TensorValue& t) {
  double m = 0.0;
  for (double v : t.components()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const TensorValue& a, const TensorValue& b) {
  require_same_shape(a.variance(), a.dim(), b.variance(), b.dim(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Applies a dim x dim matrix (row-major) to one slot: T'_{..i..} = M[i][m] T_{..m..}.
template <class S, class M>
BasicTensor<S> transform_slot(const BasicTensor<S>& t, int slot, std::span<const M> matrix,
                              Slot new_kind) {
  const int n = t.dim();
  Variance v = t.variance();
  v[slot] = new_kind;
  std::size_t stride = 1;
  for (int s = t.rank() - 1; s > slot; --s) stride *= static_cast<std::size_t>(n);
  BasicTensor<S> out(v, n, std::vector<S>(t.components().begin(), t.components().end()));
  for (std::size_t f = 0; f < t.size(); ++f) {
    const int i = static_cast<int>((f / stride) % n);
    const std::size_t base = f - static_cast<std::size_t>(i) * stride;
    S acc = matrix[static_cast<std::size_t>(i) * n] * t[base];
    for (int m = 1; m < n; ++m)
      acc += matrix[static_cast<std::size_t>(i) * n + m] * t[base + static_cast<std::size_t>(m) * stride];
    out[f] = acc;
  }
  return out;
}

/// Lowers `slot` with the (0,2) metric g.
template <class S, class G>
BasicTensor<S> lower_index(const BasicTensor<S>& t, int slot, const BasicTensor<G>& g) {
  if (t.variance()[slot] != Slot::Upper) throw Error(ErrorKind::InvalidInput, "slot is not upper");
  return transform_slot(t, slot, g.components(), Slot::Lower);
}

/// Raises `slot` with the (2,0) inverse metric.
template <class S, class G>
BasicTensor<S> raise_index(const BasicTensor<S>& t, int slot, const BasicTensor<G>& g_inv) {
  if (t.variance()[slot] != Slot::Lower) throw Error(ErrorKind::InvalidInput, "slot is not lower");
  return transform_slot(t, slot, g_inv.components(), Slot::Upper);
}

// Dense square-matrix helpers over double or Jet, row-major.

template <class S>
S determinant(std::span<const S> a, int n) {
  std::vector<S> m(a.begin(), a.end());
  auto val = [](const S& s) {
    if constexpr (std::is_same_v<S, double>) return s;
    else return s.value();
  };
  S det = m[0] * 0.0 + 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(val(m[r * n + c])) > std::abs(val(m[piv * n + c]))) piv = r;
    if (val(m[piv * n + c]) == 0.0) return m[0] * 0.0;
    if (piv != c) {
      for (int k = 0; k < n; ++k) std::swap(m[c * n + k], m[piv * n + k]);
      det = -det;
    }
    det = det * m[c * n + c];
    for (int r = c + 1; r < n; ++r) {
      S f = m[r * n + c] / m[c * n + c];
      for (int k = c; k < n; ++k) m[r * n + k] -= f * m[c * n + k];
    }
  }
  return det;
}

template <class S>
std::vector<S> inverse(std::span<const S> a, int n) {
  auto val = [](const S& s) {
    if constexpr (std::is_same_v<S, double>) return s;
    else return s.value();
  };
  std::vector<S> m(a.begin(), a.end());
  std::vector<S> inv(static_cast<std::size_t>(n) * n, m[0] * 0.0);
  for (int i = 0; i < n; ++i) inv[i * n + i] += 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(val(m[r * n + c])) > std::abs(val(m[piv * n + c]))) piv = r;
    if (val(m[piv * n + c]) == 0.0) throw Error(ErrorKind::SingularMetric, "singular matrix");
    if (piv != c)
      for (int k = 0; k < n; ++k) {
        std::swap(m[c * n + k], m[piv * n + k]);
        std::swap(inv[c * n + k], inv[piv * n + k]);
      }
    S p = 1.0 / m[c * n + c];
    for (int k = 0; k < n; ++k) {
      m[c * n + k] = m[c * n + k] * p;
      inv[c * n + k] = inv[c * n + k] * p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      S f = m[r * n + c];
      for (int k = 0; k < n; ++k) {
        m[r * n + k] -= f * m[c * n + k];
        inv[r * n + k] -= f * inv[c * n + k];
      }
    }
  }
  return inv;
}

template <class S>
std::vector<S> matmul(std::span<const S> a, std::span<const S> b, int n) {
  std::vector<S> c(static_cast<std::size_t>(n) * n, a[0] * 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const S& aik = a[i * n + k];
      for (int j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
    }
  return c;
}

// Jet <-> value conversions.

/// Values of a jet tensor at the base point.
TensorValue value_of(const JetTensor& t);

/// Coordinate partials: appends one lower slot (the derivative index), one
/// jet order less.  Not a tensor in general; callers add connection terms.
JetTensor partial_derivative(const JetTensor& t);

/// Order-k coordinate partials as a plain array with k appended slots.
TensorValue partials_value(const JetTensor& t, int k);

JetTensor truncated(const JetTensor& t, int order);
int jet_order(const JetTensor& t);

/// Lifts a constant tensor into jets of the given layout.
JetTensor constant_jets(const TensorValue& t, int jet_dim, int order);

}  // namespace kahler
