#pragma once

#include <boost/container/small_vector.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kahler {

/// Monomial bookkeeping for truncated Taylor polynomials in `dim` variables up
/// to total degree `order`.  Monomials are enumerated degree by degree, so the
/// layout of a lower order is always a prefix of a higher one.
class JetLayout {
 public:
  struct Product {
    std::uint32_t lhs, rhs, out;
  };
  struct DerivativeTerm {
    std::uint32_t src, dst;
    double factor;
  };

  static constexpr int kMaxOrder = 4;

  /// Layouts are interned; the returned reference lives for the program.
  static const JetLayout& get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return size_; }
  std::size_t size_up_to(int degree) const { return degree_offsets_[degree + 1]; }

  std::span<const std::uint8_t> exponents(std::size_t index) const {
    return {exponents_.data() + index * dim_, static_cast<std::size_t>(dim_)};
  }
  int degree(std::size_t index) const;
  std::size_t index_of(std::span<const std::uint8_t> exps) const;

  /// All (lhs, rhs) coefficient pairs whose product stays within `order`.
  std::span<const Product> products() const { return products_; }
  /// Terms of d/dx_k mapping this layout onto the layout of order - 1.
  std::span<const DerivativeTerm> derivative(int k) const { return derivatives_[k]; }

 private:
  JetLayout(int dim, int order);

  int dim_;
  int order_;
  std::size_t size_;
  std::vector<std::size_t> degree_offsets_;
  std::vector<std::uint8_t> exponents_;
  std::vector<Product> products_;
  std::vector<std::vector<DerivativeTerm>> derivatives_;
};

/// Forward-mode jet: a truncated multivariate Taylor polynomial around a
/// base point.  Arithmetic propagates all partial derivatives up to the
/// layout order exactly (up to rounding).
class Jet {
 public:
  using Storage = boost::container::small_vector<double, 16>;

  Jet() = default;

  static Jet constant(int dim, int order, double value);
  static Jet variable(int dim, int order, int index, double at);
  /// Builds a jet from Taylor coefficients in layout order.
  static Jet from_coefficients(int dim, int order, std::span<const double> coeffs);

  bool valid() const { return layout_ != nullptr; }
  int dim() const { return layout_->dim(); }
  int order() const { return layout_->order(); }
  const JetLayout& layout() const { return *layout_; }

  double value() const { return coeffs_[0]; }
  std::span<const double> coefficients() const { return {coeffs_.data(), coeffs_.size()}; }

  /// Partial derivative value d^|alpha| f / dx^alpha at the base point.
  double partial(std::span<const std::uint8_t> alpha) const;
  double partial(int i) const;
  double partial(int i, int j) const;
  double partial(int i, int j, int k) const;

  /// d/dx_k as a jet of one order less.
  Jet derivative(int k) const;
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double s) { coeffs_[0] += s; return *this; }
  Jet& operator-=(double s) { coeffs_[0] -= s; return *this; }
  Jet& operator*=(double s);
  Jet& operator/=(double s) { return *this *= (1.0 / s); }

  friend Jet operator-(Jet a);
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator/(double s, const Jet& a);

  /// Applies f(u0 + h) = sum_k taylor[k] h^k, with taylor[k] = f^(k)(u0)/k!.
  Jet compose(std::span<const double> taylor) const;

 private:
  Jet(const JetLayout* layout, Storage coeffs) : layout_(layout), coeffs_(std::move(coeffs)) {}
  static const JetLayout* common(const Jet& a, const Jet& b);

  const JetLayout* layout_ = nullptr;
  Storage coeffs_;
};

Jet reciprocal(const Jet& u);
Jet pow(const Jet& u, double p);
Jet sqrt(const Jet& u);
Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);

}  // namespace kahler
