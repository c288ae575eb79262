#pragma once

#include "kahler/tensor.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kahler {

struct ChartPoint {
  std::string chart;
  std::vector<double> x;
};

/// Closed-form map written once against jets: coordinates in, components out.
using JetMap = std::function<std::vector<Jet>(std::span<const Jet>)>;

/// Axis-aligned coordinate box.
struct Box {
  std::vector<double> lo, hi;

  bool contains(std::span<const double> x, double margin = 0.0) const;
  static Box cube(int dim, double half_width);
};

struct Transition {
  std::string target;
  JetMap map;
};

class Chart {
 public:
  Chart(std::string name, int dim, Box domain, std::vector<Transition> transitions = {});

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const Box& domain() const { return domain_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  void add_transition(Transition t) { transitions_.push_back(std::move(t)); }

  const Transition* transition_to(const std::string& target) const;
  /// Coordinates of x in the target chart (throws out-of-domain if unknown).
  std::vector<double> map_to(const std::string& target, std::span<const double> x) const;
  /// Real Jacobian d(target)/d(this) at x, row-major.
  std::vector<double> jacobian_to(const std::string& target, std::span<const double> x) const;

 private:
  std::string name_;
  int dim_;
  Box domain_;
  std::vector<Transition> transitions_;
};

using FieldEval = std::function<JetTensor(std::span<const double> x, int order)>;

/// A tensor field on one chart, evaluated as jets of a requested order.
class TensorField {
 public:
  TensorField() = default;
  TensorField(Variance variance, int dim, FieldEval eval)
      : variance_(std::move(variance)), dim_(dim), eval_(std::move(eval)) {}

  /// Field given by a closed-form jet expression in the chart coordinates.
  static TensorField closed_form(Variance variance, int dim, JetMap map);
  static TensorField constant(const TensorValue& value);

  const Variance& variance() const { return variance_; }
  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(variance_.size()); }
  explicit operator bool() const { return static_cast<bool>(eval_); }

  JetTensor jets(std::span<const double> x, int order) const;
  TensorValue value(std::span<const double> x) const { return value_of(jets(x, 0)); }

 private:
  Variance variance_;
  int dim_ = 0;
  FieldEval eval_;
};

/// Seeds the chart coordinates as independent jet variables.
std::vector<Jet> coordinate_jets(std::span<const double> x, int order);

/// Finite-difference jets (4th-order central stencils).  Cross-check backend
/// only; order 3 is rejected because of noise amplification.
JetTensor finite_difference_jets(const TensorField& field, std::span<const double> x, int order,
                                 double step = 1e-4);

/// Wraps a field so its jets come from the finite-difference backend.  Useful
/// for fields only available pointwise (e.g. transported solutions).
TensorField finite_difference_field(TensorField pointwise, double step = 1e-4);

}  // namespace kahler
