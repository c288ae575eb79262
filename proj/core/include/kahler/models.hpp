#pragma once

#include "kahler/field.hpp"
#include "kahler/geometry.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <complex>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace kahler {

enum class ModelKind { Flat, FubiniStudy, Pullback, Product, FlatTorus };

std::string_view to_string(ModelKind kind);

using ComplexMatrix = Eigen::MatrixXcd;

struct ModelChart {
  Chart chart;
  JetMap metric_map;  // chart coordinates -> row-major g_ij
  TensorValue J;      // constant complex structure in this chart
  TensorField metric;
  TensorField complex_structure;
  Box sample_box;
};

class KahlerModel {
 public:
  ModelKind kind = ModelKind::Flat;
  int n = 0;  // complex dimension
  std::vector<ModelChart> charts;
  int primary = 0;

  // Kind-specific data.
  std::vector<double> signs;    // Flat
  ComplexMatrix A;              // FubiniStudy (identity) and Pullback
  std::vector<double> periods;  // FlatTorus, one per real coordinate
  std::vector<KahlerModel> factors;
  std::vector<double> weights;  // Product

  int dim() const { return 2 * n; }
  const ModelChart& chart(int index) const { return charts.at(index); }
  const ModelChart& chart(const std::string& name) const;
  int chart_index(const std::string& name) const;
  const ModelChart& primary_chart() const { return charts.at(primary); }

  const TensorField& metric(const std::string& chart_name) const { return chart(chart_name).metric; }
  const TensorField& complex_structure(const std::string& chart_name) const {
    return chart(chart_name).complex_structure;
  }

  /// Uniform samples in the chart's sample box, deterministic for a given engine state.
  std::vector<ChartPoint> sample_points(std::mt19937_64& rng, int count, int chart_index = -1) const;

  /// Moves p to the chart in which it sits deepest inside the domain box.
  ChartPoint recenter(const ChartPoint& p) const;

  /// Whether p lies in its chart's domain shrunk by `margin`.
  bool inside(const ChartPoint& p, double margin = 0.0) const;

  nlohmann::json descriptor() const;
};

/// Flat C^n; signs (one per complex coordinate, default all +1) give pseudo-Riemannian blocks.
KahlerModel flat(int n, std::vector<double> signs = {});

/// Fubini-Study on CP(n), holomorphic sectional curvature 1, all n+1 affine charts.
KahlerModel fubini_study(int n, int chart_index = 0);

/// Pullback of Fubini-Study by the projective map of an invertible A.
KahlerModel pullback_fs(const ComplexMatrix& A, int chart_index = 0);

/// Block-diagonal sum of c_i g_i over the primary charts of the factors.
KahlerModel product_model(std::vector<KahlerModel> factors, std::vector<double> weights);

/// Flat metric on R^{2n} with a rectangular period lattice (one period per real
/// coordinate, or a single value for all).
KahlerModel flat_torus(int n, std::vector<double> periods);

KahlerModel model_from_json(const nlohmann::json& j);

/// Standard complex structure: J d/dx_k = d/dy_k in (x1, y1, x2, y2, ...) ordering.
TensorValue standard_complex_structure(int n);

/// Chart name of the k-th affine chart of CP(n).
std::string affine_chart_name(int k);

/// Homogeneous coordinates (1 at the chart slot) of a point of an affine chart.
Eigen::VectorXcd homogeneous_lift(const ChartPoint& p);

/// Affine coordinates of a nonzero homogeneous vector in chart k.
std::vector<double> affine_coordinates(const Eigen::VectorXcd& Z, int chart);

/// Projective map [Z] -> [AZ] written from chart `from` to chart `to`.
JetMap projective_map(const ComplexMatrix& A, int from, int to);

/// Vector field on chart k generated by the one-parameter group exp(tX).
TensorField projective_vector_field(const ComplexMatrix& X, int chart);

/// Affine-chart metric 4 dd^c log(Z* M Z) for a hermitian positive M.
JetMap hermitian_potential_metric(const ComplexMatrix& M, int chart);

ComplexMatrix complex_matrix_from_json(const nlohmann::json& j);
nlohmann::json complex_matrix_to_json(const ComplexMatrix& A);

}  // namespace kahler
