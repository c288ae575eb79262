#pragma once

#include "kahler/hproj.hpp"
#include "kahler/models.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace kahler {

/// Fiber vector (a, lambda, mu) of the extended system at one point.
struct ProlongedState {
  TensorValue a;       // (0,2), symmetric hermitian
  TensorValue lambda;  // (0,1)
  double mu = 0.0;

  int dim() const { return a.dim(); }
  /// Flat layout [a row-major, lambda, mu].
  Eigen::VectorXd to_vector() const;
  static ProlongedState from_vector(const Eigen::VectorXd& v, int dim);
  static ProlongedState trivial(const TensorValue& g, double B);
  ProlongedState operator+(const ProlongedState& o) const;
  friend ProlongedState operator*(double s, const ProlongedState& st);
  double max_abs() const;

  nlohmann::json to_json() const;
};

ProlongedState state_at(const HSolution& sol, const ChartPoint& x);

struct ExtendedResidual {
  TensorValue hpr;     // (0,3)
  TensorValue lambda;  // lambda_{i,j} - mu g_ij - B a_ij
  TensorValue mu;      // mu_{,i} - 2B lambda_i

  double max_abs() const;
};

ExtendedResidual extended_residual(const TensorField& g, const TensorField& J, double B,
                                   const HSolution& sol, const ChartPoint& x);

struct BFit {
  double B = 0.0;
  double residual = 0.0;
};

/// Least-squares B in the trace-free relation between nabla lambda and a.
BFit estimate_B(const TensorField& g, const TensorField& J, const HSolution& sol, const ChartPoint& x);

/// a_ia R^a_jkl + a_ja R^a_ikl - B Jten(a_la g_bk + a_lb g_ak - a_ka g_bl - a_kb g_al).
TensorValue curvature_B_condition(const TensorField& g, const TensorField& J, double B,
                                  const TensorField& a, const ChartPoint& x);
TensorValue curvature_B_condition(const TensorValue& R, const TensorValue& g, const TensorValue& J,
                                  double B, const TensorValue& a);

/// Algebraic curvature tensor of constant holomorphic sectional curvature 1.
TensorValue constant_curvature_tensor(const TensorValue& g, const TensorValue& J);
TensorValue constant_curvature_tensor(const TensorField& g, const TensorField& J, const ChartPoint& x);

/// A parametrised curve on one chart, t in [0, 1].
struct Path {
  std::string chart;
  std::function<std::vector<double>(double)> position;
  std::function<std::vector<double>(double)> velocity;
  double length = 0.0;
  /// Parameter values where the velocity jumps (RK4 steps must land on them).
  std::vector<double> corners;
};

Path segment_path(const std::string& chart, std::vector<double> from, std::vector<double> to);
/// Piecewise-linear path through the vertices at constant speed.
Path polyline_path(const std::string& chart, std::vector<std::vector<double>> vertices);
/// Rectangle base -> base + s e_i -> base + s e_i + s e_j -> base + s e_j -> base.
Path rectangle_loop(const std::string& chart, std::vector<double> base, int i, int j, double side);
/// base + r (sin(2 pi t) u + (1 - cos(2 pi t)) w).
Path smooth_loop(const std::string& chart, std::vector<double> base, std::vector<double> u,
                 std::vector<double> w, double r);

struct TransportOptions {
  double step = 1e-3;
  double halving_tol = 1e-8;  // state change per unit length
  int max_halvings = 6;
};

struct TransportStats {
  double step = 0.0;
  int halvings = 0;
  double change = 0.0;           // last h vs h/2 difference per unit length
  double hermitian_drift = 0.0;  // largest defect removed by the projection
  bool converged = true;
};

/// Transports the columns of `states` (flat layout) along the path.  The
/// system is linear, so one sweep serves any number of initial states.
Eigen::MatrixXd transport_states(const TensorField& g, const TensorField& J, double B, const Path& path,
                                 const Eigen::MatrixXd& states, const TransportOptions& opt = {},
                                 TransportStats* stats = nullptr, const Box* domain = nullptr);

ProlongedState transport(const TensorField& g, const TensorField& J, double B, const Path& path,
                         const ProlongedState& state0, const TransportOptions& opt = {},
                         TransportStats* stats = nullptr);

/// Same, checking that the path stays inside the chart domain.
ProlongedState transport(const KahlerModel& model, double B, const Path& path,
                         const ProlongedState& state0, const TransportOptions& opt = {},
                         TransportStats* stats = nullptr);

/// Orthonormal (Frobenius) basis of the n^2-dimensional space of symmetric
/// J-hermitian forms, followed by lambda and mu: columns embed fiber
/// coordinates into the flat state layout.
Eigen::MatrixXd fiber_basis(const TensorValue& J);

struct MobilityConfig {
  int sample_points = 6;
  double loop_side = 0.3;
  int random_loops = 4;
  int loops_per_batch = 4;
  int max_planes = -1;  // -1: every coordinate plane
  bool lattice_loops = true;
  double rank_tol = 1e-8;
  double row_floor = 1e-9;
  std::uint64_t seed = 1;
  TransportOptions transport;

  static MobilityConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct MobilityReport {
  double B = 0.0;
  int dimension = 0;
  int fiber_dimension = 0;
  ChartPoint base;
  std::vector<ProlongedState> basis;
  std::vector<int> constraint_history;
  std::vector<std::string> batch_labels;
  std::vector<double> singular_values;
  double gap = 0.0;  // sigma_{rank-1} / sigma_rank, infinite when either side is empty
  bool converged = true;
  std::vector<std::string> warnings;
  std::vector<double> swept_B;
  std::vector<int> swept_dimension;

  nlohmann::json to_json() const;
};

/// Local mobility estimate at base for a fixed B.
MobilityReport degree_of_mobility(const KahlerModel& model, double B, const ChartPoint& base,
                                  const MobilityConfig& config = {});

/// Runs the candidate B values, keeps the largest kernel, refines B by least
/// squares on the curvature condition and re-runs when the refinement moves it.
MobilityReport degree_of_mobility_sweep(const KahlerModel& model, const ChartPoint& base,
                                        const MobilityConfig& config = {},
                                        std::vector<double> candidates = {0.0, 1.0, -1.0, 0.25, -0.25});

/// Lattice displacement vectors of a torus (or a product containing tori).
std::vector<std::vector<double>> lattice_vectors(const KahlerModel& model);

struct KernelCheck {
  double hpr = 0.0;
  double extended = 0.0;
  double path_independence = 0.0;
};

/// Residuals of the kernel states of a report, extended to fresh points by
/// transport along straight segments and differentiated by central differences.
KernelCheck check_kernel(const KahlerModel& model, const MobilityReport& report,
                         std::span<const ChartPoint> points, double fd_step = 1e-3,
                         const TransportOptions& opt = {});

/// f_{,ijk} - kappa(2 f_k g_ij + f_i g_jk + f_j g_ik - fbar_i J_jk - fbar_j J_ik).
TensorValue tanno_residual(const TensorField& g, const TensorField& J, const TensorField& f, double kappa,
                           const ChartPoint& x);

/// a = (1/kappa) nabla^2 f - 2 f g, lambda = df, mu = 2 kappa f.
HSolution tanno_to_extended(const TensorField& g, const TensorField& J, const TensorField& f, double kappa);

/// Distance of tanno_to_extended(lambda_scalar) from sol after removing the (g, 0, -B) direction.
double tanno_round_trip_defect(const TensorField& g, const TensorField& J, const HSolution& sol, double B,
                               const ChartPoint& x);

/// g^{ij} lambda_{,ijk} - 4B(n+1) lambda_k.
TensorValue laplace_identity_residual(const TensorField& g, const TensorField& J, double B,
                                      const TensorField& lambda_scalar, const ChartPoint& x);

/// (positive, negative) eigenvalue counts of g(x).
std::pair<int, int> signature(const TensorField& g, const ChartPoint& x);
std::pair<int, int> signature(const TensorValue& g);

}  // namespace kahler
