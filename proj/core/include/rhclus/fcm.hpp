#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "rhclus/engine.hpp"
#include "rhclus/ingest.hpp"
#include "rhclus/matrix.hpp"
#include "rhclus/points.hpp"

namespace rhclus::fcm {

enum class StopRule {
  membership,  // max |U_t - U_{t-1}| < epsilon
  centroids,   // max |V_t - V_{t-1}| < epsilon
};

struct Config {
  std::size_t clusters = 2;
  double m = 2.0;
  double epsilon = 1e-5;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
  StopRule stop_rule = StopRule::membership;
  /// Run exactly max_iters iterations regardless of convergence.
  bool fixed_iterations = false;
  /// Compute J_m each iteration (one extra pass over the data).
  bool track_objective = true;
};

/// Throws UsageError unless m > 1, epsilon > 0, max_iters >= 1, clusters >= 2.
void validate(const Config& config);

/// Distances below this count as coincidence with a centroid.
inline constexpr double kCoincidence = 1e-12;
/// Clusters whose membership mass falls below this are re-seeded.
inline constexpr double kEmptyCluster = 1e-12;

/// n x c, rows sum to 1.
using MembershipMatrix = Matrix;
/// c x d prototypes.
using Centroids = Matrix;

/// Draws c distinct points by sampling rows without replacement. Throws
/// NumericError when fewer than c distinct points exist.
Centroids init_centroids(const PointSource& points, std::size_t clusters, std::uint64_t seed);

/// u_i = 1 / sum_j (|x - v_i| / |x - v_j|)^(2/(m-1)). When x coincides with
/// one or more centroids the unit mass is split equally among them.
void membership_row(std::span<const double> x, const Centroids& centroids, double m,
                    std::span<double> out);

/// Job 1: each map task projects its block and emits its membership
/// sub-matrix keyed by partition index; reduce merges the sub-matrices in
/// partition order.
MembershipMatrix job1_membership(const ingest::PartitionedStore& store, const PointSource& points,
                                 const Centroids& centroids, double m,
                                 const engine::JobSpec& spec,
                                 const engine::EngineOptions& options = {},
                                 engine::JobMetrics* metrics = nullptr);

/// Job 2: each map task emits per-cluster partial sums of u^m x and u^m;
/// reduce adds the partials in partition order and divides. An empty cluster
/// is moved to the point with the lowest maximum membership.
Centroids job2_centroids(const ingest::PartitionedStore& store, const PointSource& points,
                         const MembershipMatrix& memberships, double m,
                         const engine::JobSpec& spec, const engine::EngineOptions& options = {},
                         engine::JobMetrics* metrics = nullptr);

/// J_m = sum_i sum_k u_ik^m |x_k - v_i|^2, computed as a map-reduce pass.
double objective(const ingest::PartitionedStore& store, const PointSource& points,
                 const MembershipMatrix& memberships, const Centroids& centroids, double m,
                 const engine::JobSpec& spec, const engine::EngineOptions& options = {},
                 engine::JobMetrics* metrics = nullptr);

/// Single-node J_m over every row of `points`.
double objective(const MembershipMatrix& memberships, const Centroids& centroids,
                 const PointSource& points, double m);

struct Result {
  MembershipMatrix memberships;
  Centroids centroids;
  std::vector<double> objective_trace;  // J_m(U_t, V_t), one per iteration
  std::vector<double> delta_trace;      // stop-rule change, +inf on the first iteration
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<engine::JobMetrics> job_metrics;
};

/// Alternates Job 1 and Job 2 from seeded initial centroids until the stop
/// rule fires or max_iters is reached.
Result run_fcm(const ingest::PartitionedStore& store, const PointSource& points,
               const Config& config, const engine::JobSpec& spec,
               const engine::EngineOptions& options = {});

void write_matrix_csv(std::ostream& out, const Matrix& matrix);
/// `iter,jm,max_delta_u` header then one row per iteration.
void write_trace_csv(std::ostream& out, const Result& result);

}  // namespace rhclus::fcm
