#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "rhclus/engine.hpp"
#include "rhclus/ingest.hpp"

namespace rhclus::mca {

/// Occurrence count of every category plus the column layout needed to read
/// records. Column masses are counts / (n * Q).
struct CategoryMargins {
  std::vector<std::uint64_t> counts;      // length J
  std::vector<std::size_t> column_offsets;  // length Q + 1
  std::uint64_t num_rows = 0;

  std::size_t num_columns() const noexcept {
    return column_offsets.empty() ? 0 : column_offsets.size() - 1;
  }
  std::size_t num_categories() const noexcept { return counts.size(); }
  double mass(std::size_t category) const;
};

/// J x J co-occurrence counts (Z^T Z for the indicator matrix Z).
struct BurtMatrix {
  std::size_t size = 0;
  std::vector<std::uint64_t> counts;  // row-major

  std::uint64_t operator()(std::size_t a, std::size_t b) const { return counts[a * size + b]; }
  bool operator==(const BurtMatrix&) const = default;
};

struct BurtStatistics {
  CategoryMargins margins;
  BurtMatrix burt;
  engine::JobMetrics metrics;
};

/// Map emits per-partition partial Burt rows, reduce sums them per row.
/// Counts are exact, so the result does not depend on the partitioning.
BurtStatistics accumulate_burt(const ingest::CategoricalDataset& dataset,
                               const ingest::PartitionedStore& store, const engine::JobSpec& spec,
                               const engine::EngineOptions& options = {});

struct Axis {
  double eigenvalue = 0.0;
  std::vector<double> loadings;  // unit eigenvector, length J
};

struct FitOptions {
  /// Upper bound on retained axes.
  std::size_t max_dims = 8;
  /// Axes need eigenvalue > 1/Q + retention_slack. The slack keeps exactly
  /// degenerate designs (all eigenvalues at 1/Q) from retaining rounding noise.
  double retention_slack = 1e-10;
};

/// Fitted model: eigen-decomposition of the standardized residual cross
/// product M = D_c^{-1/2} (B / (n Q^2) - c c^T) D_c^{-1/2}, plus the
/// precomputed per-category projection table.
class Model {
 public:
  Model() = default;
  Model(CategoryMargins margins, std::vector<double> eigenvalues, std::vector<Axis> axes);

  const CategoryMargins& margins() const noexcept { return margins_; }
  /// Every eigenvalue of M, descending (includes the trivial zero).
  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
  const std::vector<Axis>& axes() const noexcept { return axes_; }
  std::size_t dims() const noexcept { return axes_.size(); }
  /// Trace of M, equal to J/Q - 1.
  double total_inertia() const noexcept { return total_inertia_; }

  /// Row principal coordinates of one record (per-column category indices).
  /// Depends only on the record and the model. Throws SchemaError on an
  /// out-of-range index.
  void project(std::span<const std::uint32_t> record, std::span<double> out) const;
  std::vector<double> project(std::span<const std::uint32_t> record) const;

 private:
  CategoryMargins margins_;
  std::vector<double> eigenvalues_;
  std::vector<Axis> axes_;
  double total_inertia_ = 0.0;
  // coordinate_s = constant_s + sum over the record's categories j of table[j][s]
  std::vector<double> table_;
  std::vector<double> constants_;
};

/// Throws NumericError on zero column mass, margins inconsistent with the
/// Burt diagonal, or eigenvalues outside [0, 1] beyond 1e-10.
Model fit_mca(const CategoryMargins& margins, const BurtMatrix& burt,
              const FitOptions& options = {});

/// `axis_index,eigenvalue,inertia_fraction`, one line per retained axis.
void write_axes(std::ostream& out, const Model& model);
/// J lines of d comma-separated loadings.
void write_loadings(std::ostream& out, const Model& model);

}  // namespace rhclus::mca
