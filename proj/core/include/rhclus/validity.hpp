#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rhclus/engine.hpp"
#include "rhclus/fcm.hpp"
#include "rhclus/ingest.hpp"
#include "rhclus/matrix.hpp"
#include "rhclus/points.hpp"

namespace rhclus::validity {

/// Bezdek's partition coefficient, (1/n) sum u^2. Larger is better.
double partition_coefficient(const Matrix& memberships);

/// Bezdek's partition entropy with natural log and 0 ln 0 = 0. Smaller is better.
double partition_entropy(const Matrix& memberships);

/// Xie-Beni: sum u^2 |x - v|^2 / (n * min_{i != j} |v_i - v_j|^2). Smaller is
/// better. +inf when two centroids are closer than 1e-12.
double xie_beni(const Matrix& memberships, const Matrix& centroids, const PointSource& points);

/// Separation over compactness:
///   min_{i != j} |v_i - v_j|^2 / ((1/n) sum u^m |x - v|^2).
/// Larger is better. Returns 0 when centroids coincide, and also 0 (flagged by
/// separation_compactness_degenerate) when the compactness term vanishes.
double separation_compactness(const Matrix& memberships, const Matrix& centroids,
                              const PointSource& points, double m);
bool separation_compactness_degenerate(const Matrix& memberships, const Matrix& centroids,
                                       const PointSource& points, double m);

enum class Index { pc, pe, xb, sc };
inline constexpr std::array<Index, 4> kAllIndices = {Index::pc, Index::pe, Index::xb, Index::sc};
std::string_view index_name(Index index);
bool larger_is_better(Index index);

struct ValidityRow {
  std::size_t clusters = 0;
  double pc = 0.0;
  double pe = 0.0;
  double xb = 0.0;
  double sc = 0.0;
  std::size_t iterations = 0;
  double jm = 0.0;
  bool converged = false;
  bool failed = false;
  std::string failure;

  double value(Index index) const;
};

struct ValidityReport {
  std::vector<ValidityRow> rows;
  /// Best c per index, in kAllIndices order; 0 when every row failed.
  std::array<std::size_t, 4> best_per_index{};
  std::size_t consensus_c = 0;

  std::size_t best(Index index) const { return best_per_index[static_cast<std::size_t>(index)]; }
  /// How many indices chose consensus_c.
  std::size_t consensus_votes() const;
};

/// Fills best_per_index and consensus_c from `rows`: majority vote over the
/// four indices, ties broken by the smallest XB. Failed rows do not vote.
void select_optimum(ValidityReport& report);

/// Runs FCM for every c in [c_min, c_max] (seed = config.seed + c) and scores
/// the result. A failing c is recorded and excluded from the vote.
ValidityReport sweep(const ingest::PartitionedStore& store, const PointSource& points,
                     std::size_t c_min, std::size_t c_max, const fcm::Config& config,
                     const engine::JobSpec& spec, const engine::EngineOptions& options = {});

/// `c,pc,pe,xb,sc,iters,jm` header, one row per c, consensus as a trailing
/// comment line.
void write_validity_csv(std::ostream& out, const ValidityReport& report);

/// gnuplot data: one block per index (separated by two blank lines, select
/// with `index N`), values min-max normalized to [0, 1] within each index.
void write_plot_data(std::ostream& out, const ValidityReport& report);

}  // namespace rhclus::validity
