#include "rhclus/validity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhclus/errors.hpp"
#include "rhclus/text_format.hpp"

namespace rhclus::validity {

namespace {

double min_centroid_separation(const Matrix& centroids) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.rows(); ++i) {
    for (std::size_t j = i + 1; j < centroids.rows(); ++j) {
      best = std::min(best, squared_distance(centroids.row(i), centroids.row(j)));
    }
  }
  return best;
}

// sum_k sum_i u_ik^power |x_k - v_i|^2
double weighted_dispersion(const Matrix& memberships, const Matrix& centroids,
                           const PointSource& points, double power) {
  if (memberships.rows() != points.num_rows() || memberships.cols() != centroids.rows()) {
    throw UsageError("memberships, centroids and points disagree in shape");
  }
  std::vector<double> x(points.dims());
  double total = 0.0;
  for (std::size_t k = 0; k < points.num_rows(); ++k) {
    points.point(k, x);
    for (std::size_t i = 0; i < centroids.rows(); ++i) {
      const double u = memberships(k, i);
      const double w = power == 2.0 ? u * u : std::pow(u, power);
      total += w * squared_distance(x, centroids.row(i));
    }
  }
  return total;
}

constexpr double kCoincident = 1e-12 * 1e-12;

}  // namespace

double partition_coefficient(const Matrix& memberships) {
  double total = 0.0;
  for (const double u : memberships.values()) total += u * u;
  return total / static_cast<double>(memberships.rows());
}

double partition_entropy(const Matrix& memberships) {
  double total = 0.0;
  for (const double u : memberships.values()) {
    if (u > 0.0) total -= u * std::log(u);
  }
  return total / static_cast<double>(memberships.rows());
}

double xie_beni(const Matrix& memberships, const Matrix& centroids, const PointSource& points) {
  const double separation = min_centroid_separation(centroids);
  if (separation < kCoincident) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(points.num_rows());
  return weighted_dispersion(memberships, centroids, points, 2.0) / (n * separation);
}

double separation_compactness(const Matrix& memberships, const Matrix& centroids,
                              const PointSource& points, double m) {
  const double separation = min_centroid_separation(centroids);
  if (separation < kCoincident) return 0.0;
  const double n = static_cast<double>(points.num_rows());
  const double compactness = weighted_dispersion(memberships, centroids, points, m) / n;
  if (compactness <= 0.0) return 0.0;
  return separation / compactness;
}

bool separation_compactness_degenerate(const Matrix& memberships, const Matrix& centroids,
                                       const PointSource& points, double m) {
  return min_centroid_separation(centroids) < kCoincident ||
         weighted_dispersion(memberships, centroids, points, m) <= 0.0;
}

std::string_view index_name(Index index) {
  switch (index) {
    case Index::pc: return "pc";
    case Index::pe: return "pe";
    case Index::xb: return "xb";
    case Index::sc: return "sc";
  }
  return "?";
}

bool larger_is_better(Index index) { return index == Index::pc || index == Index::sc; }

double ValidityRow::value(Index index) const {
  switch (index) {
    case Index::pc: return pc;
    case Index::pe: return pe;
    case Index::xb: return xb;
    case Index::sc: return sc;
  }
  return 0.0;
}

std::size_t ValidityReport::consensus_votes() const {
  return static_cast<std::size_t>(
      std::count(best_per_index.begin(), best_per_index.end(), consensus_c));
}

void select_optimum(ValidityReport& report) {
  report.best_per_index.fill(0);
  report.consensus_c = 0;

  const ValidityRow* xb_of_best = nullptr;
  for (const Index index : kAllIndices) {
    const ValidityRow* best = nullptr;
    for (const auto& row : report.rows) {
      if (row.failed) continue;
      const double value = row.value(index);
      if (!best) {
        best = &row;
        continue;
      }
      const double incumbent = best->value(index);
      // Strict comparison: on equal values the smaller c wins.
      if (larger_is_better(index) ? value > incumbent : value < incumbent) best = &row;
    }
    if (best) report.best_per_index[static_cast<std::size_t>(index)] = best->clusters;
  }

  std::size_t top_votes = 0;
  for (const auto& row : report.rows) {
    if (row.failed) continue;
    const auto votes = static_cast<std::size_t>(std::count(
        report.best_per_index.begin(), report.best_per_index.end(), row.clusters));
    if (votes == 0) continue;
    const bool wins = votes > top_votes || (votes == top_votes && row.xb < xb_of_best->xb);
    if (wins) {
      top_votes = votes;
      xb_of_best = &row;
    }
  }
  if (xb_of_best) report.consensus_c = xb_of_best->clusters;
}

ValidityReport sweep(const ingest::PartitionedStore& store, const PointSource& points,
                     std::size_t c_min, std::size_t c_max, const fcm::Config& config,
                     const engine::JobSpec& spec, const engine::EngineOptions& options) {
  if (c_min < 2 || c_min > c_max) throw UsageError("sweep needs 2 <= c_min <= c_max");
  if (c_max > points.num_rows() / 2) {
    throw UsageError("c_max must not exceed n/2 (" + std::to_string(points.num_rows() / 2) + ")");
  }

  ValidityReport report;
  for (std::size_t c = c_min; c <= c_max; ++c) {
    ValidityRow row;
    row.clusters = c;
    try {
      fcm::Config run = config;
      run.clusters = c;
      run.seed = config.seed + c;
      const fcm::Result result = fcm::run_fcm(store, points, run, spec, options);
      row.pc = partition_coefficient(result.memberships);
      row.pe = partition_entropy(result.memberships);
      row.xb = xie_beni(result.memberships, result.centroids, points);
      row.sc = separation_compactness(result.memberships, result.centroids, points, run.m);
      row.iterations = result.iterations;
      row.converged = result.converged;
      row.jm = result.objective_trace.empty()
                   ? fcm::objective(result.memberships, result.centroids, points, run.m)
                   : result.objective_trace.back();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::usage) throw;
      row.failed = true;
      row.failure = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  select_optimum(report);
  return report;
}

void write_validity_csv(std::ostream& out, const ValidityReport& report) {
  out << "c,pc,pe,xb,sc,iters,jm\n";
  for (const auto& row : report.rows) {
    if (row.failed) {
      out << "# c=" << row.clusters << " failed: " << row.failure << '\n';
      continue;
    }
    out << row.clusters << ',' << format_double(row.pc) << ',' << format_double(row.pe) << ','
        << format_double(row.xb) << ',' << format_double(row.sc) << ',' << row.iterations << ','
        << format_double(row.jm) << '\n';
  }
  out << "# consensus_c=" << report.consensus_c;
  for (const Index index : kAllIndices) {
    out << ' ' << index_name(index) << '=' << report.best(index);
  }
  out << '\n';
}

void write_plot_data(std::ostream& out, const ValidityReport& report) {
  bool first = true;
  for (const Index index : kAllIndices) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& row : report.rows) {
      const double v = row.value(index);
      if (row.failed || !std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!first) out << "\n\n";
    first = false;
    out << "# " << index_name(index) << " (normalized)\n# c value\n";
    for (const auto& row : report.rows) {
      const double v = row.value(index);
      if (row.failed || !std::isfinite(v)) continue;
      const double scaled = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      out << row.clusters << ' ' << format_double(scaled) << '\n';
    }
  }
}

}  // namespace rhclus::validity
