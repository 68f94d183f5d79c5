#include "rhclus/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rhclus/errors.hpp"
#include "rhclus/random.hpp"
#include "rhclus/text_format.hpp"

namespace rhclus::fcm {

namespace {

inline double weight(double u, double m) { return m == 2.0 ? u * u : std::pow(u, m); }

void check_alignment(const ingest::PartitionedStore& store, const PointSource& points) {
  if (store.num_rows() != points.num_rows()) {
    throw UsageError("store covers " + std::to_string(store.num_rows()) + " rows, points has " +
                     std::to_string(points.num_rows()));
  }
}

// Low-membership rows collected by Job 2's map tasks for empty-cluster rescue.
struct Candidate {
  double max_membership;
  double row;
  std::vector<double> point;
};

void offer(std::vector<Candidate>& best, std::size_t limit, Candidate cand) {
  auto before = [](const Candidate& a, const Candidate& b) {
    return a.max_membership != b.max_membership ? a.max_membership < b.max_membership
                                                : a.row < b.row;
  };
  if (best.size() == limit && !before(cand, best.back())) return;
  best.insert(std::upper_bound(best.begin(), best.end(), cand, before), std::move(cand));
  if (best.size() > limit) best.pop_back();
}

std::string pack_candidates(const std::vector<Candidate>& cands, std::size_t dims) {
  std::vector<double> flat;
  flat.reserve(cands.size() * (dims + 2));
  for (const auto& c : cands) {
    flat.push_back(c.max_membership);
    flat.push_back(c.row);
    flat.insert(flat.end(), c.point.begin(), c.point.end());
  }
  return engine::pack_doubles(flat);
}

std::vector<Candidate> unpack_candidates(std::string_view bytes, std::size_t dims) {
  const auto flat = engine::unpack_doubles(bytes);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i + dims + 2 <= flat.size(); i += dims + 2) {
    out.push_back({flat[i], flat[i + 1],
                   std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i + 2),
                                       flat.begin() + static_cast<std::ptrdiff_t>(i + 2 + dims))});
  }
  return out;
}

double max_abs_difference(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

void validate(const Config& config) {
  if (!(config.m > 1.0)) throw UsageError("fuzziness m must be > 1");
  if (!(config.epsilon > 0.0)) throw UsageError("epsilon must be > 0");
  if (config.max_iters < 1) throw UsageError("max_iters must be >= 1");
  if (config.clusters < 2) throw UsageError("cluster count must be >= 2");
}

Centroids init_centroids(const PointSource& points, std::size_t clusters, std::uint64_t seed) {
  const std::size_t n = points.num_rows();
  const std::size_t d = points.dims();
  if (clusters == 0) throw UsageError("cluster count must be >= 1");

  Centroids chosen(clusters, d);
  std::size_t found = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::vector<double> candidate(d);
  // Lazy Fisher-Yates: position i receives a uniformly drawn remaining row.
  for (std::size_t i = 0; i < n && found < clusters; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(order[i], order[j]);
    points.point(order[i], candidate);
    bool duplicate = false;
    for (std::size_t k = 0; k < found && !duplicate; ++k) {
      duplicate = std::equal(candidate.begin(), candidate.end(), chosen.row(k).begin());
    }
    if (duplicate) continue;
    std::copy(candidate.begin(), candidate.end(), chosen.row(found).begin());
    ++found;
  }
  if (found < clusters) {
    throw NumericError("only " + std::to_string(found) + " distinct points, cannot seed " +
                       std::to_string(clusters) + " clusters");
  }
  return chosen;
}

void membership_row(std::span<const double> x, const Centroids& centroids, double m,
                    std::span<double> out) {
  const std::size_t c = centroids.rows();
  constexpr double coincident = kCoincidence * kCoincidence;
  std::size_t hits = 0;
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c; ++i) {
    out[i] = squared_distance(x, centroids.row(i));
    if (out[i] < coincident) ++hits;
    nearest = std::min(nearest, out[i]);
  }
  if (hits > 0) {
    const double share = 1.0 / static_cast<double>(hits);
    for (std::size_t i = 0; i < c; ++i) out[i] = out[i] < coincident ? share : 0.0;
    return;
  }
  // (d_min^2 / d_i^2)^(1/(m-1)) stays in (0, 1], avoiding overflow as m -> 1.
  const double exponent = 1.0 / (m - 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    const double ratio = nearest / out[i];
    out[i] = m == 2.0 ? ratio : std::pow(ratio, exponent);
    total += out[i];
  }
  for (std::size_t i = 0; i < c; ++i) out[i] /= total;
}

MembershipMatrix job1_membership(const ingest::PartitionedStore& store, const PointSource& points,
                                 const Centroids& centroids, double m,
                                 const engine::JobSpec& spec, const engine::EngineOptions& options,
                                 engine::JobMetrics* metrics) {
  check_alignment(store, points);
  if (centroids.cols() != points.dims()) throw UsageError("centroid dimension mismatch");
  const std::size_t c = centroids.rows();
  const std::size_t d = points.dims();

  auto map_fn = [&](std::size_t partition, ingest::RowBlock block, engine::Emitter& out) {
    std::vector<double> sub(block.count * c);
    std::vector<double> x(d);
    for (std::size_t k = 0; k < block.count; ++k) {
      points.point(block.offset + k, x);
      membership_row(x, centroids, m, std::span(sub).subspan(k * c, c));
    }
    out.emit(engine::index_key('u', partition), engine::pack_doubles(sub));
  };
  // Each key carries one partition's sub-matrix; merging is placement by key.
  auto reduce_fn = [&](std::string_view key, std::span<const std::string> values,
                       engine::Emitter& out) {
    if (values.size() != 1) throw NumericError("duplicate membership block");
    out.emit(std::string(key), values.front());
  };
  auto job = engine::run_job(spec, store, map_fn, reduce_fn, options);

  MembershipMatrix u(store.num_rows(), c);
  for (const auto& rec : job.records) {
    const auto& block = store.block(engine::parse_index_key(rec.key));
    engine::unpack_doubles(rec.value, u.values().subspan(block.offset * c, block.count * c));
  }
  if (metrics) *metrics = job.metrics;
  return u;
}

Centroids job2_centroids(const ingest::PartitionedStore& store, const PointSource& points,
                         const MembershipMatrix& memberships, double m,
                         const engine::JobSpec& spec, const engine::EngineOptions& options,
                         engine::JobMetrics* metrics) {
  check_alignment(store, points);
  if (memberships.rows() != store.num_rows()) throw UsageError("membership rows mismatch");
  const std::size_t c = memberships.cols();
  const std::size_t d = points.dims();
  const std::string rescue_key = engine::index_key('r', 0);

  auto map_fn = [&](std::size_t, ingest::RowBlock block, engine::Emitter& out) {
    std::vector<double> sums(c * (d + 1), 0.0);  // per cluster: numerator (d), denominator
    std::vector<double> x(d);
    std::vector<Candidate> lowest;
    for (std::size_t k = block.offset; k < block.offset + block.count; ++k) {
      points.point(k, x);
      const auto u = memberships.row(k);
      double top = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        const double w = weight(u[i], m);
        double* acc = sums.data() + i * (d + 1);
        for (std::size_t s = 0; s < d; ++s) acc[s] += w * x[s];
        acc[d] += w;
        top = std::max(top, u[i]);
      }
      if (lowest.size() < c || top < lowest.back().max_membership) {
        offer(lowest, c, {top, static_cast<double>(k), x});
      }
    }
    for (std::size_t i = 0; i < c; ++i) {
      out.emit(engine::index_key('v', i),
               engine::pack_doubles(std::span(sums).subspan(i * (d + 1), d + 1)));
    }
    if (!lowest.empty()) out.emit(rescue_key, pack_candidates(lowest, d));
  };
  auto reduce_fn = [&](std::string_view key, std::span<const std::string> values,
                       engine::Emitter& out) {
    if (key == rescue_key) {
      std::vector<Candidate> lowest;
      for (const auto& v : values) {
        for (auto& cand : unpack_candidates(v, d)) offer(lowest, c, std::move(cand));
      }
      out.emit(std::string(key), pack_candidates(lowest, d));
      return;
    }
    std::vector<double> total(d + 1, 0.0), part(d + 1);
    for (const auto& v : values) {
      engine::unpack_doubles(v, part);
      for (std::size_t s = 0; s <= d; ++s) total[s] += part[s];
    }
    out.emit(std::string(key), engine::pack_doubles(total));
  };
  auto job = engine::run_job(spec, store, map_fn, reduce_fn, options);

  Centroids v(c, d);
  std::vector<std::size_t> empty;
  std::vector<Candidate> rescue;
  std::vector<double> total(d + 1);
  for (const auto& rec : job.records) {
    if (rec.key == rescue_key) {
      rescue = unpack_candidates(rec.value, d);
      continue;
    }
    const std::size_t i = engine::parse_index_key(rec.key);
    engine::unpack_doubles(rec.value, total);
    if (total[d] < kEmptyCluster) {
      empty.push_back(i);
      continue;
    }
    for (std::size_t s = 0; s < d; ++s) v(i, s) = total[s] / total[d];
  }
  for (std::size_t e = 0; e < empty.size(); ++e) {
    if (e >= rescue.size()) throw NumericError("not enough points to re-seed empty clusters");
    std::copy(rescue[e].point.begin(), rescue[e].point.end(), v.row(empty[e]).begin());
  }
  if (metrics) *metrics = job.metrics;
  return v;
}

double objective(const ingest::PartitionedStore& store, const PointSource& points,
                 const MembershipMatrix& memberships, const Centroids& centroids, double m,
                 const engine::JobSpec& spec, const engine::EngineOptions& options,
                 engine::JobMetrics* metrics) {
  check_alignment(store, points);
  const std::size_t c = centroids.rows();
  const std::string key = "objective";

  auto map_fn = [&](std::size_t, ingest::RowBlock block, engine::Emitter& out) {
    std::vector<double> x(points.dims());
    double partial = 0.0;
    for (std::size_t k = block.offset; k < block.offset + block.count; ++k) {
      points.point(k, x);
      const auto u = memberships.row(k);
      for (std::size_t i = 0; i < c; ++i) {
        partial += weight(u[i], m) * squared_distance(x, centroids.row(i));
      }
    }
    out.emit(key, engine::pack_doubles(std::span(&partial, 1)));
  };
  auto reduce_fn = [](std::string_view k, std::span<const std::string> values,
                      engine::Emitter& out) {
    double total = 0.0, part = 0.0;
    for (const auto& v : values) {
      engine::unpack_doubles(v, std::span(&part, 1));
      total += part;
    }
    out.emit(std::string(k), engine::pack_doubles(std::span(&total, 1)));
  };
  auto job = engine::run_job(spec, store, map_fn, reduce_fn, options);
  if (metrics) *metrics = job.metrics;
  if (job.records.empty()) return 0.0;
  return engine::unpack_doubles(job.records.front().value).at(0);
}

double objective(const MembershipMatrix& memberships, const Centroids& centroids,
                 const PointSource& points, double m) {
  std::vector<double> x(points.dims());
  double total = 0.0;
  for (std::size_t k = 0; k < points.num_rows(); ++k) {
    points.point(k, x);
    for (std::size_t i = 0; i < centroids.rows(); ++i) {
      total += weight(memberships(k, i), m) * squared_distance(x, centroids.row(i));
    }
  }
  return total;
}

Result run_fcm(const ingest::PartitionedStore& store, const PointSource& points,
               const Config& config, const engine::JobSpec& spec,
               const engine::EngineOptions& options) {
  validate(config);
  engine::validate(spec);
  check_alignment(store, points);

  Result result;
  Centroids v = init_centroids(points, config.clusters, config.seed);
  MembershipMatrix previous;
  engine::JobSpec job = spec;
  for (std::size_t t = 1; t <= config.max_iters; ++t) {
    engine::JobMetrics m1, m2, m3;
    job.job_name = spec.job_name + ".membership";
    MembershipMatrix u = job1_membership(store, points, v, config.m, job, options, &m1);
    job.job_name = spec.job_name + ".centroids";
    Centroids next = job2_centroids(store, points, u, config.m, job, options, &m2);
    result.job_metrics.push_back(m1);
    result.job_metrics.push_back(m2);

    double delta = std::numeric_limits<double>::infinity();
    if (config.stop_rule == StopRule::centroids) {
      delta = max_abs_difference(next.values(), v.values());
    } else if (!previous.empty()) {
      delta = max_abs_difference(u.values(), previous.values());
    }
    if (config.track_objective) {
      job.job_name = spec.job_name + ".objective";
      result.objective_trace.push_back(
          objective(store, points, u, next, config.m, job, options, &m3));
      result.job_metrics.push_back(m3);
    }
    result.delta_trace.push_back(delta);
    result.iterations = t;
    v = std::move(next);
    previous = std::move(u);
    if (!config.fixed_iterations && delta < config.epsilon) {
      result.converged = true;
      break;
    }
  }
  result.memberships = std::move(previous);
  result.centroids = std::move(v);
  return result;
}

void write_matrix_csv(std::ostream& out, const Matrix& matrix) {
  for (std::size_t r = 0; r < matrix.rows(); ++r) write_csv_row(out, matrix.row(r));
}

void write_trace_csv(std::ostream& out, const Result& result) {
  out << "iter,jm,max_delta_u\n";
  for (std::size_t t = 0; t < result.delta_trace.size(); ++t) {
    const double jm = t < result.objective_trace.size()
                          ? result.objective_trace[t]
                          : std::numeric_limits<double>::quiet_NaN();
    out << (t + 1) << ',' << format_double(jm) << ',' << format_double(result.delta_trace[t])
        << '\n';
  }
}

}  // namespace rhclus::fcm
