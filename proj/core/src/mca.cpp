#include "rhclus/mca.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "rhclus/errors.hpp"
#include "rhclus/text_format.hpp"

namespace rhclus::mca {

double CategoryMargins::mass(std::size_t category) const {
  return static_cast<double>(counts[category]) /
         (static_cast<double>(num_rows) * static_cast<double>(num_columns()));
}

BurtStatistics accumulate_burt(const ingest::CategoricalDataset& dataset,
                               const ingest::PartitionedStore& store, const engine::JobSpec& spec,
                               const engine::EngineOptions& options) {
  if (store.num_rows() != dataset.num_rows()) {
    throw UsageError("store covers " + std::to_string(store.num_rows()) + " rows, dataset has " +
                     std::to_string(dataset.num_rows()));
  }
  const std::size_t J = dataset.num_categories();
  const std::size_t Q = dataset.num_columns();
  const auto offsets = dataset.offsets();

  auto map_fn = [&](std::size_t, ingest::RowBlock block, engine::Emitter& out) {
    std::vector<std::uint64_t> local(J * J, 0);
    std::vector<std::size_t> global(Q);
    for (std::size_t r = block.offset; r < block.offset + block.count; ++r) {
      const auto row = dataset.row(r);
      for (std::size_t q = 0; q < Q; ++q) global[q] = offsets[q] + row[q];
      for (const std::size_t a : global) {
        std::uint64_t* dst = local.data() + a * J;
        for (const std::size_t b : global) ++dst[b];
      }
    }
    for (std::size_t a = 0; a < J; ++a) {
      const std::span<const std::uint64_t> row(local.data() + a * J, J);
      if (row[a] == 0) continue;  // a never occurs in this block, so the row is zero
      out.emit(engine::index_key('b', a), engine::pack_counts(row));
    }
  };
  auto reduce_fn = [&](std::string_view key, std::span<const std::string> values,
                       engine::Emitter& out) {
    std::vector<std::uint64_t> sum(J, 0), part(J);
    for (const auto& v : values) {
      engine::unpack_counts(v, part);
      for (std::size_t b = 0; b < J; ++b) sum[b] += part[b];
    }
    out.emit(std::string(key), engine::pack_counts(sum));
  };
  auto job = engine::run_job(spec, store, map_fn, reduce_fn, options);

  BurtStatistics stats;
  stats.burt.size = J;
  stats.burt.counts.assign(J * J, 0);
  for (const auto& rec : job.records) {
    const std::size_t a = engine::parse_index_key(rec.key);
    engine::unpack_counts(rec.value, std::span(stats.burt.counts).subspan(a * J, J));
  }
  stats.margins.num_rows = dataset.num_rows();
  stats.margins.column_offsets.assign(offsets.begin(), offsets.end());
  stats.margins.counts.resize(J);
  for (std::size_t j = 0; j < J; ++j) stats.margins.counts[j] = stats.burt(j, j);
  stats.metrics = job.metrics;
  return stats;
}

Model::Model(CategoryMargins margins, std::vector<double> eigenvalues, std::vector<Axis> axes)
    : margins_(std::move(margins)), eigenvalues_(std::move(eigenvalues)), axes_(std::move(axes)) {
  const std::size_t J = margins_.num_categories();
  const std::size_t Q = margins_.num_columns();
  const std::size_t d = axes_.size();
  total_inertia_ = static_cast<double>(J) / static_cast<double>(Q) - 1.0;

  // Principal coordinate on axis s:
  //   f_s = sum_j (z_j / Q - c_j) v_sj / sqrt(c_j)
  // which splits into a per-category term and a record-independent constant.
  table_.assign(J * d, 0.0);
  constants_.assign(d, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const double c = margins_.mass(j);
    const double root = std::sqrt(c);
    for (std::size_t s = 0; s < d; ++s) {
      const double v = axes_[s].loadings[j];
      table_[j * d + s] = v / (static_cast<double>(Q) * root);
      constants_[s] -= root * v;
    }
  }
}

void Model::project(std::span<const std::uint32_t> record, std::span<double> out) const {
  const std::size_t Q = margins_.num_columns();
  const std::size_t d = axes_.size();
  if (record.size() != Q) {
    throw SchemaError("record has " + std::to_string(record.size()) + " columns, model expects " +
                      std::to_string(Q));
  }
  std::copy(constants_.begin(), constants_.end(), out.begin());
  for (std::size_t q = 0; q < Q; ++q) {
    const std::size_t width = margins_.column_offsets[q + 1] - margins_.column_offsets[q];
    if (record[q] >= width) {
      throw SchemaError("column " + std::to_string(q) + ": category index " +
                        std::to_string(record[q]) + " out of range");
    }
    const double* row = table_.data() + (margins_.column_offsets[q] + record[q]) * d;
    for (std::size_t s = 0; s < d; ++s) out[s] += row[s];
  }
}

std::vector<double> Model::project(std::span<const std::uint32_t> record) const {
  std::vector<double> out(dims());
  project(record, out);
  return out;
}

Model fit_mca(const CategoryMargins& margins, const BurtMatrix& burt, const FitOptions& options) {
  const std::size_t J = margins.num_categories();
  const std::size_t Q = margins.num_columns();
  if (Q == 0 || J == 0 || margins.num_rows == 0) throw NumericError("cannot fit MCA on empty data");
  if (margins.column_offsets.back() != J) throw NumericError("column offsets do not cover J");
  if (burt.size != J) throw NumericError("Burt matrix size does not match margins");
  if (options.max_dims == 0) throw UsageError("mca_dims must be >= 1");

  for (std::size_t q = 0; q < Q; ++q) {
    std::uint64_t total = 0;
    for (std::size_t j = margins.column_offsets[q]; j < margins.column_offsets[q + 1]; ++j) {
      total += margins.counts[j];
    }
    if (total != margins.num_rows) {
      throw NumericError("column " + std::to_string(q) + " counts sum to " +
                         std::to_string(total) + ", expected " + std::to_string(margins.num_rows));
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    if (margins.counts[j] == 0) {
      throw NumericError("category " + std::to_string(j) + " has zero mass");
    }
    if (burt(j, j) != margins.counts[j]) {
      throw NumericError("Burt diagonal disagrees with margins at category " + std::to_string(j));
    }
  }

  const double n = static_cast<double>(margins.num_rows);
  const double nq2 = n * static_cast<double>(Q) * static_cast<double>(Q);
  Eigen::VectorXd mass(J);
  for (std::size_t j = 0; j < J; ++j) mass(static_cast<Eigen::Index>(j)) = margins.mass(j);
  const Eigen::VectorXd inv_root = mass.cwiseSqrt().cwiseInverse();

  Eigen::MatrixXd M(J, J);
  for (std::size_t a = 0; a < J; ++a) {
    for (std::size_t b = 0; b < J; ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      M(ia, ib) = (static_cast<double>(burt(a, b)) / nq2 - mass(ia) * mass(ib)) * inv_root(ia) *
                  inv_root(ib);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");

  // Eigen returns ascending order.
  std::vector<double> eigenvalues(J);
  for (std::size_t i = 0; i < J; ++i) {
    double lambda = solver.eigenvalues()(static_cast<Eigen::Index>(J - 1 - i));
    if (lambda < -1e-10 || lambda > 1.0 + 1e-10) {
      throw NumericError("MCA eigenvalue " + format_double(lambda) + " outside [0, 1]");
    }
    eigenvalues[i] = std::clamp(lambda, 0.0, 1.0);
  }

  const double floor = 1.0 / static_cast<double>(Q) + options.retention_slack;
  std::size_t keep = 0;
  while (keep < J && keep < options.max_dims && eigenvalues[keep] > floor) ++keep;
  keep = std::max<std::size_t>(keep, 1);

  std::vector<Axis> axes(keep);
  for (std::size_t s = 0; s < keep; ++s) {
    const Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(J - 1 - s));
    // Sign convention: the largest-magnitude loading is positive.
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    const double sign = v(pivot) < 0 ? -1.0 : 1.0;
    axes[s].eigenvalue = eigenvalues[s];
    axes[s].loadings.resize(J);
    for (std::size_t j = 0; j < J; ++j) axes[s].loadings[j] = sign * v(static_cast<Eigen::Index>(j));
  }
  return Model(margins, std::move(eigenvalues), std::move(axes));
}

void write_axes(std::ostream& out, const Model& model) {
  for (std::size_t s = 0; s < model.dims(); ++s) {
    const double lambda = model.axes()[s].eigenvalue;
    out << s << ',' << format_double(lambda) << ','
        << format_double(lambda / model.total_inertia()) << '\n';
  }
}

void write_loadings(std::ostream& out, const Model& model) {
  std::vector<double> row(model.dims());
  for (std::size_t j = 0; j < model.margins().num_categories(); ++j) {
    for (std::size_t s = 0; s < model.dims(); ++s) row[s] = model.axes()[s].loadings[j];
    write_csv_row(out, row);
  }
}

}  // namespace rhclus::mca
