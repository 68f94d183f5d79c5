#pragma once

#include <cstddef>
#include <span>

#include "rhclus/ingest.hpp"
#include "rhclus/matrix.hpp"
#include "rhclus/mca.hpp"

namespace rhclus {

/// Random-access view of the records as points in a Euclidean space. Map
/// tasks pull their block's points through this, so categorical records are
/// projected on the fly and never materialized as a whole.
class PointSource {
 public:
  virtual ~PointSource() = default;
  virtual std::size_t num_rows() const = 0;
  virtual std::size_t dims() const = 0;
  virtual void point(std::size_t row, std::span<double> out) const = 0;
};

/// Categorical records seen through a fitted MCA model.
class ProjectedRecords final : public PointSource {
 public:
  ProjectedRecords(const ingest::CategoricalDataset& dataset, const mca::Model& model)
      : dataset_(dataset), model_(model) {}

  std::size_t num_rows() const override { return dataset_.num_rows(); }
  std::size_t dims() const override { return model_.dims(); }
  void point(std::size_t row, std::span<double> out) const override {
    model_.project(dataset_.row(row), out);
  }

 private:
  const ingest::CategoricalDataset& dataset_;
  const mca::Model& model_;
};

/// Rows of an already-numeric matrix.
class DenseRows final : public PointSource {
 public:
  explicit DenseRows(const Matrix& data) : data_(data) {}

  std::size_t num_rows() const override { return data_.rows(); }
  std::size_t dims() const override { return data_.cols(); }
  void point(std::size_t row, std::span<double> out) const override {
    const auto src = data_.row(row);
    for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i];
  }

 private:
  const Matrix& data_;
};

/// Materializes every point (n x d).
Matrix materialize(const PointSource& points);

}  // namespace rhclus
