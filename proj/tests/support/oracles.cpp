#include "oracles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rhclus::oracle {

namespace {

Eigen::MatrixXd indicator(const ingest::CategoricalDataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.num_rows());
  const auto J = static_cast<Eigen::Index>(dataset.num_categories());
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, J);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = dataset.row(static_cast<std::size_t>(i));
    for (std::size_t q = 0; q < row.size(); ++q) {
      z(i, static_cast<Eigen::Index>(dataset.offset(q) + row[q])) = 1.0;
    }
  }
  return z;
}

double sqdist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

DenseCa dense_ca(const ingest::CategoricalDataset& dataset) {
  const Eigen::MatrixXd z = indicator(dataset);
  const double n = static_cast<double>(z.rows());
  const double total = z.sum();
  const Eigen::MatrixXd p = z / total;
  const Eigen::VectorXd r = p.rowwise().sum();
  const Eigen::VectorXd c = p.colwise().sum().transpose();
  Eigen::MatrixXd s(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      s(i, j) = (p(i, j) - r(i) * c(j)) / std::sqrt(r(i) * c(j));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sigma = svd.singularValues();
  const Eigen::MatrixXd coords = std::sqrt(n) * svd.matrixU() * sigma.asDiagonal();

  DenseCa out;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) out.singular_values_squared.push_back(sigma(k) * sigma(k));
  out.row_coordinates = Matrix(static_cast<std::size_t>(coords.rows()),
                               static_cast<std::size_t>(coords.cols()));
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    for (Eigen::Index k = 0; k < coords.cols(); ++k) {
      out.row_coordinates(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) = coords(i, k);
    }
  }
  return out;
}

std::vector<std::uint64_t> burt_by_indicator(const ingest::CategoricalDataset& dataset) {
  const Eigen::MatrixXd z = indicator(dataset);
  const Eigen::MatrixXd b = z.transpose() * z;
  std::vector<std::uint64_t> out;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) out.push_back(static_cast<std::uint64_t>(std::llround(b(i, j))));
  }
  return out;
}

std::vector<double> reference_membership(const std::vector<double>& x, const Matrix& v, double m) {
  const std::size_t c = v.rows();
  std::vector<double> dist(c), u(c, 0.0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < c; ++i) {
    dist[i] = std::sqrt(sqdist(x, v.row(i)));
    if (dist[i] < 1e-12) ++hits;
  }
  if (hits > 0) {
    for (std::size_t i = 0; i < c; ++i) u[i] = dist[i] < 1e-12 ? 1.0 / static_cast<double>(hits) : 0.0;
    return u;
  }
  for (std::size_t i = 0; i < c; ++i) {
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) denom += std::pow(dist[i] / dist[j], 2.0 / (m - 1.0));
    u[i] = 1.0 / denom;
  }
  return u;
}

ReferenceFcm reference_fcm(const Matrix& data, Matrix initial, double m, double epsilon,
                           std::size_t max_iters) {
  const std::size_t n = data.rows(), d = data.cols(), c = initial.rows();
  ReferenceFcm out;
  Matrix v = std::move(initial);
  Matrix previous;
  for (std::size_t t = 1; t <= max_iters; ++t) {
    Matrix u(n, c);
    for (std::size_t k = 0; k < n; ++k) {
      const std::vector<double> x(data.row(k).begin(), data.row(k).end());
      const auto row = reference_membership(x, v, m);
      std::copy(row.begin(), row.end(), u.row(k).begin());
    }

    Matrix next(c, d);
    std::vector<std::size_t> empty;
    for (std::size_t i = 0; i < c; ++i) {
      std::vector<double> num(d, 0.0);
      double den = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double w = std::pow(u(k, i), m);
        for (std::size_t s = 0; s < d; ++s) num[s] += w * data(k, s);
        den += w;
      }
      if (den < 1e-12) {
        empty.push_back(i);
        continue;
      }
      for (std::size_t s = 0; s < d; ++s) next(i, s) = num[s] / den;
    }
    if (!empty.empty()) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      auto top = [&](std::size_t k) { return *std::max_element(u.row(k).begin(), u.row(k).end()); };
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return top(a) < top(b); });
      for (std::size_t e = 0; e < empty.size(); ++e) {
        std::copy(data.row(order[e]).begin(), data.row(order[e]).end(), next.row(empty[e]).begin());
      }
    }

    out.objective.push_back(naive_objective(u, next, data, m));
    double delta = std::numeric_limits<double>::infinity();
    if (!previous.empty()) {
      delta = 0.0;
      for (std::size_t k = 0; k < n * c; ++k) {
        delta = std::max(delta, std::abs(u.values()[k] - previous.values()[k]));
      }
    }
    v = std::move(next);
    previous = std::move(u);
    out.iterations = t;
    if (delta < epsilon) {
      out.converged = true;
      break;
    }
  }
  out.u = std::move(previous);
  out.v = std::move(v);
  return out;
}

double naive_pc(const Matrix& u) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.rows(); ++k)
    for (std::size_t i = 0; i < u.cols(); ++i) s += u(k, i) * u(k, i);
  return s / static_cast<double>(u.rows());
}

double naive_pe(const Matrix& u) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.rows(); ++k)
    for (std::size_t i = 0; i < u.cols(); ++i)
      if (u(k, i) > 0) s += u(k, i) * std::log(u(k, i));
  return -s / static_cast<double>(u.rows());
}

double naive_objective(const Matrix& u, const Matrix& v, const Matrix& x, double m) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t k = 0; k < x.rows(); ++k) s += std::pow(u(k, i), m) * sqdist(x.row(k), v.row(i));
  return s;
}

static double min_separation(const Matrix& v) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.rows(); ++j)
      if (i != j) best = std::min(best, sqdist(v.row(i), v.row(j)));
  return best;
}

double naive_xb(const Matrix& u, const Matrix& v, const Matrix& x) {
  return naive_objective(u, v, x, 2.0) / (static_cast<double>(x.rows()) * min_separation(v));
}

double naive_sc(const Matrix& u, const Matrix& v, const Matrix& x, double m) {
  return min_separation(v) / (naive_objective(u, v, x, m) / static_cast<double>(x.rows()));
}

Matrix random_points(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  Matrix out(n, d);
  for (auto& value : out.values()) value = dist(rng);
  return out;
}

Matrix random_memberships(std::size_t n, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.01, 1.0);
  Matrix out(n, c);
  for (std::size_t k = 0; k < n; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < c; ++i) total += out(k, i) = dist(rng);
    for (std::size_t i = 0; i < c; ++i) out(k, i) /= total;
  }
  return out;
}

Matrix gaussian_blobs(std::size_t n, const Matrix& centers, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  Matrix out(n, centers.cols());
  for (std::size_t k = 0; k < n; ++k) {
    const auto center = centers.row(k % centers.rows());
    for (std::size_t s = 0; s < centers.cols(); ++s) out(k, s) = center[s] + noise(rng);
  }
  return out;
}

ingest::CategoricalDataset make_dataset(std::size_t q, const std::vector<std::uint32_t>& cells) {
  const std::size_t n = cells.size() / q;
  std::vector<std::uint32_t> remapped(cells.size());
  std::vector<ingest::ColumnSpec> schema(q);
  for (std::size_t col = 0; col < q; ++col) {
    std::uint32_t top = 0;
    for (std::size_t r = 0; r < n; ++r) top = std::max(top, cells[r * q + col]);
    std::vector<std::int64_t> map(top + 1, -1);
    for (std::size_t r = 0; r < n; ++r) map[cells[r * q + col]] = 0;
    std::uint32_t next = 0;
    for (auto& slot : map) {
      if (slot == 0) slot = next++;
    }
    for (std::size_t r = 0; r < n; ++r) {
      remapped[r * q + col] = static_cast<std::uint32_t>(map[cells[r * q + col]]);
    }
    schema[col].name = "col" + std::to_string(col);
    for (std::uint32_t i = 0; i < next; ++i) schema[col].categories.push_back(std::to_string(i));
  }
  return ingest::CategoricalDataset(std::move(schema), std::move(remapped));
}

ingest::CategoricalDataset random_categorical(std::size_t n, std::size_t q, std::size_t max_card,
                                              std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> card(2, max_card);
  std::vector<std::size_t> cards(q);
  for (auto& c : cards) c = card(rng);
  std::vector<std::uint32_t> cells(n * q);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t col = 0; col < q; ++col) {
      cells[r * q + col] = static_cast<std::uint32_t>(
          std::uniform_int_distribution<std::size_t>(0, cards[col] - 1)(rng));
    }
  }
  // Guarantee two categories per column.
  for (std::size_t col = 0; col < q; ++col) {
    cells[col] = 0;
    cells[q + col] = 1;
  }
  return make_dataset(q, cells);
}

ingest::CategoricalDataset latent_class(std::size_t n, std::size_t q, std::size_t cardinality,
                                        std::size_t classes, double purity, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, cardinality - 1);
  std::vector<std::uint32_t> cells(n * q);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t cls = r % classes;
    for (std::size_t col = 0; col < q; ++col) {
      cells[r * q + col] = static_cast<std::uint32_t>(coin(rng) < purity ? cls % cardinality : any(rng));
    }
  }
  return make_dataset(q, cells);
}

}  // namespace rhclus::oracle
