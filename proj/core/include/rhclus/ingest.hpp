#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace rhclus::ingest {

/// Text cells exactly as read from the input, before any typing.
struct RawTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows;

  std::size_t num_rows() const noexcept { return rows.size(); }
  std::size_t num_columns() const noexcept { return column_names.size(); }
};

struct CsvOptions {
  bool has_header = true;
  char delimiter = ',';
};

/// Parses RFC-4180 style CSV (quoted fields, doubled quotes, CRLF). Blank
/// lines are skipped. Throws SchemaError on ragged rows (naming the 1-based
/// line) or when no data rows are present.
RawTable parse_csv(std::istream& in, const CsvOptions& options = {});

/// Opens `path` and parses it; IoError when the file cannot be read.
RawTable load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Drops the named columns (matched by header name, or by 0-based index when
/// the entry is all digits). Unknown names are a SchemaError.
RawTable drop_columns(RawTable table, std::span<const std::string> names);

/// Cells treated as missing: empty, "?", "NA", "NaN" (case-sensitive).
bool is_missing(std::string_view cell);

enum class ColumnKind { categorical, numeric };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  /// Category labels, one per category index. For numeric columns these are
  /// interval labels generated from `bin_edges`.
  std::vector<std::string> categories;
  /// Numeric only: q+1 ascending edges for q bins, first -inf and last +inf.
  /// Bin b covers (bin_edges[b], bin_edges[b+1]].
  std::vector<double> bin_edges;
  /// Index of the category that holds missing cells, if any were seen.
  std::optional<std::uint32_t> missing_category;

  std::size_t cardinality() const noexcept { return categories.size(); }
};

struct SchemaOptions {
  double numeric_detect = 0.95;
  std::size_t max_card = 12;
};

/// A column is numeric iff at least `numeric_detect` of its non-missing cells
/// parse as reals and it has more than `max_card` distinct values. Otherwise it
/// is categorical with labels in first-appearance order. Numeric specs come
/// back without edges; `discretize` fills them in.
std::vector<ColumnSpec> infer_schema(const RawTable& table, const SchemaOptions& options = {});

/// n records by Q categorical attributes. Cells are per-column category
/// indices stored row-major; `offset(q) + cell` is the global category index.
class CategoricalDataset {
 public:
  CategoricalDataset() = default;
  CategoricalDataset(std::vector<ColumnSpec> schema, std::vector<std::uint32_t> cells);

  std::size_t num_rows() const noexcept { return num_rows_; }
  std::size_t num_columns() const noexcept { return schema_.size(); }
  /// Total category count J.
  std::size_t num_categories() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  const std::vector<ColumnSpec>& schema() const noexcept { return schema_; }
  std::size_t offset(std::size_t column) const { return offsets_[column]; }
  std::span<const std::size_t> offsets() const noexcept { return offsets_; }

  std::span<const std::uint32_t> row(std::size_t r) const {
    return {cells_.data() + r * schema_.size(), schema_.size()};
  }
  std::span<const std::uint32_t> cells() const noexcept { return cells_; }

  /// Copy of the first k rows.
  CategoricalDataset head(std::size_t k) const;

  bool operator==(const CategoricalDataset& other) const {
    return cells_ == other.cells_ && num_rows_ == other.num_rows_ &&
           offsets_ == other.offsets_;
  }

 private:
  std::vector<ColumnSpec> schema_;
  std::vector<std::uint32_t> cells_;
  std::vector<std::size_t> offsets_;  // Q+1 prefix sums of cardinalities
  std::size_t num_rows_ = 0;
};

/// Maps every cell to a category index. Numeric columns are cut at the
/// empirical quantiles i/q (i = 1..q-1, lower quantile, deduplicated); missing
/// cells get a dedicated category; categories never observed are removed;
/// columns left with a single category are dropped with a warning.
CategoricalDataset discretize(const RawTable& table, std::span<const ColumnSpec> schema,
                              std::size_t bins = 4);

/// Removes categories with no occurrences (after taking a subset, say). An
/// emptied numeric bin is merged into the next kept bin.
CategoricalDataset compact_categories(const CategoricalDataset& dataset);

/// Contiguous row block [offset, offset + count).
struct RowBlock {
  std::size_t offset = 0;
  std::size_t count = 0;
};

/// Ordered, disjoint row blocks covering [0, n). Immutable once built.
class PartitionedStore {
 public:
  PartitionedStore(std::size_t num_rows, std::vector<RowBlock> blocks);

  std::size_t num_rows() const noexcept { return num_rows_; }
  std::size_t num_partitions() const noexcept { return blocks_.size(); }
  const RowBlock& block(std::size_t index) const { return blocks_[index]; }
  std::span<const RowBlock> blocks() const noexcept { return blocks_; }

 private:
  std::size_t num_rows_;
  std::vector<RowBlock> blocks_;
};

/// Splits n rows into P contiguous blocks whose sizes differ by at most one
/// (larger blocks first). P > n is clamped to n with a warning; P = 0 is a
/// UsageError. An empty dataset yields a single empty block.
PartitionedStore partition(std::size_t num_rows, std::size_t num_partitions);
inline PartitionedStore partition(const CategoricalDataset& dataset, std::size_t num_partitions) {
  return partition(dataset.num_rows(), num_partitions);
}

/// Appends target_n - n rows drawn uniformly with replacement from the
/// existing rows. The first n rows are untouched.
CategoricalDataset replicate_to_size(const CategoricalDataset& dataset, std::size_t target_n,
                                     std::uint64_t seed);

/// Writes `name,kind,cardinality_or_edges`, one line per column. Numeric
/// columns list their edges separated by ';'.
void write_schema(std::ostream& out, std::span<const ColumnSpec> schema);

}  // namespace rhclus::ingest
