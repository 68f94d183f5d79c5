#include "rhclus/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rhclus/errors.hpp"
#include "rhclus/random.hpp"
#include "rhclus/text_format.hpp"

namespace rhclus::ingest {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_real(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Splits the whole input into records of fields. Each record remembers the
// physical line it started on so errors can point at it.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<CsvRecord> tokenize(std::string_view text, char delimiter) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  bool record_has_content = false;
  std::size_t line = 1;
  current.line = 1;

  auto finish_field = [&] {
    current.fields.push_back(field_quoted ? field : std::string(trim(field)));
    field.clear();
    field_quoted = false;
  };
  auto finish_record = [&] {
    finish_field();
    const bool blank = !record_has_content && current.fields.size() == 1 &&
                       current.fields.front().empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && trim(field).empty()) {
      field.clear();
      in_quotes = true;
      field_quoted = true;
      record_has_content = true;
    } else if (ch == delimiter) {
      finish_field();
      record_has_content = true;
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // CRLF: handled by the '\n' branch.
    } else if (ch == '\n' || ch == '\r') {
      finish_record();
      ++line;
      current.line = line;
    } else {
      field.push_back(ch);
      if (ch != ' ' && ch != '\t') record_has_content = true;
    }
  }
  if (in_quotes) {
    throw SchemaError("line " + std::to_string(current.line) + ": unterminated quoted field");
  }
  if (record_has_content || !field.empty() || !current.fields.empty()) finish_record();
  return records;
}

std::string interval_label(double lo, double hi) {
  const bool last = std::isinf(hi);
  return "(" + format_double(lo) + "," + format_double(hi) + (last ? ")" : "]");
}

struct EncodedColumn {
  ColumnSpec spec;
  std::vector<std::uint32_t> cells;
};

EncodedColumn encode_categorical(const RawTable& table, std::size_t col, const ColumnSpec& spec) {
  EncodedColumn out{spec, std::vector<std::uint32_t>(table.num_rows())};
  std::unordered_map<std::string_view, std::uint32_t> lookup;
  for (std::uint32_t i = 0; i < spec.categories.size(); ++i) lookup.emplace(spec.categories[i], i);
  out.spec.missing_category.reset();

  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const std::string& cell = table.rows[r][col];
    if (is_missing(cell)) {
      if (!out.spec.missing_category) {
        out.spec.missing_category = static_cast<std::uint32_t>(out.spec.categories.size());
        out.spec.categories.emplace_back("<missing>");
      }
      out.cells[r] = *out.spec.missing_category;
      continue;
    }
    const auto it = lookup.find(cell);
    if (it == lookup.end()) {
      throw SchemaError("column '" + spec.name + "': label '" + cell + "' not in schema");
    }
    out.cells[r] = it->second;
  }
  return out;
}

EncodedColumn encode_numeric(const RawTable& table, std::size_t col, const ColumnSpec& spec,
                             std::size_t bins) {
  const std::size_t n = table.num_rows();
  std::vector<std::optional<double>> parsed(n);
  std::vector<double> sorted;
  sorted.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string& cell = table.rows[r][col];
    if (is_missing(cell)) continue;
    parsed[r] = parse_real(cell);
    if (parsed[r]) sorted.push_back(*parsed[r]);
  }
  std::sort(sorted.begin(), sorted.end());

  // Lower empirical quantile at i/q: the ceil(i*n/q)-th smallest value.
  std::vector<double> cuts;
  const std::size_t valid = sorted.size();
  for (std::size_t i = 1; i < bins && valid > 0; ++i) {
    const std::size_t rank = (i * valid + bins - 1) / bins;
    cuts.push_back(sorted[std::max<std::size_t>(rank, 1) - 1]);
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> edges;
  edges.push_back(-std::numeric_limits<double>::infinity());
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(std::numeric_limits<double>::infinity());

  // Merge away bins that received no values so every category has mass.
  auto bin_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
  };
  std::vector<std::size_t> occupancy(edges.size() - 1, 0);
  for (const double v : sorted) ++occupancy[bin_of(v)];
  for (std::size_t b = occupancy.size(); b-- > 0;) {
    if (occupancy[b] != 0 || occupancy.size() == 1) continue;
    // Drop the upper edge (merge into the next bin) unless this is the last
    // bin, whose +inf edge must stay.
    const std::size_t drop = (b + 1 < occupancy.size()) ? b + 1 : b;
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(drop));
    occupancy.erase(occupancy.begin() + static_cast<std::ptrdiff_t>(b));
  }
  cuts.assign(edges.begin() + 1, edges.end() - 1);

  EncodedColumn out;
  out.spec.name = spec.name;
  out.spec.kind = ColumnKind::numeric;
  out.spec.bin_edges = edges;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    out.spec.categories.push_back(interval_label(edges[b], edges[b + 1]));
  }
  out.cells.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (parsed[r]) {
      out.cells[r] = static_cast<std::uint32_t>(bin_of(*parsed[r]));
      continue;
    }
    if (!out.spec.missing_category) {
      out.spec.missing_category = static_cast<std::uint32_t>(out.spec.categories.size());
      out.spec.categories.emplace_back("<missing>");
    }
    out.cells[r] = *out.spec.missing_category;
  }
  return out;
}

// Removes categorical labels that never occur. Numeric bins are already
// compact.
void drop_unobserved(EncodedColumn& column) {
  std::vector<std::size_t> counts(column.spec.categories.size(), 0);
  for (const auto c : column.cells) ++counts[c];
  if (std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; })) return;

  std::vector<std::uint32_t> remap(counts.size(), 0);
  std::vector<std::string> kept;
  std::optional<std::uint32_t> missing;
  for (std::uint32_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    remap[i] = static_cast<std::uint32_t>(kept.size());
    if (column.spec.missing_category == i) missing = remap[i];
    kept.push_back(column.spec.categories[i]);
  }
  for (auto& c : column.cells) c = remap[c];
  column.spec.categories = std::move(kept);
  column.spec.missing_category = missing;
}

}  // namespace

bool is_missing(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "?" || cell == "NA" || cell == "NaN";
}

RawTable parse_csv(std::istream& in, const CsvOptions& options) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  auto records = tokenize(text, options.delimiter);
  if (records.empty()) throw SchemaError("empty input: no rows");

  RawTable table;
  std::size_t first_data = 0;
  const std::size_t width = records.front().fields.size();
  if (options.has_header) {
    table.column_names = std::move(records.front().fields);
    first_data = 1;
  } else {
    for (std::size_t i = 0; i < width; ++i) table.column_names.push_back("V" + std::to_string(i + 1));
  }
  if (records.size() <= first_data) throw SchemaError("empty input: header but no data rows");

  table.rows.reserve(records.size() - first_data);
  for (std::size_t i = first_data; i < records.size(); ++i) {
    if (records[i].fields.size() != width) {
      throw SchemaError("line " + std::to_string(records[i].line) + ": expected " +
                        std::to_string(width) + " fields, found " +
                        std::to_string(records[i].fields.size()));
    }
    table.rows.push_back(std::move(records[i].fields));
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_csv(in, options);
}

RawTable drop_columns(RawTable table, std::span<const std::string> names) {
  if (names.empty()) return table;
  std::vector<bool> drop(table.num_columns(), false);
  for (const auto& name : names) {
    auto it = std::find(table.column_names.begin(), table.column_names.end(), name);
    if (it != table.column_names.end()) {
      drop[static_cast<std::size_t>(it - table.column_names.begin())] = true;
      continue;
    }
    const bool digits = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return c >= '0' && c <= '9';
    });
    const std::size_t index = digits ? std::stoul(name) : table.num_columns();
    if (index >= table.num_columns()) throw SchemaError("unknown column '" + name + "'");
    drop[index] = true;
  }

  auto keep = [&](std::vector<std::string>& cells) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!drop[i]) out.push_back(std::move(cells[i]));
    }
    cells = std::move(out);
  };
  keep(table.column_names);
  for (auto& row : table.rows) keep(row);
  if (table.column_names.empty()) throw SchemaError("every column was ignored");
  return table;
}

std::vector<ColumnSpec> infer_schema(const RawTable& table, const SchemaOptions& options) {
  if (table.num_rows() == 0 || table.num_columns() == 0) {
    throw SchemaError("cannot infer a schema from an empty table");
  }
  std::vector<ColumnSpec> schema;
  schema.reserve(table.num_columns());
  for (std::size_t col = 0; col < table.num_columns(); ++col) {
    ColumnSpec spec;
    spec.name = table.column_names[col];
    std::unordered_set<std::string_view> seen;
    std::size_t present = 0;
    std::size_t numeric = 0;
    for (const auto& row : table.rows) {
      const std::string& cell = row[col];
      if (is_missing(cell)) continue;
      ++present;
      if (parse_real(cell)) ++numeric;
      if (seen.insert(cell).second) spec.categories.push_back(cell);
    }
    if (present == 0) throw SchemaError("column '" + spec.name + "' has no non-missing cells");

    const bool mostly_numeric =
        static_cast<double>(numeric) >= options.numeric_detect * static_cast<double>(present);
    if (mostly_numeric && seen.size() > options.max_card) {
      spec.kind = ColumnKind::numeric;
      spec.categories.clear();
    }
    schema.push_back(std::move(spec));
  }
  return schema;
}

CategoricalDataset::CategoricalDataset(std::vector<ColumnSpec> schema,
                                       std::vector<std::uint32_t> cells)
    : schema_(std::move(schema)), cells_(std::move(cells)) {
  if (schema_.empty()) throw SchemaError("dataset needs at least one column");
  if (cells_.size() % schema_.size() != 0) {
    throw SchemaError("cell count is not a multiple of the column count");
  }
  num_rows_ = cells_.size() / schema_.size();
  offsets_.assign(schema_.size() + 1, 0);
  for (std::size_t q = 0; q < schema_.size(); ++q) {
    offsets_[q + 1] = offsets_[q] + schema_[q].cardinality();
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& spec = schema_[i % schema_.size()];
    if (cells_[i] >= spec.cardinality()) {
      throw SchemaError("row " + std::to_string(i / schema_.size()) + ", column '" + spec.name +
                        "': category index out of range");
    }
  }
}

CategoricalDataset CategoricalDataset::head(std::size_t k) const {
  k = std::min(k, num_rows_);
  std::vector<std::uint32_t> cells(cells_.begin(),
                                   cells_.begin() + static_cast<std::ptrdiff_t>(k * schema_.size()));
  return CategoricalDataset(schema_, std::move(cells));
}

CategoricalDataset compact_categories(const CategoricalDataset& dataset) {
  const std::size_t q = dataset.num_columns();
  std::vector<ColumnSpec> schema = dataset.schema();
  std::vector<std::uint32_t> cells(dataset.cells().begin(), dataset.cells().end());
  for (std::size_t col = 0; col < q; ++col) {
    auto& spec = schema[col];
    std::vector<std::size_t> counts(spec.cardinality(), 0);
    for (std::size_t r = 0; r < dataset.num_rows(); ++r) ++counts[cells[r * q + col]];

    std::vector<std::uint32_t> remap(counts.size(), 0);
    std::vector<std::string> labels;
    std::vector<double> edges;
    std::optional<std::uint32_t> missing;
    const bool binned = spec.kind == ColumnKind::numeric && !spec.bin_edges.empty();
    const std::size_t num_bins = binned ? spec.bin_edges.size() - 1 : 0;
    if (binned) edges.push_back(spec.bin_edges.front());
    for (std::uint32_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) continue;
      remap[i] = static_cast<std::uint32_t>(labels.size());
      if (spec.missing_category == i) missing = remap[i];
      labels.push_back(spec.categories[i]);
      if (i < num_bins) edges.push_back(spec.bin_edges[i + 1]);
    }
    if (labels.size() == counts.size()) continue;
    if (binned) {
      // An emptied bin merges into the next kept one; the last kept bin
      // stretches to +inf.
      const std::size_t kept_bins = edges.size() - 1;
      if (kept_bins > 0) edges.back() = spec.bin_edges.back();
      for (std::size_t b = 0; b < kept_bins; ++b) {
        labels[b] = interval_label(edges[b], edges[b + 1]);
      }
      spec.bin_edges = std::move(edges);
    }
    for (std::size_t r = 0; r < dataset.num_rows(); ++r) {
      cells[r * q + col] = remap[cells[r * q + col]];
    }
    spec.categories = std::move(labels);
    spec.missing_category = missing;
  }
  return CategoricalDataset(std::move(schema), std::move(cells));
}

CategoricalDataset discretize(const RawTable& table, std::span<const ColumnSpec> schema,
                              std::size_t bins) {
  if (bins < 2) throw UsageError("bins per numeric column must be >= 2");
  if (schema.size() != table.num_columns()) {
    throw SchemaError("schema has " + std::to_string(schema.size()) + " columns, table has " +
                      std::to_string(table.num_columns()));
  }

  std::vector<EncodedColumn> kept;
  for (std::size_t col = 0; col < schema.size(); ++col) {
    EncodedColumn encoded = schema[col].kind == ColumnKind::numeric
                                ? encode_numeric(table, col, schema[col], bins)
                                : encode_categorical(table, col, schema[col]);
    drop_unobserved(encoded);
    if (encoded.spec.cardinality() < 2) {
      warn("column '" + encoded.spec.name + "' has a single category and was dropped");
      continue;
    }
    kept.push_back(std::move(encoded));
  }
  if (kept.empty()) throw SchemaError("no column has two or more categories");

  const std::size_t n = table.num_rows();
  const std::size_t q = kept.size();
  std::vector<std::uint32_t> cells(n * q);
  std::vector<ColumnSpec> out_schema;
  out_schema.reserve(q);
  for (std::size_t c = 0; c < q; ++c) {
    for (std::size_t r = 0; r < n; ++r) cells[r * q + c] = kept[c].cells[r];
    out_schema.push_back(std::move(kept[c].spec));
  }
  return CategoricalDataset(std::move(out_schema), std::move(cells));
}

PartitionedStore::PartitionedStore(std::size_t num_rows, std::vector<RowBlock> blocks)
    : num_rows_(num_rows), blocks_(std::move(blocks)) {
  std::size_t next = 0;
  for (const auto& b : blocks_) {
    if (b.offset != next) throw UsageError("partition blocks must be contiguous and ordered");
    next += b.count;
  }
  if (next != num_rows_ || blocks_.empty()) {
    throw UsageError("partition blocks must cover every row");
  }
}

PartitionedStore partition(std::size_t num_rows, std::size_t num_partitions) {
  if (num_partitions == 0) throw UsageError("partition count must be >= 1");
  if (num_rows == 0) return PartitionedStore(0, {RowBlock{0, 0}});
  if (num_partitions > num_rows) {
    warn("partition count " + std::to_string(num_partitions) + " exceeds row count " +
         std::to_string(num_rows) + "; clamped");
    num_partitions = num_rows;
  }
  const std::size_t base = num_rows / num_partitions;
  const std::size_t extra = num_rows % num_partitions;
  std::vector<RowBlock> blocks;
  blocks.reserve(num_partitions);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < num_partitions; ++p) {
    const std::size_t count = base + (p < extra ? 1 : 0);
    blocks.push_back({offset, count});
    offset += count;
  }
  return PartitionedStore(num_rows, std::move(blocks));
}

CategoricalDataset replicate_to_size(const CategoricalDataset& dataset, std::size_t target_n,
                                     std::uint64_t seed) {
  const std::size_t n = dataset.num_rows();
  if (target_n < n) {
    throw UsageError("replicate_to_size: target " + std::to_string(target_n) +
                     " is below the row count " + std::to_string(n) + "; take a subset instead");
  }
  if (target_n == n) return dataset;
  if (n == 0) throw UsageError("replicate_to_size: cannot grow an empty dataset");

  const std::size_t q = dataset.num_columns();
  std::vector<std::uint32_t> cells(dataset.cells().begin(), dataset.cells().end());
  cells.reserve(target_n * q);
  Rng rng(seed);
  for (std::size_t i = n; i < target_n; ++i) {
    const auto src = dataset.row(uniform_index(rng, n));
    cells.insert(cells.end(), src.begin(), src.end());
  }
  return CategoricalDataset(dataset.schema(), std::move(cells));
}

void write_schema(std::ostream& out, std::span<const ColumnSpec> schema) {
  for (const auto& spec : schema) {
    out << spec.name << ',';
    if (spec.kind == ColumnKind::numeric) {
      out << "numeric,";
      for (std::size_t i = 0; i < spec.bin_edges.size(); ++i) {
        if (i) out << ';';
        out << format_double(spec.bin_edges[i]);
      }
    } else {
      out << "categorical," << spec.cardinality();
    }
    out << '\n';
  }
}

}  // namespace rhclus::ingest
