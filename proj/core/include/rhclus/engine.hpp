#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhclus/ingest.hpp"

namespace rhclus::engine {

using ingest::PartitionedStore;
using ingest::RowBlock;

struct JobSpec {
  std::size_t num_mappers = 1;
  std::size_t num_reducers = 1;
  std::string job_name = "job";
};

/// Throws UsageError when either count is zero.
void validate(const JobSpec& spec);

/// One map emission. `origin` is the partition that produced it and is the
/// secondary sort key in the shuffle.
struct KeyedRecord {
  std::string key;
  std::string value;
  std::size_t origin = 0;
};

struct JobMetrics {
  std::string job_name;
  std::size_t num_mappers = 0;
  std::size_t num_reducers = 0;
  double map_seconds = 0.0;
  double shuffle_seconds = 0.0;
  double reduce_seconds = 0.0;
  double total_seconds = 0.0;
  std::size_t records_in = 0;
  std::size_t records_out = 0;
};

/// `job_name,num_mappers,num_reducers,map_s,shuffle_s,reduce_s,total_s`
void write_metrics_line(std::ostream& out, const JobMetrics& metrics);

struct Parallelism {
  std::size_t map_tasks = 1;
  std::size_t map_workers = 1;
  std::size_t reduce_tasks = 1;
  std::size_t reduce_workers = 1;
};

/// Logical task counts stay as requested; concurrent workers are capped by
/// the available cores.
Parallelism set_parallelism(const JobSpec& spec, std::size_t available_cores);

/// Collects emissions for one map task or one reduce task.
class Emitter {
 public:
  void emit(std::string key, std::string value) {
    records_.push_back({std::move(key), std::move(value), origin_});
  }

  void set_origin(std::size_t origin) noexcept { origin_ = origin; }
  std::vector<KeyedRecord>& records() noexcept { return records_; }

 private:
  std::vector<KeyedRecord> records_;
  std::size_t origin_ = 0;
};

using MapFn = std::function<void(std::size_t partition, RowBlock block, Emitter& out)>;
/// `values` arrive ordered by (origin partition, emission order).
using ReduceFn =
    std::function<void(std::string_view key, std::span<const std::string> values, Emitter& out)>;

struct JobOutput {
  /// Reduce emissions sorted by key (stable), independent of scheduling.
  std::vector<KeyedRecord> records;
  JobMetrics metrics;
};

struct EngineOptions {
  /// Cap on concurrent workers; 0 means std::thread::hardware_concurrency().
  std::size_t max_workers = 0;
};

/// Runs map -> shuffle -> reduce over the store's partitions. Each partition is
/// mapped by exactly one task. A throwing map_fn or reduce_fn aborts the job
/// with an error naming the partition or key.
JobOutput run_job(const JobSpec& spec, const PartitionedStore& input, const MapFn& map_fn,
                  const ReduceFn& reduce_fn, const EngineOptions& options = {});

/// Same as above with an explicit read-only broadcast context handed to both
/// functions.
template <class Context, class Map, class Reduce>
  requires std::invocable<Map&, const Context&, std::size_t, RowBlock, Emitter&>
JobOutput run_job(const JobSpec& spec, const PartitionedStore& input, const Context& broadcast,
                  Map&& map_fn, Reduce&& reduce_fn, const EngineOptions& options = {}) {
  return run_job(
      spec, input,
      [&](std::size_t p, RowBlock b, Emitter& out) { map_fn(broadcast, p, b, out); },
      [&](std::string_view k, std::span<const std::string> v, Emitter& out) {
        reduce_fn(broadcast, k, v, out);
      },
      options);
}

// Payload helpers. Keys built by index_key sort in numeric order.
std::string index_key(char tag, std::uint64_t index);
std::uint64_t parse_index_key(std::string_view key);
std::string pack_doubles(std::span<const double> values);
std::vector<double> unpack_doubles(std::string_view bytes);
void unpack_doubles(std::string_view bytes, std::span<double> out);
std::string pack_counts(std::span<const std::uint64_t> values);
void unpack_counts(std::string_view bytes, std::span<std::uint64_t> out);

}  // namespace rhclus::engine
