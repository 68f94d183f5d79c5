#include "rhclus/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstring>
#include <exception>
#include <iterator>
#include <mutex>
#include <thread>

#include "rhclus/errors.hpp"
#include "rhclus/text_format.hpp"

namespace rhclus::engine {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs task(0..count-1) on up to `workers` threads pulling from a shared
// counter. The first exception stops further pulls and is rethrown.
template <class Task>
void run_tasks(std::size_t count, std::size_t workers, Task&& task) {
  if (count == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
  }
  if (error) std::rethrow_exception(error);
}

// FNV-1a, so the key -> reducer assignment is identical on every platform.
std::uint64_t stable_hash(std::string_view key) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Index keys carry raw bytes; render them readably in error messages.
std::string describe_key(std::string_view key) {
  const bool printable = std::all_of(key.begin(), key.end(), [](char c) {
    return c >= 0x20 && c < 0x7f;
  });
  if (printable) return std::string(key);
  if (key.size() == 9) return std::string(1, key[0]) + "#" + std::to_string(parse_index_key(key));
  return "<binary key>";
}

std::size_t hardware_cores() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

template <class T>
std::string pack_raw(std::span<const T> values) {
  std::string out(values.size_bytes(), '\0');
  if (!values.empty()) std::memcpy(out.data(), values.data(), values.size_bytes());
  return out;
}

template <class T>
void unpack_raw(std::string_view bytes, std::span<T> out) {
  if (bytes.size() != out.size_bytes()) {
    throw NumericError("payload size mismatch: " + std::to_string(bytes.size()) + " bytes for " +
                       std::to_string(out.size()) + " values");
  }
  if (!bytes.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
}

}  // namespace

void validate(const JobSpec& spec) {
  if (spec.num_mappers == 0) throw UsageError("job '" + spec.job_name + "': num_mappers must be >= 1");
  if (spec.num_reducers == 0) {
    throw UsageError("job '" + spec.job_name + "': num_reducers must be >= 1");
  }
}

Parallelism set_parallelism(const JobSpec& spec, std::size_t available_cores) {
  validate(spec);
  if (available_cores == 0) throw UsageError("available_cores must be >= 1");
  return {spec.num_mappers, std::min(spec.num_mappers, available_cores), spec.num_reducers,
          std::min(spec.num_reducers, available_cores)};
}

void write_metrics_line(std::ostream& out, const JobMetrics& m) {
  out << m.job_name << ',' << m.num_mappers << ',' << m.num_reducers << ','
      << format_double(m.map_seconds) << ',' << format_double(m.shuffle_seconds) << ','
      << format_double(m.reduce_seconds) << ',' << format_double(m.total_seconds) << '\n';
}

JobOutput run_job(const JobSpec& spec, const PartitionedStore& input, const MapFn& map_fn,
                  const ReduceFn& reduce_fn, const EngineOptions& options) {
  const auto job_start = Clock::now();
  const std::size_t cores = options.max_workers ? options.max_workers : hardware_cores();
  const Parallelism par = set_parallelism(spec, cores);

  JobOutput output;
  output.metrics.job_name = spec.job_name;
  output.metrics.num_mappers = spec.num_mappers;
  output.metrics.num_reducers = spec.num_reducers;
  output.metrics.records_in = input.num_rows();

  // Map. Logical task t owns a contiguous range of partitions, so the
  // concatenation of task buffers is ordered by (origin, emission order).
  const std::size_t partitions = input.num_partitions();
  const std::size_t tasks = std::min(par.map_tasks, partitions);
  std::vector<std::vector<KeyedRecord>> emitted(tasks);
  auto phase_start = Clock::now();
  run_tasks(tasks, par.map_workers, [&](std::size_t t) {
    const std::size_t first = t * partitions / tasks;
    const std::size_t last = (t + 1) * partitions / tasks;
    Emitter emitter;
    for (std::size_t p = first; p < last; ++p) {
      emitter.set_origin(p);
      try {
        map_fn(p, input.block(p), emitter);
      } catch (const Error& e) {
        throw Error(e.kind(), "job '" + spec.job_name + "': map failed on partition " +
                                  std::to_string(p) + ": " + e.what());
      } catch (const std::exception& e) {
        throw NumericError("job '" + spec.job_name + "': map failed on partition " +
                           std::to_string(p) + ": " + e.what());
      }
    }
    emitted[t] = std::move(emitter.records());
  });
  output.metrics.map_seconds = seconds_since(phase_start);

  // Shuffle: route by key hash, then stable-sort each reducer's input by key
  // so values keep their (origin, emission) order.
  phase_start = Clock::now();
  std::vector<std::vector<KeyedRecord>> routed(par.reduce_tasks);
  for (auto& buffer : emitted) {
    for (auto& rec : buffer) {
      routed[stable_hash(rec.key) % par.reduce_tasks].push_back(std::move(rec));
    }
    buffer = {};
  }
  run_tasks(par.reduce_tasks, par.reduce_workers, [&](std::size_t r) {
    std::stable_sort(routed[r].begin(), routed[r].end(),
                     [](const KeyedRecord& a, const KeyedRecord& b) { return a.key < b.key; });
  });
  output.metrics.shuffle_seconds = seconds_since(phase_start);

  // Reduce.
  phase_start = Clock::now();
  std::vector<std::vector<KeyedRecord>> reduced(par.reduce_tasks);
  run_tasks(par.reduce_tasks, par.reduce_workers, [&](std::size_t r) {
    auto& group = routed[r];
    Emitter emitter;
    std::vector<std::string> values;
    for (std::size_t i = 0; i < group.size();) {
      std::size_t j = i;
      values.clear();
      while (j < group.size() && group[j].key == group[i].key) {
        values.push_back(std::move(group[j].value));
        ++j;
      }
      emitter.set_origin(group[i].origin);
      try {
        reduce_fn(group[i].key, values, emitter);
      } catch (const Error& e) {
        throw Error(e.kind(), "job '" + spec.job_name + "': reduce failed on key '" +
                                  describe_key(group[i].key) + "': " + e.what());
      } catch (const std::exception& e) {
        throw NumericError("job '" + spec.job_name + "': reduce failed on key '" +
                           describe_key(group[i].key) + "': " + e.what());
      }
      i = j;
    }
    reduced[r] = std::move(emitter.records());
  });
  for (auto& part : reduced) {
    std::move(part.begin(), part.end(), std::back_inserter(output.records));
  }
  std::stable_sort(output.records.begin(), output.records.end(),
                   [](const KeyedRecord& a, const KeyedRecord& b) {
                     return a.key != b.key ? a.key < b.key : a.origin < b.origin;
                   });
  output.metrics.reduce_seconds = seconds_since(phase_start);
  output.metrics.records_out = output.records.size();
  output.metrics.total_seconds = seconds_since(job_start);
  return output;
}

std::string index_key(char tag, std::uint64_t index) {
  std::string key(9, '\0');
  key[0] = tag;
  for (int i = 0; i < 8; ++i) key[static_cast<std::size_t>(8 - i)] = static_cast<char>((index >> (8 * i)) & 0xff);
  return key;
}

std::uint64_t parse_index_key(std::string_view key) {
  if (key.size() != 9) throw NumericError("malformed index key");
  std::uint64_t index = 0;
  for (std::size_t i = 1; i < 9; ++i) index = (index << 8) | static_cast<unsigned char>(key[i]);
  return index;
}

std::string pack_doubles(std::span<const double> values) { return pack_raw(values); }

std::vector<double> unpack_doubles(std::string_view bytes) {
  std::vector<double> out(bytes.size() / sizeof(double));
  unpack_raw<double>(bytes, out);
  return out;
}

void unpack_doubles(std::string_view bytes, std::span<double> out) { unpack_raw(bytes, out); }

std::string pack_counts(std::span<const std::uint64_t> values) { return pack_raw(values); }

void unpack_counts(std::string_view bytes, std::span<std::uint64_t> out) { unpack_raw(bytes, out); }

}  // namespace rhclus::engine
