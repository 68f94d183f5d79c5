#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rhclus/engine.hpp"
#include "rhclus/errors.hpp"
#include "rhclus/fcm.hpp"
#include "rhclus/ingest.hpp"
#include "rhclus/mca.hpp"

namespace rhclus::commands {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kIo = 3,
  kSchema = 4,
  kNumeric = 5,
};

int exit_code(ErrorKind kind);

struct Deployment {
  std::size_t mappers = 1;
  std::size_t reducers = 1;
};

struct RunConfig {
  std::filesystem::path input;
  char delimiter = ',';
  bool header = true;
  std::vector<std::string> ignore_columns;
  std::size_t bins = 4;
  std::size_t mca_dims = 8;
  std::optional<std::size_t> clusters;
  std::size_t c_min = 2;
  std::size_t c_max = 6;
  double m = 2.0;
  double epsilon = 1e-5;
  std::size_t max_iters = 100;
  std::uint64_t seed = 42;
  std::size_t mappers = 4;
  std::size_t reducers = 2;
  /// 0 = hardware concurrency.
  std::size_t workers = 0;
  std::filesystem::path out_dir = ".";
  std::vector<std::size_t> bench_sizes;
  std::vector<Deployment> bench_deployments;
  std::size_t fixed_iters = 10;
};

/// Throws UsageError for violated constraints (c < 2, m <= 1, ...).
void validate(const RunConfig& config);

/// load_csv -> drop_columns -> infer_schema -> discretize.
ingest::CategoricalDataset load_dataset(const RunConfig& config);

engine::JobSpec job_spec(const RunConfig& config, std::string name);
engine::EngineOptions engine_options(const RunConfig& config);
fcm::Config fcm_config(const RunConfig& config);

/// Burt accumulation plus MCA fit on the given store.
mca::Model fit_model(const ingest::CategoricalDataset& dataset,
                     const ingest::PartitionedStore& store, const RunConfig& config,
                     std::vector<engine::JobMetrics>* metrics = nullptr);

struct BenchRow {
  std::size_t instances = 0;
  Deployment deployment;
  double seconds = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// Rows appended by replicate_to_size for each size that exceeded the input.
  std::vector<std::pair<std::size_t, std::size_t>> duplicated;
};

/// For each size (taking the first k rows, or replicating up to k) and each
/// deployment: fit MCA and run a fixed-iteration FCM, timing the whole run.
BenchReport run_bench(const ingest::CategoricalDataset& dataset, const RunConfig& config);
void write_bench_csv(std::ostream& out, const BenchReport& report);

/// Parse "100000,200000" and "50x25,100x50".
std::vector<std::size_t> parse_sizes(const std::string& text);
std::vector<Deployment> parse_deployments(const std::string& text);

// Subcommands. Each returns an exit code and prints a one-line diagnostic on
// failure.
int cmd_cluster(const RunConfig& config);
int cmd_sweep(const RunConfig& config);
int cmd_bench(const RunConfig& config);
int cmd_mca_info(const RunConfig& config);

}  // namespace rhclus::commands
