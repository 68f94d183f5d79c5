#include "rhclus/commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rhclus/points.hpp"
#include "rhclus/text_format.hpp"
#include "rhclus/validity.hpp"

namespace rhclus::commands {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void prepare_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

template <class Body>
int guarded(const char* command, Body&& body) {
  try {
    body();
    return kSuccess;
  } catch (const Error& e) {
    std::cerr << command << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    std::cerr << command << ": out of memory\n";
    return kNumeric;
  }
}

std::size_t parse_count(const std::string& token) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || value < 0 || value != static_cast<double>(static_cast<std::size_t>(value))) {
    throw UsageError("not a row count: '" + token + "'");
  }
  return static_cast<std::size_t>(value);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return kUsage;
    case ErrorKind::io: return kIo;
    case ErrorKind::schema: return kSchema;
    case ErrorKind::numeric: return kNumeric;
  }
  return kNumeric;
}

void validate(const RunConfig& config) {
  if (config.bins < 2) throw UsageError("--bins must be >= 2");
  if (config.mca_dims < 1) throw UsageError("--mca-dims must be >= 1");
  if (config.clusters && *config.clusters < 2) throw UsageError("--c must be >= 2");
  if (config.c_min < 2 || config.c_min > config.c_max) {
    throw UsageError("need 2 <= --c-min <= --c-max");
  }
  if (!(config.m > 1.0)) throw UsageError("--m must be > 1");
  if (!(config.epsilon > 0.0)) throw UsageError("--epsilon must be > 0");
  if (config.max_iters < 1) throw UsageError("--max-iters must be >= 1");
  if (config.mappers < 1 || config.reducers < 1) {
    throw UsageError("--mappers and --reducers must be >= 1");
  }
  if (config.fixed_iters < 1) throw UsageError("--fixed-iters must be >= 1");
}

ingest::CategoricalDataset load_dataset(const RunConfig& config) {
  auto table = ingest::load_csv(config.input, {config.header, config.delimiter});
  table = ingest::drop_columns(std::move(table), config.ignore_columns);
  const auto schema = ingest::infer_schema(table);
  return ingest::discretize(table, schema, config.bins);
}

engine::JobSpec job_spec(const RunConfig& config, std::string name) {
  return {config.mappers, config.reducers, std::move(name)};
}

engine::EngineOptions engine_options(const RunConfig& config) { return {config.workers}; }

fcm::Config fcm_config(const RunConfig& config) {
  fcm::Config out;
  out.clusters = config.clusters.value_or(2);
  out.m = config.m;
  out.epsilon = config.epsilon;
  out.max_iters = config.max_iters;
  out.seed = config.seed;
  return out;
}

mca::Model fit_model(const ingest::CategoricalDataset& dataset,
                     const ingest::PartitionedStore& store, const RunConfig& config,
                     std::vector<engine::JobMetrics>* metrics) {
  auto stats = mca::accumulate_burt(dataset, store, job_spec(config, "burt"),
                                    engine_options(config));
  if (metrics) metrics->push_back(stats.metrics);
  mca::FitOptions fit;
  fit.max_dims = config.mca_dims;
  return mca::fit_mca(stats.margins, stats.burt, fit);
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  for (const auto& token : split(text, ',')) sizes.push_back(parse_count(token));
  if (sizes.empty()) throw UsageError("no bench sizes given");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw UsageError("bench sizes must be ascending");
  }
  return sizes;
}

std::vector<Deployment> parse_deployments(const std::string& text) {
  std::vector<Deployment> out;
  for (const auto& token : split(text, ',')) {
    const auto x = token.find_first_of("xX:");
    if (x == std::string::npos) throw UsageError("deployment '" + token + "' is not MxR");
    Deployment dep{parse_count(token.substr(0, x)), parse_count(token.substr(x + 1))};
    if (dep.mappers == 0 || dep.reducers == 0) {
      throw UsageError("deployment '" + token + "' needs positive counts");
    }
    out.push_back(dep);
  }
  if (out.empty()) throw UsageError("no deployments given");
  return out;
}

BenchReport run_bench(const ingest::CategoricalDataset& dataset, const RunConfig& config) {
  if (config.bench_sizes.empty() || config.bench_deployments.empty()) {
    throw UsageError("bench needs --bench-sizes and --bench-deployments");
  }
  BenchReport report;
  for (const std::size_t size : config.bench_sizes) {
    ingest::CategoricalDataset data;
    if (size <= dataset.num_rows()) {
      data = ingest::compact_categories(dataset.head(size));
    } else {
      data = ingest::replicate_to_size(dataset, size, config.seed);
      report.duplicated.emplace_back(size, size - dataset.num_rows());
    }
    for (const auto& dep : config.bench_deployments) {
      RunConfig run = config;
      run.mappers = dep.mappers;
      run.reducers = dep.reducers;
      fcm::Config fc = fcm_config(run);
      fc.max_iters = config.fixed_iters;
      fc.fixed_iterations = true;
      fc.track_objective = false;

      const auto start = std::chrono::steady_clock::now();
      const auto store = ingest::partition(data, dep.mappers);
      const auto model = fit_model(data, store, run);
      const ProjectedRecords points(data, model);
      fcm::run_fcm(store, points, fc, job_spec(run, "bench"), engine_options(run));
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.rows.push_back({size, dep, seconds});
    }
  }
  return report;
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
  out << "instances,mappers,reducers,seconds\n";
  for (const auto& row : report.rows) {
    out << row.instances << ',' << row.deployment.mappers << ',' << row.deployment.reducers << ','
        << format_double(row.seconds) << '\n';
  }
}

int cmd_cluster(const RunConfig& config) {
  return guarded("cluster", [&] {
    validate(config);
    if (!config.clusters) throw UsageError("cluster needs --c");
    const auto dataset = load_dataset(config);
    prepare_out_dir(config.out_dir);

    std::vector<engine::JobMetrics> metrics;
    const auto store = ingest::partition(dataset, config.mappers);
    const auto model = fit_model(dataset, store, config, &metrics);
    const ProjectedRecords points(dataset, model);
    const auto result =
        fcm::run_fcm(store, points, fcm_config(config), job_spec(config, "fcm"),
                     engine_options(config));
    metrics.insert(metrics.end(), result.job_metrics.begin(), result.job_metrics.end());

    auto u = open_output(config.out_dir / "memberships.csv");
    fcm::write_matrix_csv(u, result.memberships);
    auto v = open_output(config.out_dir / "centroids.csv");
    fcm::write_matrix_csv(v, result.centroids);
    auto trace = open_output(config.out_dir / "trace.csv");
    fcm::write_trace_csv(trace, result);
    auto jobs = open_output(config.out_dir / "metrics.csv");
    for (const auto& m : metrics) engine::write_metrics_line(jobs, m);

    std::cout << "n=" << dataset.num_rows() << " Q=" << dataset.num_columns()
              << " J=" << dataset.num_categories() << " d=" << model.dims()
              << " c=" << *config.clusters << " iterations=" << result.iterations
              << " converged=" << (result.converged ? "true" : "false") << '\n';
  });
}

int cmd_sweep(const RunConfig& config) {
  return guarded("sweep", [&] {
    validate(config);
    const auto dataset = load_dataset(config);
    prepare_out_dir(config.out_dir);

    const auto store = ingest::partition(dataset, config.mappers);
    const auto model = fit_model(dataset, store, config);
    const ProjectedRecords points(dataset, model);
    const auto report = validity::sweep(store, points, config.c_min, config.c_max,
                                        fcm_config(config), job_spec(config, "sweep"),
                                        engine_options(config));

    auto csv = open_output(config.out_dir / "validity.csv");
    validity::write_validity_csv(csv, report);
    auto plot = open_output(config.out_dir / "validity_plot.dat");
    validity::write_plot_data(plot, report);

    std::cout << "consensus_c=" << report.consensus_c << " votes=" << report.consensus_votes()
              << "/4";
    for (const auto index : validity::kAllIndices) {
      std::cout << ' ' << validity::index_name(index) << '=' << report.best(index);
    }
    std::cout << '\n';
  });
}

int cmd_bench(const RunConfig& config) {
  return guarded("bench", [&] {
    validate(config);
    const auto dataset = load_dataset(config);
    prepare_out_dir(config.out_dir);
    const auto report = run_bench(dataset, config);
    auto csv = open_output(config.out_dir / "bench.csv");
    write_bench_csv(csv, report);
    for (const auto& [size, added] : report.duplicated) {
      std::cout << "size " << size << ": duplicated " << added << " rows\n";
    }
    std::cout << "wrote " << report.rows.size() << " timing rows\n";
  });
}

int cmd_mca_info(const RunConfig& config) {
  return guarded("mca-info", [&] {
    validate(config);
    const auto dataset = load_dataset(config);
    prepare_out_dir(config.out_dir);
    const auto store = ingest::partition(dataset, config.mappers);
    const auto model = fit_model(dataset, store, config);

    auto schema = open_output(config.out_dir / "schema.csv");
    ingest::write_schema(schema, dataset.schema());
    auto axes = open_output(config.out_dir / "mca_axes.csv");
    mca::write_axes(axes, model);
    auto loadings = open_output(config.out_dir / "mca_loadings.csv");
    mca::write_loadings(loadings, model);

    std::cout << "n=" << dataset.num_rows() << " Q=" << dataset.num_columns()
              << " J=" << dataset.num_categories() << " total_inertia="
              << format_double(model.total_inertia()) << " retained=" << model.dims() << '\n';
    mca::write_axes(std::cout, model);
  });
}

}  // namespace rhclus::commands
