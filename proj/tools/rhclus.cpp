// rhclus: MCA preprocessing + map-reduce fuzzy c-means from the command line.
//
//   rhclus cluster  --input data.csv --c 2 --out-dir out/
//   rhclus sweep    --input data.csv --c-min 2 --c-max 6 --out-dir out/
//   rhclus bench    --input data.csv --c 7 --bench-sizes 100000,200000 \
//                   --bench-deployments 50x25,100x50,150x75
//   rhclus mca-info --input data.csv --out-dir out/

#include <CLI11.hpp>

#include <iostream>

#include "rhclus/commands.hpp"

namespace {

using rhclus::commands::RunConfig;

struct CliState {
  RunConfig config;
  std::string delimiter = ",";
  std::string ignore;
  std::string sizes;
  std::string deployments = "50x25,100x50,150x75";
  std::size_t clusters = 0;
};

void add_common(CLI::App& cmd, CliState& s) {
  cmd.add_option("--input", s.config.input, "CSV input file")->required();
  cmd.add_option("--delimiter", s.delimiter, "Field delimiter (one character, or 'tab')");
  cmd.add_flag("--header,!--no-header", s.config.header, "First row holds column names")
      ->default_val(true);
  cmd.add_option("--ignore-columns", s.ignore,
                 "Comma-separated column names or 0-based indices to leave out");
  cmd.add_option("--bins", s.config.bins, "Quantile bins per numeric column")
      ->default_val(s.config.bins);
  cmd.add_option("--mca-dims", s.config.mca_dims, "Maximum retained MCA axes")
      ->default_val(s.config.mca_dims);
  cmd.add_option("--m", s.config.m, "Fuzziness exponent")->default_val(s.config.m);
  cmd.add_option("--epsilon", s.config.epsilon, "Convergence threshold on memberships")
      ->default_val(s.config.epsilon);
  cmd.add_option("--max-iters", s.config.max_iters, "Iteration cap")
      ->default_val(s.config.max_iters);
  cmd.add_option("--seed", s.config.seed, "Random seed")->default_val(s.config.seed);
  cmd.add_option("--mappers", s.config.mappers, "Map tasks (and partitions)")
      ->default_val(s.config.mappers);
  cmd.add_option("--reducers", s.config.reducers, "Reduce tasks")
      ->default_val(s.config.reducers);
  cmd.add_option("--workers", s.config.workers, "Concurrent worker cap, 0 = all cores")
      ->default_val(s.config.workers);
  cmd.add_option("--out-dir", s.config.out_dir, "Directory for output files")
      ->default_val(".");
}

bool finish(CliState& s) {
  if (s.delimiter == "tab" || s.delimiter == "\\t") s.delimiter = "\t";
  if (s.delimiter.size() != 1) {
    std::cerr << "--delimiter must be a single character\n";
    return false;
  }
  s.config.delimiter = s.delimiter.front();
  if (s.clusters) s.config.clusters = s.clusters;
  std::stringstream ss(s.ignore);
  for (std::string name; std::getline(ss, name, ',');) {
    if (!name.empty()) s.config.ignore_columns.push_back(name);
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cmds = rhclus::commands;

  CLI::App app{"Large-scale clustering of heterogeneous data: MCA + map-reduce fuzzy c-means"};
  app.require_subcommand(1);
  CliState s;

  auto* cluster = app.add_subcommand("cluster", "Fit MCA and run FCM for a fixed c");
  add_common(*cluster, s);
  cluster->add_option("--c", s.clusters, "Number of clusters")->required();

  auto* sweep = app.add_subcommand("sweep", "Validity-index sweep over a range of c");
  add_common(*sweep, s);
  sweep->add_option("--c-min", s.config.c_min, "Smallest c")->default_val(s.config.c_min);
  sweep->add_option("--c-max", s.config.c_max, "Largest c")->default_val(s.config.c_max);

  auto* bench = app.add_subcommand("bench", "Scalability benchmark over sizes and deployments");
  add_common(*bench, s);
  bench->add_option("--c", s.clusters, "Number of clusters")->required();
  bench->add_option("--bench-sizes", s.sizes, "Ascending row counts, e.g. 100000,200000")
      ->required();
  bench->add_option("--bench-deployments", s.deployments, "MAPPERSxREDUCERS list")
      ->default_val(s.deployments);
  bench->add_option("--fixed-iters", s.config.fixed_iters, "Iterations per timed run")
      ->default_val(s.config.fixed_iters);

  auto* info = app.add_subcommand("mca-info", "Write the schema and fitted MCA axes");
  add_common(*info, s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cmds::kUsage;
  }
  if (!finish(s)) return cmds::kUsage;

  if (*cluster) return cmds::cmd_cluster(s.config);
  if (*sweep) {
    if (s.config.c_min > s.config.c_max) {
      std::cerr << "sweep: --c-min must not exceed --c-max\n";
      return cmds::kUsage;
    }
    return cmds::cmd_sweep(s.config);
  }
  if (*bench) {
    try {
      s.config.bench_sizes = cmds::parse_sizes(s.sizes);
      s.config.bench_deployments = cmds::parse_deployments(s.deployments);
    } catch (const rhclus::Error& e) {
      std::cerr << "bench: " << e.what() << '\n';
      return cmds::kUsage;
    }
    return cmds::cmd_bench(s.config);
  }
  return cmds::cmd_mca_info(s.config);
}
