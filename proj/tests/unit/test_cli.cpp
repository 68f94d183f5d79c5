#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData = RHCLUS_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(RHCLUS_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(RHCLUS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string consensus_line(const fs::path& validity) {
  std::istringstream in(slurp(validity));
  std::string line, last;
  while (std::getline(in, line)) {
    if (line.rfind("# consensus_c=", 0) == 0) last = line;
  }
  return last;
}

}  // namespace

TEST(Cli, MissingInputIsIoError) {
  const auto out = scratch("missing");
  EXPECT_EQ(run("cluster --input /no/such/file.csv --c 2 --out-dir " + out.string()), 3);
}

TEST(Cli, UsageErrors) {
  const auto out = scratch("usage");
  const std::string in = (kData / "mammographic-masses.csv").string();
  EXPECT_EQ(run("cluster --input " + in + " --out-dir " + out.string()), 2);
  EXPECT_EQ(run("cluster --input " + in + " --c 1 --out-dir " + out.string()), 2);
  EXPECT_EQ(run("cluster --input " + in + " --c 2 --m 1 --out-dir " + out.string()), 2);
  EXPECT_EQ(run("sweep --input " + in + " --c-min 4 --c-max 3 --out-dir " + out.string()), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST(Cli, RaggedInputIsSchemaError) {
  const auto dir = scratch("ragged");
  std::ofstream(dir / "bad.csv") << "a,b\n1,2\n3\n";
  EXPECT_EQ(run("cluster --input " + (dir / "bad.csv").string() + " --c 2 --out-dir " + dir.string()), 4);
}

TEST(Cli, ClusterWritesOutputs) {
  const auto out = scratch("cluster");
  ASSERT_EQ(run("cluster --input " + (kData / "mammographic-masses.csv").string() +
                " --c 2 --out-dir " + out.string()),
            0);
  for (const char* f : {"memberships.csv", "centroids.csv", "trace.csv", "metrics.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const std::string trace = slurp(out / "trace.csv");
  EXPECT_EQ(trace.rfind("iter,jm,max_delta_u\n", 0), 0u);
}

TEST(Cli, RerunsAreByteIdentical) {
  const std::string in = (kData / "mammographic-masses.csv").string();
  for (const char* topo : {"--mappers 1 --reducers 1", "--mappers 4 --reducers 2", "--mappers 9 --reducers 5"}) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    const std::string common = "cluster --input " + in + " --c 3 --seed 7 " + topo;
    ASSERT_EQ(run(common + " --out-dir " + a.string()), 0);
    ASSERT_EQ(run(common + " --out-dir " + b.string()), 0);
    for (const char* f : {"memberships.csv", "centroids.csv", "trace.csv"}) {
      EXPECT_EQ(slurp(a / f), slurp(b / f)) << topo << ' ' << f;
    }
  }
}

TEST(Cli, SweepSingleC) {
  const auto out = scratch("sweep_single");
  ASSERT_EQ(run("sweep --input " + (kData / "mammographic-masses.csv").string() +
                " --c-min 2 --c-max 2 --out-dir " + out.string()),
            0);
  std::istringstream in(slurp(out / "validity.csv"));
  std::string line;
  std::size_t data_rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "c,pc,pe,xb,sc,iters,jm");
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++data_rows;
  }
  EXPECT_EQ(data_rows, 1u);
  EXPECT_EQ(consensus_line(out / "validity.csv").rfind("# consensus_c=2 ", 0), 0u);
  EXPECT_TRUE(fs::exists(out / "validity_plot.dat"));
}

TEST(Cli, LatentClassSyntheticFindsThree) {
  const auto dir = scratch("latent");
  std::mt19937_64 rng(2024);
  const auto ds = rhclus::oracle::latent_class(900, 6, 3, 3, 0.8, rng);
  {
    std::ofstream csv(dir / "latent.csv");
    for (std::size_t q = 0; q < ds.num_columns(); ++q) csv << (q ? "," : "") << "attr" << q;
    csv << '\n';
    for (std::size_t k = 0; k < ds.num_rows(); ++k) {
      for (std::size_t q = 0; q < ds.num_columns(); ++q) csv << (q ? "," : "") << "v" << ds.row(k)[q];
      csv << '\n';
    }
  }
  ASSERT_EQ(run("sweep --input " + (dir / "latent.csv").string() + " --out-dir " + dir.string()), 0);
  EXPECT_EQ(consensus_line(dir / "validity.csv"), "# consensus_c=3 pc=3 pe=3 xb=3 sc=3");
}

TEST(Cli, McaInfoAndBench) {
  const auto out = scratch("info");
  const std::string in = (kData / "mammographic-masses.csv").string();
  ASSERT_EQ(run("mca-info --input " + in + " --out-dir " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "schema.csv"));
  EXPECT_TRUE(fs::exists(out / "mca_axes.csv"));
  EXPECT_TRUE(fs::exists(out / "mca_loadings.csv"));

  ASSERT_EQ(run("bench --input " + in + " --c 2 --bench-sizes 400,1000 --bench-deployments 2x1,4x2"
                " --fixed-iters 2 --out-dir " + out.string()),
            0);
  std::istringstream csv(slurp(out / "bench.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "instances,mappers,reducers,seconds");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4u);
  EXPECT_EQ(run("bench --input " + in + " --c 2 --bench-sizes 1000,400 --out-dir " + out.string()), 2);
}
