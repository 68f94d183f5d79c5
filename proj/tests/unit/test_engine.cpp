#include <gtest/gtest.h>

#include <atomic>
#include <map>

#include "rhclus/engine.hpp"
#include "rhclus/errors.hpp"

using namespace rhclus;
using namespace rhclus::engine;

namespace {

const std::vector<std::string> kWords = {"to", "be", "or", "not", "to", "be", "that",
                                          "is", "the", "question", "be", "to"};

std::vector<KeyedRecord> word_count(std::size_t partitions, std::size_t mappers,
                                    std::size_t reducers, std::size_t workers) {
  const auto store = ingest::partition(kWords.size(), partitions);
  const JobSpec spec{mappers, reducers, "wc"};
  auto out = run_job(
      spec, store,
      [](std::size_t, RowBlock block, Emitter& e) {
        for (std::size_t r = block.offset; r < block.offset + block.count; ++r) e.emit(kWords[r], "1");
      },
      [](std::string_view key, std::span<const std::string> values, Emitter& e) {
        e.emit(std::string(key), std::to_string(values.size()));
      },
      {workers});
  return out.records;
}

std::string flatten(const std::vector<KeyedRecord>& records) {
  std::string s;
  for (const auto& r : records) s += r.key + "=" + r.value + ";";
  return s;
}

}  // namespace

TEST(Engine, WordCountIndependentOfTopology) {
  const std::string expected = flatten(word_count(1, 1, 1, 1));
  EXPECT_EQ(expected, "be=3;is=1;not=1;or=1;question=1;that=1;the=1;to=3;");
  for (std::size_t p : {1u, 3u, 12u}) {
    for (std::size_t m : {1u, 2u, 5u}) {
      for (std::size_t r : {1u, 2u, 7u}) {
        for (std::size_t w : {1u, 4u}) {
          EXPECT_EQ(flatten(word_count(p, m, r, w)), expected) << p << ' ' << m << ' ' << r << ' ' << w;
        }
      }
    }
  }
}

TEST(Engine, ValuesArriveInPartitionOrder) {
  const auto store = ingest::partition(20, 5);
  const JobSpec spec{3, 2, "order"};
  std::vector<std::string> seen;
  run_job(
      spec, store,
      [](std::size_t p, RowBlock block, Emitter& e) {
        for (std::size_t r = 0; r < block.count; ++r) {
          e.emit("k", std::to_string(p) + ":" + std::to_string(r));
        }
      },
      [&](std::string_view, std::span<const std::string> values, Emitter&) {
        seen.assign(values.begin(), values.end());
      },
      {4});
  ASSERT_EQ(seen.size(), 20u);
  EXPECT_EQ(seen.front(), "0:0");
  EXPECT_EQ(seen[4], "1:0");
  EXPECT_EQ(seen.back(), "4:3");
}

TEST(Engine, EmptyInputYieldsNoRecords) {
  const auto store = ingest::partition(0, 4);
  const auto out = run_job(
      {2, 2, "empty"}, store, [](std::size_t, RowBlock, Emitter&) {},
      [](std::string_view k, std::span<const std::string>, Emitter& e) { e.emit(std::string(k), ""); });
  EXPECT_TRUE(out.records.empty());
}

TEST(Engine, ZeroTasksRejected) {
  const auto store = ingest::partition(4, 2);
  auto map = [](std::size_t, RowBlock, Emitter&) {};
  auto reduce = [](std::string_view, std::span<const std::string>, Emitter&) {};
  EXPECT_THROW(run_job({0, 1, "x"}, store, map, reduce), UsageError);
  EXPECT_THROW(run_job({1, 0, "x"}, store, map, reduce), UsageError);
}

TEST(Engine, ManyTasksFewWorkers) {
  const auto p = set_parallelism({150, 10, "big"}, 8);
  EXPECT_EQ(p.map_tasks, 150u);
  EXPECT_EQ(p.map_workers, 8u);
  EXPECT_EQ(p.reduce_tasks, 10u);
  EXPECT_EQ(p.reduce_workers, 8u);

  const auto store = ingest::partition(1000, 150);
  std::atomic<std::size_t> calls{0};
  const auto out = run_job(
      {150, 75, "big"}, store,
      [&](std::size_t p, RowBlock b, Emitter& e) {
        ++calls;
        e.emit(index_key('p', p), std::to_string(b.count));
      },
      [](std::string_view k, std::span<const std::string> v, Emitter& e) {
        e.emit(std::string(k), v.front());
      },
      {8});
  EXPECT_EQ(calls.load(), 150u);
  ASSERT_EQ(out.records.size(), 150u);
  std::size_t total = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    EXPECT_EQ(parse_index_key(out.records[i].key), i);
    total += std::stoul(out.records[i].value);
  }
  EXPECT_EQ(total, 1000u);
}

TEST(Engine, MapFailureNamesPartition) {
  const auto store = ingest::partition(10, 5);
  try {
    run_job(
        {5, 1, "boom"}, store,
        [](std::size_t p, RowBlock, Emitter&) {
          if (p == 3) throw std::runtime_error("bad record");
        },
        [](std::string_view, std::span<const std::string>, Emitter&) {});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("partition 3"), std::string::npos) << what;
    EXPECT_NE(what.find("bad record"), std::string::npos) << what;
  }
}

TEST(Engine, ReduceFailureNamesKey) {
  const auto store = ingest::partition(4, 2);
  try {
    run_job(
        {2, 2, "boom"}, store, [](std::size_t, RowBlock, Emitter& e) { e.emit("bad", "x"); },
        [](std::string_view, std::span<const std::string>, Emitter&) {
          throw SchemaError("no");
        });
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos) << e.what();
  }
}

TEST(Engine, PayloadRoundTrip) {
  const std::vector<double> d = {0.0, -1.5, 1e-300, 3.141592653589793};
  EXPECT_EQ(unpack_doubles(pack_doubles(d)), d);
  const std::vector<std::uint64_t> c = {0, 1, 1ull << 60};
  std::vector<std::uint64_t> back(3);
  unpack_counts(pack_counts(c), back);
  EXPECT_EQ(back, c);
  EXPECT_LT(index_key('v', 2), index_key('v', 10));
  EXPECT_EQ(parse_index_key(index_key('v', 123456789)), 123456789u);
}

TEST(Engine, MetricsLine) {
  std::ostringstream out;
  write_metrics_line(out, {"job", 4, 2, 0.5, 0.25, 0.125, 1.0, 0, 0});
  EXPECT_EQ(out.str(), "job,4,2,0.5,0.25,0.125,1\n");
}
