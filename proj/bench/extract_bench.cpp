// Serial reference vs OpenMP batch extraction over one synthetic replaypack.

#include <benchmark/benchmark.h>

#include <cstdlib>
#include <filesystem>

#include "sc2tools/extractor.hpp"
#include "sc2tools/fixtures.hpp"

using namespace sc2tools;
namespace fs = std::filesystem;

namespace {

struct Corpus {
  fs::path dir;
  std::vector<fs::path> files;

  Corpus() {
    char tmpl[] = "/tmp/sc2bench.XXXXXX";
    dir = mkdtemp(tmpl);
    fixtures::write_corpus(dir, {.replays = 200, .seed = 3, .event_count = 400});
    files = extract::find_replays(dir);
  }
  ~Corpus() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

Corpus& corpus() {
  static Corpus c;
  return c;
}

extract::ExtractionOptions options() {
  extract::ExtractionOptions o;
  o.clock = fixed_log_clock({});
  o.filters.min_duration_loops = fixtures::kMinDurationLoops;
  return o;
}

void BM_ExtractSerial(benchmark::State& state) {
  auto& c = corpus();
  const auto o = options();
  for (auto _ : state) benchmark::DoNotOptimize(extract::extract_batch_serial(c.files, c.dir, o));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.files.size()));
}

void BM_ExtractParallel(benchmark::State& state) {
  auto& c = corpus();
  const auto o = options();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(extract::extract_batch(c.files, c.dir, o, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.files.size()));
}

}  // namespace

BENCHMARK(BM_ExtractSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExtractParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
