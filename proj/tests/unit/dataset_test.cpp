#include <gtest/gtest.h>

#include "sc2tools/bytes.hpp"
#include "sc2tools/dataset.hpp"
#include "sc2tools/error.hpp"
#include "sc2tools/fixtures.hpp"
#include "sc2tools/zip.hpp"
#include "support/mock_server.hpp"
#include "support/temp_dir.hpp"

using namespace sc2tools;
using namespace sc2tools::dataset;
namespace fs = std::filesystem;

namespace {

extract::ExtractionOptions options() {
  extract::ExtractionOptions o;
  o.clock = fixed_log_clock({});
  o.filters.min_duration_loops = fixtures::kMinDurationLoops;
  return o;
}

}  // namespace

TEST(Dataset, WriteThenReadEquality) {
  sc2test::TempDir t;
  fixtures::write_corpus(t.path() / "in", {.replays = 25, .seed = 11, .event_count = 30});
  const auto files = extract::find_replays(t.path() / "in");
  const auto results = extract::extract_batch(files, t.path() / "in", options(), 2);
  extract::process_replaypack(t.path() / "in", t.path() / "out", options(), 2);
  std::size_t checked = 0;
  for (const auto& r : results) {
    if (!r.record) continue;
    EXPECT_EQ(load_replay(t.path() / "out" / extract::output_name(r.outcome.path)), *r.record);
    ++checked;
  }
  EXPECT_GT(checked, 15u);
}

TEST(Dataset, LoadReplayErrors) {
  sc2test::TempDir t;
  write_file(t.path() / "bad.json", std::string_view("{not json"));
  try {
    load_replay(t.path() / "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
  }
  write_file(t.path() / "obj.json", std::string_view("{}"));
  try {
    load_replay(t.path() / "obj.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SchemaViolation);
  }
}

TEST(Dataset, ReplaypackHandle) {
  sc2test::TempDir t;
  const auto manifest = fixtures::write_corpus(t.path() / "in", {.replays = 20, .seed = 5, .event_count = 5});
  extract::process_replaypack(t.path() / "in", t.path() / "P", options(), 1);
  write_file(t.path() / "P" / "stray.txt", std::string_view("ignored"));
  prep::rename_auxiliary_files(t.path() / "P", "Cup");

  const auto h = ReplaypackHandle::open(t.path() / "P");
  EXPECT_EQ(h.name(), "P");
  EXPECT_EQ(h.size(), manifest.ok.size());
  ASSERT_TRUE(h.summary().has_value());
  EXPECT_EQ(h.summary()->ok, manifest.ok.size());
  EXPECT_TRUE(h.integrity_warnings().empty());
  EXPECT_EQ(h.failed().size(), manifest.corrupted.size() + manifest.filtered.size());
  EXPECT_EQ(h.auxiliary().at("main_log.log").filename(), "Cup_main_log.log");

  std::vector<std::string> sources;
  for (const ReplayRecord& r : h) sources.push_back(r.source_file);
  EXPECT_TRUE(std::is_sorted(sources.begin(), sources.end()));
  EXPECT_EQ(sources.size(), h.size());
}

TEST(Dataset, IntegrityWarning) {
  sc2test::TempDir t;
  fixtures::write_corpus(t.path() / "in", {.replays = 6, .corrupt_fraction = 0, .short_fraction = 0, .event_count = 5});
  extract::process_replaypack(t.path() / "in", t.path() / "P", options(), 1);
  ASSERT_TRUE(fs::remove(t.path() / "P" / "replay_00000.json"));
  const auto h = ReplaypackHandle::open(t.path() / "P");
  EXPECT_EQ(h.size(), 5u);
  ASSERT_EQ(h.integrity_warnings().size(), 1u);
  EXPECT_NE(h.integrity_warnings()[0].find("IntegrityWarning"), std::string::npos);
}

TEST(Dataset, LocalRoot) {
  sc2test::TempDir t;
  std::size_t oks = 0;
  for (const char* p : {"B", "A", "C"}) {
    fixtures::write_corpus(t.path() / "in" / p, {.replays = 8, .seed = static_cast<std::uint64_t>(p[0]), .event_count = 4});
    oks += extract::process_replaypack(t.path() / "in" / p, t.path() / "root" / p, options(), 1).summary.ok;
  }
  const auto d = load_dataset(t.path() / "root");
  ASSERT_EQ(d.replaypacks().size(), 3u);
  EXPECT_EQ(d.replaypacks()[0].name(), "A");
  EXPECT_EQ(d.size(), oks);
  std::size_t n = 0;
  d.for_each([&](const ReplaypackHandle&, const ReplayRecord&) { ++n; });
  EXPECT_EQ(n, oks);
  EXPECT_EQ(d.load(0), d.replaypacks()[0].load(0));
}

TEST(Dataset, EmptyRootAndMissing) {
  sc2test::TempDir t;
  EXPECT_EQ(load_dataset(t.path()).size(), 0u);
  EXPECT_THROW(ReplaypackHandle::open(t.path() / "nope"), Error);
}

TEST(Dataset, ManifestMatchesLocal) {
  sc2test::TempDir t;
  sc2test::MockServer server;
  std::vector<prep::ManifestEntry> manifest;
  for (const char* p : {"A", "B"}) {
    fixtures::write_corpus(t.path() / "in" / p, {.replays = 6, .seed = static_cast<std::uint64_t>(p[0]), .event_count = 4});
    extract::process_replaypack(t.path() / "in" / p, t.path() / "root" / p, options(), 1);
    zip::zip_directory(t.path() / "root" / p, t.path() / (std::string(p) + ".zip"));
    const Bytes z = read_file(t.path() / (std::string(p) + ".zip"));
    server.serve(std::string("/") + p + ".zip", to_string(z));
    manifest.push_back({p, server.url(std::string("/") + p + ".zip"), sha256_hex(z), z.size()});
  }
  const auto local = DatasetHandle::open_local(t.path() / "root");
  const auto remote = DatasetHandle::from_manifest(manifest, t.path() / "cache");
  ASSERT_EQ(remote.size(), local.size());
  for (std::size_t i = 0; i < local.size(); ++i) EXPECT_EQ(remote.load(i), local.load(i));
  const int hits = server.total_hits();
  DatasetHandle::from_manifest(manifest, t.path() / "cache");
  EXPECT_EQ(server.total_hits(), hits);
}
