#include <gtest/gtest.h>

#include <map>

#include "sc2tools/bytes.hpp"
#include "sc2tools/error.hpp"
#include "sc2tools/fixtures.hpp"
#include "sc2tools/prep.hpp"
#include "sc2tools/zip.hpp"
#include "support/mock_server.hpp"
#include "support/temp_dir.hpp"

using namespace sc2tools;
using namespace sc2tools::prep;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put(const fs::path& p, std::string_view text) {
  fs::create_directories(p.parent_path());
  write_file(p, text);
}

/// Relative path -> sha256 of every regular file under `root`.
std::map<std::string, std::string> tree_hashes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const std::string rel = e.path().lexically_relative(root).generic_string();
    out[rel] = e.is_regular_file() ? sha256_file_hex(e.path()) : "<dir>";
  }
  return out;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Io;  // sentinel: nothing thrown
}

}  // namespace

TEST(Zip, RoundTripAndDeterminism) {
  sc2test::TempDir t;
  const fs::path src = t.path() / "A";
  put(src / "x.txt", "hello hello hello hello");
  put(src / "sub" / "y.bin", std::string(5000, '\x07'));
  fs::create_directories(src / "empty");
  zip::zip_directory(src, t.path() / "a1.zip");
  zip::zip_directory(src, t.path() / "a2.zip");
  EXPECT_EQ(read_file(t.path() / "a1.zip"), read_file(t.path() / "a2.zip"));

  zip::unzip(t.path() / "a1.zip", t.path() / "out");
  EXPECT_EQ(tree_hashes(src), tree_hashes(t.path() / "out"));

  const auto entries = zip::read_zip(read_file(t.path() / "a1.zip"));
  std::vector<std::string> names;
  for (const auto& e : entries) names.push_back(e.name);
  EXPECT_EQ(names, (std::vector<std::string>{"empty/", "sub/", "sub/y.bin", "x.txt"}));
}

TEST(Zip, EmptyDirectoryIsValidZip) {
  sc2test::TempDir t;
  fs::create_directories(t.path() / "E");
  zip::zip_directory(t.path() / "E", t.path() / "e.zip");
  EXPECT_EQ(read_file(t.path() / "e.zip").size(), 22u);
  EXPECT_TRUE(zip::read_zip(read_file(t.path() / "e.zip")).empty());
}

TEST(Zip, CorruptionDetected) {
  sc2test::TempDir t;
  put(t.path() / "A" / "x.txt", "abcdefgh");
  zip::zip_directory(t.path() / "A", t.path() / "a.zip");
  Bytes z = read_file(t.path() / "a.zip");
  z[30 + 5] ^= 0xFF;  // first stored payload byte
  EXPECT_EQ(code_of([&] { zip::read_zip(z); }), Errc::ChecksumMismatch);
  EXPECT_EQ(code_of([&] { zip::read_zip(Bytes(10, 0)); }), Errc::ParseError);
}

TEST(Flatten, EmptyInput) {
  sc2test::TempDir t;
  fs::create_directories(t.path() / "in");
  const auto r = flatten_directory(t.path() / "in", t.path() / "out");
  EXPECT_TRUE(r.mapping.empty());
  EXPECT_EQ(json::parse(to_string(read_file(t.path() / "out" / "processed_mapping.json"))), json::object());
}

TEST(Flatten, SameNameDifferentContent) {
  sc2test::TempDir t;
  put(t.path() / "in" / "a" / "b" / "x.SC2Replay", "one");
  put(t.path() / "in" / "a" / "c" / "x.SC2Replay", "two");
  put(t.path() / "in" / "notes.txt", "ignore me");
  const auto r = flatten_directory(t.path() / "in", t.path() / "out");
  ASSERT_EQ(r.mapping.size(), 2u);
  const std::string one = sha256_hex(to_bytes("one")).substr(0, 16) + ".SC2Replay";
  const std::string two = sha256_hex(to_bytes("two")).substr(0, 16) + ".SC2Replay";
  EXPECT_EQ(r.mapping.at(one), "a/b/x.SC2Replay");
  EXPECT_EQ(r.mapping.at(two), "a/c/x.SC2Replay");
  EXPECT_FALSE(fs::exists(t.path() / "out" / "notes.txt"));
  EXPECT_EQ(to_string(read_file(t.path() / "out" / one)), "one");
}

TEST(Flatten, DuplicateContentKept) {
  sc2test::TempDir t;
  put(t.path() / "in" / "a" / "x.SC2Replay", "same");
  put(t.path() / "in" / "b" / "x.SC2Replay", "same");
  const auto r = flatten_directory(t.path() / "in", t.path() / "out");
  ASSERT_EQ(r.mapping.size(), 2u);
  const std::string stem = sha256_hex(to_bytes("same")).substr(0, 16);
  EXPECT_EQ(r.mapping.at(stem + ".SC2Replay"), "a/x.SC2Replay");
  EXPECT_EQ(r.mapping.at(stem + "_1.SC2Replay"), "b/x.SC2Replay");
}

TEST(Flatten, PreservesContentMultiset) {
  sc2test::TempDir t;
  fixtures::write_corpus(t.path() / "in", {.replays = 30, .seed = 4, .event_count = 10, .subdirectories = 4});
  const auto r = flatten_directory(t.path() / "in", t.path() / "out");
  std::multiset<std::string> in, out;
  for (const auto& e : fs::recursive_directory_iterator(t.path() / "in")) {
    if (e.is_regular_file()) in.insert(sha256_file_hex(e.path()));
  }
  for (const auto& [name, rel] : r.mapping) {
    out.insert(sha256_file_hex(t.path() / "out" / name));
    EXPECT_EQ(sha256_file_hex(t.path() / "out" / name), sha256_file_hex(t.path() / "in" / rel));
  }
  EXPECT_EQ(in, out);
}

TEST(Flatten, NonEmptyOutputRejected) {
  sc2test::TempDir t;
  fs::create_directories(t.path() / "in");
  put(t.path() / "out" / "x", "x");
  EXPECT_EQ(code_of([&] { flatten_directory(t.path() / "in", t.path() / "out"); }), Errc::OutputNotEmpty);
}

TEST(Package, OneZipPerDirectory) {
  sc2test::TempDir t;
  put(t.path() / "in" / "A" / "f", "a");
  fs::create_directories(t.path() / "in" / "B");
  put(t.path() / "in" / "loose.txt", "not packaged");
  const auto zips = package_directories(t.path() / "in", t.path() / "out");
  ASSERT_EQ(zips.size(), 2u);
  EXPECT_EQ(zips[0].filename(), "A.zip");
  EXPECT_EQ(zips[1].filename(), "B.zip");
  EXPECT_TRUE(zip::read_zip(read_file(zips[1])).empty());
}

TEST(Rename, PrefixAndIdempotence) {
  sc2test::TempDir t;
  put(t.path() / "main_log.log", "log");
  put(t.path() / "package_summary.json", "{}");
  put(t.path() / "r.json", "{}");
  const auto first = rename_auxiliary_files(t.path(), "TournamentName2024");
  EXPECT_TRUE(fs::exists(t.path() / "TournamentName2024_main_log.log"));
  EXPECT_FALSE(fs::exists(t.path() / "main_log.log"));
  EXPECT_TRUE(fs::exists(t.path() / "r.json"));
  const auto second = rename_auxiliary_files(t.path(), "TournamentName2024");
  EXPECT_EQ(first, second);
  EXPECT_EQ(first.size(), 2u);
}

TEST(Rename, EmptyDirAndConflicts) {
  sc2test::TempDir t;
  EXPECT_TRUE(rename_auxiliary_files(t.path(), "T").empty());
  put(t.path() / "main_log.log", "new");
  put(t.path() / "T_main_log.log", "old");
  EXPECT_EQ(code_of([&] { rename_auxiliary_files(t.path(), "T"); }), Errc::NameExists);
  EXPECT_EQ(code_of([&] { rename_auxiliary_files(t.path(), ""); }), Errc::InvalidConfig);
}

TEST(MergeJson, Cases) {
  EXPECT_EQ(merge_json(json::object(), {{"a", 1}}), (json{{"a", 1}}));
  EXPECT_EQ(merge_json({{"a", 1}}, {{"b", 2}}), (json{{"a", 1}, {"b", 2}}));
  EXPECT_EQ(merge_json({{"a", 1}}, {{"a", 1}}), (json{{"a", 1}}));
  try {
    merge_json({{"a", 1}, {"b", 1}, {"c", 1}}, {{"a", 2}, {"b", 1}, {"c", 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Conflict);
    EXPECT_EQ(e.subject(), "a,c");
  }
  EXPECT_EQ(code_of([] { merge_json(json::array(), json::object()); }), Errc::NotAnObject);
}

TEST(MergeJson, CommutativeAndAssociative) {
  const json a{{"x", 1}, {"y", "s"}}, b{{"z", json::array({1, 2})}}, c{{"w", nullptr}, {"x", 1}};
  EXPECT_EQ(merge_json(a, b), merge_json(b, a));
  EXPECT_EQ(merge_json(merge_json(a, b), c), merge_json(a, merge_json(b, c)));
}

TEST(MergeJson, Files) {
  sc2test::TempDir t;
  put(t.path() / "a.json", R"({"a":1})");
  put(t.path() / "b.json", "[1]");
  put(t.path() / "c.json", "{oops");
  EXPECT_EQ(code_of([&] { merge_json_files(t.path() / "a.json", t.path() / "b.json"); }), Errc::NotAnObject);
  EXPECT_EQ(code_of([&] { merge_json_files(t.path() / "a.json", t.path() / "c.json"); }), Errc::ParseError);
}

TEST(CopyMapping, CopiesAndChecksCounterparts) {
  sc2test::TempDir t;
  for (const char* s : {"A", "B", "C"}) {
    put(t.path() / "in" / s / "processed_mapping.json", std::string(R"({"k":")") + s + "\"}");
    fs::create_directories(t.path() / "out" / s);
  }
  fs::create_directories(t.path() / "in" / "D");
  const auto r = copy_processed_mapping(t.path() / "in", t.path() / "out");
  EXPECT_EQ(r.copied.size(), 3u);
  EXPECT_EQ(r.warnings.size(), 1u);
  for (const char* s : {"A", "B", "C"}) {
    EXPECT_EQ(sha256_file_hex(t.path() / "in" / s / "processed_mapping.json"),
              sha256_file_hex(t.path() / "out" / s / "processed_mapping.json"));
  }
  put(t.path() / "in" / "E" / "processed_mapping.json", "{}");
  EXPECT_EQ(code_of([&] { copy_processed_mapping(t.path() / "in", t.path() / "out"); }), Errc::MissingCounterpart);
}

TEST(DownloadMaps, UniqueFetchesAndCache) {
  sc2test::TempDir t;
  sc2test::MockServer server;
  fs::create_directories(t.path() / "r");
  for (int i = 0; i < 10; ++i) {
    fixtures::ReplayFixture f;
    f.map_name = i % 2 ? "Oxide LE" : "Ephemeron LE";
    f.event_count = 5;
    write_file(t.path() / "r" / ("r" + std::to_string(i) + ".SC2Replay"), fixtures::build_replay(f));
  }
  for (const char* m : {"Oxide LE", "Ephemeron LE"}) {
    const Bytes content = fixtures::map_file_content(m);
    server.serve("/" + fixtures::map_hash(m) + ".s2ma", to_string(content));
  }
  auto r = download_maps({t.path() / "r"}, t.path() / "maps", server.url());
  EXPECT_EQ(r.downloaded.size(), 2u);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(server.total_hits(), 2);
  EXPECT_TRUE(fs::exists(t.path() / "maps" / (fixtures::map_hash("Oxide LE") + ".SC2Map")));

  r = download_maps({t.path() / "r"}, t.path() / "maps", server.url());
  EXPECT_EQ(r.downloaded.size(), 0u);
  EXPECT_EQ(r.present.size(), 2u);
  EXPECT_EQ(server.total_hits(), 2);
}

TEST(DownloadMaps, MissingMapRecorded) {
  sc2test::TempDir t;
  sc2test::MockServer server;
  fs::create_directories(t.path() / "r");
  for (const char* m : {"Oxide LE", "Lightshade LE"}) {
    fixtures::ReplayFixture f;
    f.map_name = m;
    f.event_count = 2;
    write_file(t.path() / "r" / (std::string(m) + ".SC2Replay"), fixtures::build_replay(f));
  }
  server.serve("/" + fixtures::map_hash("Oxide LE") + ".s2ma", to_string(fixtures::map_file_content("Oxide LE")));
  const auto r = download_maps({t.path() / "r"}, t.path() / "maps", server.url());
  EXPECT_EQ(r.downloaded.size(), 1u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].code, Errc::FetchFailed);
  EXPECT_EQ(r.failures[0].name, fixtures::map_hash("Lightshade LE"));
}

TEST(Manifest, Validation) {
  const json ok = json::array({{{"name", "a"}, {"url", "http://x/a"}, {"checksum", std::string(64, 'a')}, {"size_bytes", 1}}});
  EXPECT_EQ(parse_manifest(ok).size(), 1u);
  json bad = ok;
  bad[0]["checksum"] = "abc";
  EXPECT_EQ(code_of([&] { parse_manifest(bad); }), Errc::InvalidConfig);
  bad = ok;
  bad.push_back(ok[0]);
  EXPECT_EQ(code_of([&] { parse_manifest(bad); }), Errc::InvalidConfig);
  bad = ok;
  bad[0]["name"] = "../evil";
  EXPECT_EQ(code_of([&] { parse_manifest(bad); }), Errc::InvalidConfig);
}

TEST(DownloadReplaypacks, VerifyTamperAndSkip) {
  sc2test::TempDir t;
  sc2test::MockServer server;
  std::vector<ManifestEntry> manifest;
  for (const char* name : {"packA", "packB"}) {
    const std::string body = std::string("payload of ") + name;
    server.serve(std::string("/") + name + ".zip", body);
    manifest.push_back({name, server.url(std::string("/") + name + ".zip"), sha256_hex(to_bytes(body)), body.size()});
  }
  server.serve("/tampered.zip", "evil bytes");
  manifest.push_back({"tampered", server.url("/tampered.zip"), sha256_hex(to_bytes("good bytes")), 10});

  auto r = download_replaypacks(manifest, t.path());
  EXPECT_EQ(r.verified, (std::vector<std::string>{"packA", "packB"}));
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].code, Errc::ChecksumMismatch);
  EXPECT_FALSE(fs::exists(t.path() / "tampered.zip"));
  EXPECT_FALSE(fs::exists(t.path() / "tampered.zip.part"));
  EXPECT_EQ(r.transfers, 3u);

  manifest.pop_back();
  const int before = server.total_hits();
  r = download_replaypacks(manifest, t.path());
  EXPECT_EQ(r.transfers, 0u);
  EXPECT_EQ(r.skipped.size(), 2u);
  EXPECT_EQ(server.total_hits(), before);
}

TEST(Pipeline, ConfigValidation) {
  const json good = {{"input_root", "in"}, {"work_root", "w"}, {"output_root", "o"}, {"workers", 2},
                     {"extraction", {{"min_duration_s", 120}}}, {"tournament_names", {{"A", "TA"}}}};
  const PipelineConfig c = parse_pipeline_config(good);
  EXPECT_EQ(c.workers, 2);
  EXPECT_EQ(c.filters.min_duration_loops, 1920u);
  EXPECT_TRUE(c.reproducible);
  json bad = good;
  bad.erase("output_root");
  try {
    parse_pipeline_config(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidConfig);
    EXPECT_EQ(e.subject(), "output_root");
  }
  bad = good;
  bad["workers"] = 0;
  EXPECT_EQ(code_of([&] { parse_pipeline_config(bad); }), Errc::InvalidConfig);
}

TEST(Pipeline, TwoPacksMatchStandaloneRuns) {
  sc2test::TempDir t;
  for (const char* p : {"A", "B"}) {
    fixtures::write_corpus(t.path() / "in" / p, {.replays = 12, .seed = static_cast<std::uint64_t>(p[0]), .event_count = 10});
  }
  fs::create_directories(t.path() / "in" / "Empty");
  extract::ExtractionOptions o;
  o.clock = fixed_log_clock({});
  const auto results = process_replaypacks(t.path() / "in", t.path() / "out", o, 2);
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[1].name, "B");
  EXPECT_EQ(results[2].report->summary.total_replays, 0u);
  extract::process_replaypack(t.path() / "in" / "A", t.path() / "solo", o, 1);
  EXPECT_EQ(tree_hashes(t.path() / "out" / "A"), tree_hashes(t.path() / "solo"));
}

TEST(Pipeline, EndToEndDeterministic) {
  sc2test::TempDir t;
  for (const char* p : {"A", "B", "C"}) {
    fixtures::write_corpus(t.path() / "in" / p,
                           {.replays = 10, .seed = static_cast<std::uint64_t>(p[0]), .event_count = 8, .subdirectories = 2});
  }
  PipelineConfig c;
  c.input_root = t.path() / "in";
  c.work_root = t.path() / "work";
  c.output_root = t.path() / "out";
  c.tournament_names = {{"A", "AlphaCup2024"}};
  c.filters.min_duration_loops = fixtures::kMinDurationLoops;
  const auto r1 = run_pipeline(c);
  ASSERT_EQ(r1.raw_zips.size(), 3u);
  ASSERT_EQ(r1.processed_zips.size(), 3u);
  const auto first = tree_hashes(t.path() / "out");

  bool prefixed = false;
  for (const auto& e : zip::read_zip(read_file(t.path() / "out" / "processed" / "A.zip"))) {
    prefixed |= e.name == "AlphaCup2024_main_log.log";
    EXPECT_NE(e.name, "main_log.log");
  }
  EXPECT_TRUE(prefixed);

  run_pipeline(c);
  EXPECT_EQ(tree_hashes(t.path() / "out"), first);

  c.resume = true;
  const auto r3 = run_pipeline(c);
  EXPECT_TRUE(r3.steps_run.empty());
  EXPECT_EQ(r3.steps_skipped.size(), 6u);
}
