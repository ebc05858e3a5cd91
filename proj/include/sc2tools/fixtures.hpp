#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sc2tools/bytes.hpp"
#include "sc2tools/protocol.hpp"

// Synthetic replays in the pinned protocol. Used by tests, the benchmark
// and `sc2tools synth`.
namespace sc2tools::fixtures {

/// Games shorter than this are generated for the "filtered" share of a
/// corpus; pair with FilterSpec::min_duration_loops.
inline constexpr std::uint32_t kMinDurationLoops = 16 * 60 * 2;

struct ReplayFixture {
  std::string map_name = "Fixture Plateau";
  protocol::GameVersion version{5, 0, 11, 81009};
  std::uint32_t duration_loops = 16 * 60 * 12;
  std::int64_t start_time_unix = 1'600'000'000;
  std::vector<protocol::DetailsPlayer> players{{"Alice", "Terran", 1, 0}, {"Bob", "Zerg", 2, 1}};
  std::size_t event_count = 200;
  std::uint64_t seed = 0;  ///< drives event generation
  bool compress = true;
  bool encrypt = false;
};

/// A complete replay archive (user-data header + MPQ).
Bytes build_replay(const ReplayFixture& fixture);

/// Deterministic content of the map file a replay references; its SHA-256
/// is the hash stored in the replay's cache handle.
Bytes map_file_content(std::string_view map_name);
std::string map_hash(std::string_view map_name);

/// Seeded random fixture: 2 players from a nickname pool, random races,
/// one winner, start times spread over 2019-2023.
ReplayFixture random_fixture(std::uint64_t seed, std::size_t nickname_pool = 64);

struct CorpusSpec {
  std::size_t replays = 200;
  double corrupt_fraction = 0.10;
  double short_fraction = 0.05;
  std::uint64_t seed = 1;
  std::size_t nickname_pool = 64;
  std::size_t event_count = 200;
  /// >0 spreads files over this many nested subdirectories.
  std::size_t subdirectories = 0;
};

/// Relative paths (POSIX separators) per planted category.
struct CorpusManifest {
  std::vector<std::string> ok;
  std::vector<std::string> filtered;   ///< duration below kMinDurationLoops
  std::vector<std::string> corrupted;  ///< random bytes, truncation or bad signature
};

/// Writes round(replays * fraction) corrupted and short replays exactly.
CorpusManifest write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

}  // namespace sc2tools::fixtures
