#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sc2tools/protocol.hpp"
#include "sc2tools/versioned.hpp"

namespace sc2tools {

/// Schema version of emitted replay documents; stored in every record as
/// `toolset_version` and in schema/replay_record.schema.json.
inline constexpr std::string_view kSchemaVersion = "1.0.0";

enum class Race { Terran, Zerg, Protoss, Random };
enum class GameResult { Win, Loss, Tie, Unknown };

std::string_view to_string(Race race);
std::string_view to_string(GameResult result);
std::optional<Race> parse_race(std::string_view s);
std::optional<GameResult> parse_result(std::string_view s);

struct PlayerInfo {
  std::string nickname;
  Race race = Race::Random;
  GameResult result = GameResult::Unknown;
  double apm = 0.0;

  friend bool operator==(const PlayerInfo&, const PlayerInfo&) = default;
};

struct GameEvent {
  std::uint32_t loop = 0;
  std::int32_t player_index = 0;
  std::string kind;
  versioned::TypedValue payload;

  friend bool operator==(const GameEvent&, const GameEvent&) = default;
};

struct ReplayRecord {
  protocol::ProtocolHeader header;
  std::string map_name;
  std::uint32_t game_duration_loops = 0;
  double game_duration_seconds = 0.0;  ///< game_duration_loops / 16
  std::int64_t start_time_utc = 0;     ///< Unix seconds
  std::vector<PlayerInfo> players;
  std::vector<GameEvent> events;       ///< non-decreasing by loop
  std::string source_file;
  std::string toolset_version{kSchemaVersion};

  friend bool operator==(const ReplayRecord&, const ReplayRecord&) = default;
};

/// "PvZ"-style matchup for two-player records (race initials, sorted);
/// nullopt otherwise.
std::optional<std::string> matchup(const ReplayRecord& record);

/// Canonical JSON form: keys in lexicographic order, so serialized
/// documents are byte-comparable.
nlohmann::json record_to_json(const ReplayRecord& record);
std::string dump_record(const ReplayRecord& record);

/// Full schema validation. Throws Error(SchemaViolation, field_path) where
/// field_path looks like "players[1].race" or "header.version.build".
ReplayRecord record_from_json(const nlohmann::json& j);

/// Invariant checks shared by the extractor and the loader; throws
/// Error(SchemaViolation, field_path).
void validate_record(const ReplayRecord& record);

/// Required top-level keys of a replay document, in schema order.
const std::vector<std::string>& record_fields();

}  // namespace sc2tools
