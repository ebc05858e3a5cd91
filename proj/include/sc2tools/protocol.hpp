#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sc2tools/bytes.hpp"
#include "sc2tools/versioned.hpp"

// The pinned replay protocol: field ids and member names used for every
// replay this toolkit reads or generates. Field numbering mirrors the
// public s2protocol header/details layouts where one exists.
namespace sc2tools::protocol {

inline constexpr std::string_view kReplaySignature = "StarCraft II replay\x1b" "11";

inline constexpr std::string_view kDetailsMember = "replay.details";
inline constexpr std::string_view kGameEventsMember = "replay.game.events";

inline constexpr double kLoopsPerSecond = 16.0;

namespace header_field {
inline constexpr versioned::FieldId kSignature = 0;
inline constexpr versioned::FieldId kVersion = 1;
inline constexpr versioned::FieldId kType = 2;
inline constexpr versioned::FieldId kElapsedGameLoops = 3;
}  // namespace header_field

namespace version_field {
inline constexpr versioned::FieldId kFlags = 0;
inline constexpr versioned::FieldId kMajor = 1;
inline constexpr versioned::FieldId kMinor = 2;
inline constexpr versioned::FieldId kRevision = 3;
inline constexpr versioned::FieldId kBuild = 4;
inline constexpr versioned::FieldId kBaseBuild = 5;
}  // namespace version_field

namespace details_field {
inline constexpr versioned::FieldId kPlayerList = 0;
inline constexpr versioned::FieldId kTitle = 1;
inline constexpr versioned::FieldId kTimeUtc = 5;  ///< Windows FILETIME
inline constexpr versioned::FieldId kCacheHandles = 11;
}  // namespace details_field

namespace player_field {
inline constexpr versioned::FieldId kName = 0;
inline constexpr versioned::FieldId kRace = 2;
inline constexpr versioned::FieldId kTeamId = 5;
inline constexpr versioned::FieldId kResult = 8;
}  // namespace player_field

namespace event_field {
inline constexpr versioned::FieldId kLoop = 0;
inline constexpr versioned::FieldId kPlayer = 1;
inline constexpr versioned::FieldId kKind = 2;
inline constexpr versioned::FieldId kPayload = 3;
}  // namespace event_field

/// Event kind counted towards actions-per-minute.
inline constexpr std::string_view kCommandEvent = "cmd";

/// Map cache handle: "s2ma", 2 zero bytes, 2-byte region, 32-byte SHA-256.
inline constexpr std::size_t kCacheHandleSize = 40;
inline constexpr std::string_view kMapHandleType = "s2ma";

struct GameVersion {
  std::uint32_t major = 0;
  std::uint32_t minor = 0;
  std::uint32_t revision = 0;
  std::uint32_t build = 0;

  /// "major.minor.revision.build"
  std::string to_string() const;
  friend bool operator==(const GameVersion&, const GameVersion&) = default;
};

struct ProtocolHeader {
  std::string signature;
  GameVersion version;
  std::uint32_t protocol_number = 0;  ///< base build
  std::uint32_t duration_loops = 0;

  friend bool operator==(const ProtocolHeader&, const ProtocolHeader&) = default;
};

struct DetailsPlayer {
  std::string name;
  std::string race;
  std::int64_t result = 0;  ///< 0 unknown, 1 win, 2 loss, 3 tie
  std::int64_t team = 0;
};

struct ReplayDetails {
  std::vector<DetailsPlayer> players;
  std::string map_name;
  std::int64_t time_utc_filetime = 0;
  std::vector<std::string> map_hashes;  ///< hex SHA-256 of referenced map files
};

struct RawEvent {
  std::int64_t loop = 0;
  std::int64_t player = 0;
  std::string kind;
  versioned::TypedValue payload;
};

/// Errors: SchemaMismatch (missing or mistyped field), plus decoder errors.
ProtocolHeader decode_replay_header(ByteView user_data_content);
ReplayDetails decode_details(ByteView member);
std::vector<RawEvent> decode_game_events(ByteView member);

versioned::TypedValue header_value(const ProtocolHeader& header);
versioned::TypedValue details_value(const ReplayDetails& details);
versioned::TypedValue game_events_value(const std::vector<RawEvent>& events);

/// Windows FILETIME (100 ns ticks since 1601) to Unix seconds and back.
std::int64_t filetime_to_unix(std::int64_t filetime);
std::int64_t unix_to_filetime(std::int64_t unix_seconds);

}  // namespace sc2tools::protocol
