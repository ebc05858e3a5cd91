#include "sc2tools/record.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "sc2tools/error.hpp"
#include "sc2tools/versioned_json.hpp"

namespace sc2tools {

using nlohmann::json;

std::string_view to_string(Race race) {
  switch (race) {
    case Race::Terran: return "Terran";
    case Race::Zerg: return "Zerg";
    case Race::Protoss: return "Protoss";
    case Race::Random: return "Random";
  }
  return "Random";
}

std::string_view to_string(GameResult result) {
  switch (result) {
    case GameResult::Win: return "Win";
    case GameResult::Loss: return "Loss";
    case GameResult::Tie: return "Tie";
    case GameResult::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<Race> parse_race(std::string_view s) {
  for (Race r : {Race::Terran, Race::Zerg, Race::Protoss, Race::Random}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::optional<GameResult> parse_result(std::string_view s) {
  for (GameResult r : {GameResult::Win, GameResult::Loss, GameResult::Tie, GameResult::Unknown}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::optional<std::string> matchup(const ReplayRecord& record) {
  if (record.players.size() != 2) return std::nullopt;
  char a = to_string(record.players[0].race)[0];
  char b = to_string(record.players[1].race)[0];
  if (b < a) std::swap(a, b);
  return std::string{a, 'v', b};
}

const std::vector<std::string>& record_fields() {
  static const std::vector<std::string> fields = {
      "toolset_version", "source_file",     "header",  "map_name",
      "game_duration_loops", "game_duration_seconds", "start_time_utc", "players",
      "events"};
  return fields;
}

json record_to_json(const ReplayRecord& r) {
  json players = json::array();
  for (const auto& p : r.players) {
    players.push_back({{"nickname", p.nickname},
                       {"race", to_string(p.race)},
                       {"result", to_string(p.result)},
                       {"apm", p.apm}});
  }
  json events = json::array();
  for (const auto& e : r.events) {
    events.push_back({{"loop", e.loop},
                      {"player_index", e.player_index},
                      {"kind", e.kind},
                      {"payload", versioned::value_to_json(e.payload)}});
  }
  return {
      {"toolset_version", r.toolset_version},
      {"source_file", r.source_file},
      {"header",
       {{"signature", r.header.signature},
        {"version",
         {{"major", r.header.version.major},
          {"minor", r.header.version.minor},
          {"revision", r.header.version.revision},
          {"build", r.header.version.build}}},
        {"protocol_number", r.header.protocol_number},
        {"duration_loops", r.header.duration_loops}}},
      {"map_name", r.map_name},
      {"game_duration_loops", r.game_duration_loops},
      {"game_duration_seconds", r.game_duration_seconds},
      {"start_time_utc", r.start_time_utc},
      {"players", std::move(players)},
      {"events", std::move(events)},
  };
}

std::string dump_record(const ReplayRecord& record) { return record_to_json(record).dump(1) + "\n"; }

namespace {

[[noreturn]] void violation(const std::string& path, const std::string& why) {
  throw Error(Errc::SchemaViolation, path, why);
}

std::string join(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

std::string index(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

// Closed object: every listed key present, nothing else.
const json& object(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) violation(path.empty() ? "$" : path, "expected object");
  for (auto key : keys) {
    if (!j.contains(key)) violation(join(path, key), "missing required field");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      violation(join(path, key), "unknown field");
    }
  }
  return j;
}

std::string string_at(const json& j, const std::string& path, bool non_empty = false) {
  if (!j.is_string()) violation(path, "expected string");
  const auto& s = j.get_ref<const std::string&>();
  if (non_empty && s.empty()) violation(path, "must not be empty");
  return s;
}

std::uint32_t u32_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) violation(path, "expected integer");
  if (!j.is_number_unsigned() && j.get<std::int64_t>() < 0) violation(path, "must be >= 0");
  const auto v = j.get<std::uint64_t>();
  if (v > std::numeric_limits<std::uint32_t>::max()) violation(path, "out of range");
  return static_cast<std::uint32_t>(v);
}

std::int64_t i64_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) violation(path, "expected integer");
  if (j.is_number_unsigned() && j.get<std::uint64_t>() > INT64_MAX) violation(path, "out of range");
  return j.get<std::int64_t>();
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) violation(path, "expected number");
  return j.get<double>();
}

}  // namespace

void validate_record(const ReplayRecord& r) {
  if (r.toolset_version != kSchemaVersion) violation("toolset_version", "unsupported schema version");
  if (r.header.signature != protocol::kReplaySignature) violation("header.signature", "not a replay signature");
  if (r.source_file.empty()) violation("source_file", "must not be empty");
  if (r.game_duration_loops != r.header.duration_loops) {
    violation("game_duration_loops", "differs from header.duration_loops");
  }
  if (r.game_duration_seconds != r.game_duration_loops / protocol::kLoopsPerSecond) {
    violation("game_duration_seconds", "must equal game_duration_loops / 16");
  }
  if (r.players.empty() || r.players.size() > 16) violation("players", "expected 1..16 players");
  for (std::size_t i = 0; i < r.players.size(); ++i) {
    const double apm = r.players[i].apm;
    if (!(apm >= 0.0) || apm == std::numeric_limits<double>::infinity()) {
      violation(index("players", i) + ".apm", "must be finite and >= 0");
    }
  }
  const bool any_unknown = std::any_of(r.players.begin(), r.players.end(),
                                       [](const auto& p) { return p.result == GameResult::Unknown; });
  const bool all_tie = std::all_of(r.players.begin(), r.players.end(),
                                   [](const auto& p) { return p.result == GameResult::Tie; });
  if (!any_unknown && !all_tie) {
    const bool has_win = std::any_of(r.players.begin(), r.players.end(),
                                     [](const auto& p) { return p.result == GameResult::Win; });
    const bool has_tie = std::any_of(r.players.begin(), r.players.end(),
                                     [](const auto& p) { return p.result == GameResult::Tie; });
    if (!has_win || has_tie) violation("players", "results must name one winning side");
  }
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    const std::string at = index("events", i) + ".loop";
    if (r.events[i].loop > r.game_duration_loops) violation(at, "event after end of game");
    if (i > 0 && r.events[i].loop < r.events[i - 1].loop) violation(at, "events not sorted by loop");
  }
}

ReplayRecord record_from_json(const json& j) {
  object(j, "", {"toolset_version", "source_file", "header", "map_name", "game_duration_loops",
                 "game_duration_seconds", "start_time_utc", "players", "events"});
  ReplayRecord r;
  r.toolset_version = string_at(j["toolset_version"], "toolset_version", true);
  r.source_file = string_at(j["source_file"], "source_file", true);

  const json& h = object(j["header"], "header",
                         {"signature", "version", "protocol_number", "duration_loops"});
  r.header.signature = string_at(h["signature"], "header.signature");
  const json& v = object(h["version"], "header.version", {"major", "minor", "revision", "build"});
  r.header.version.major = u32_at(v["major"], "header.version.major");
  r.header.version.minor = u32_at(v["minor"], "header.version.minor");
  r.header.version.revision = u32_at(v["revision"], "header.version.revision");
  r.header.version.build = u32_at(v["build"], "header.version.build");
  r.header.protocol_number = u32_at(h["protocol_number"], "header.protocol_number");
  r.header.duration_loops = u32_at(h["duration_loops"], "header.duration_loops");

  r.map_name = string_at(j["map_name"], "map_name");
  r.game_duration_loops = u32_at(j["game_duration_loops"], "game_duration_loops");
  r.game_duration_seconds = number_at(j["game_duration_seconds"], "game_duration_seconds");
  if (r.game_duration_seconds < 0) violation("game_duration_seconds", "must be >= 0");
  r.start_time_utc = i64_at(j["start_time_utc"], "start_time_utc");

  const json& players = j["players"];
  if (!players.is_array()) violation("players", "expected array");
  for (std::size_t i = 0; i < players.size(); ++i) {
    const std::string at = index("players", i);
    const json& p = object(players[i], at, {"nickname", "race", "result", "apm"});
    PlayerInfo info;
    info.nickname = string_at(p["nickname"], at + ".nickname", true);
    const auto race = parse_race(string_at(p["race"], at + ".race"));
    if (!race) violation(at + ".race", "unknown race");
    info.race = *race;
    const auto result = parse_result(string_at(p["result"], at + ".result"));
    if (!result) violation(at + ".result", "unknown result");
    info.result = *result;
    info.apm = number_at(p["apm"], at + ".apm");
    r.players.push_back(std::move(info));
  }

  const json& events = j["events"];
  if (!events.is_array()) violation("events", "expected array");
  r.events.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string at = index("events", i);
    const json& e = object(events[i], at, {"loop", "player_index", "kind", "payload"});
    GameEvent ev;
    ev.loop = u32_at(e["loop"], at + ".loop");
    const std::int64_t player = i64_at(e["player_index"], at + ".player_index");
    if (player < INT32_MIN || player > INT32_MAX) violation(at + ".player_index", "out of range");
    ev.player_index = static_cast<std::int32_t>(player);
    ev.kind = string_at(e["kind"], at + ".kind", true);
    try {
      ev.payload = versioned::value_from_json(e["payload"], at + ".payload");
    } catch (const Error& err) {
      violation(err.subject(), err.what());
    }
    r.events.push_back(std::move(ev));
  }

  validate_record(r);
  return r;
}

}  // namespace sc2tools
