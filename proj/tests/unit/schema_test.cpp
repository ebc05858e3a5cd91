#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "sc2tools/record.hpp"

using namespace sc2tools;
using nlohmann::json;

namespace {

json schema() {
  std::ifstream in(SC2TOOLS_SCHEMA_PATH);
  return json::parse(in);
}

std::set<std::string> keys(const json& object) {
  std::set<std::string> out;
  for (const auto& [k, v] : object.items()) out.insert(k);
  return out;
}

std::set<std::string> strings(const json& array) { return array.get<std::set<std::string>>(); }

ReplayRecord sample() {
  ReplayRecord r;
  r.header = {std::string(protocol::kReplaySignature), {5, 0, 11, 81009}, 81009, 160};
  r.game_duration_loops = 160;
  r.game_duration_seconds = 10.0;
  r.players = {{"A", Race::Terran, GameResult::Win, 1}, {"B", Race::Random, GameResult::Loss, 2}};
  r.events = {{1, 0, "cmd", versioned::TypedValue::integer(1)}};
  r.source_file = "x.SC2Replay";
  return r;
}

}  // namespace

TEST(Schema, VersionMatchesCode) {
  const json s = schema();
  EXPECT_EQ(s["version"], std::string(kSchemaVersion));
  EXPECT_EQ(s["properties"]["toolset_version"]["const"], std::string(kSchemaVersion));
  EXPECT_EQ(s["properties"]["header"]["properties"]["signature"]["const"], std::string(protocol::kReplaySignature));
}

TEST(Schema, TopLevelFieldsMatchCode) {
  const json s = schema();
  const std::set<std::string> fields(record_fields().begin(), record_fields().end());
  EXPECT_EQ(strings(s["required"]), fields);
  EXPECT_EQ(keys(s["properties"]), fields);
  EXPECT_FALSE(s["additionalProperties"].get<bool>());
}

TEST(Schema, NestedObjectsMatchEmittedJson) {
  const json s = schema();
  const json j = record_to_json(sample());
  EXPECT_EQ(keys(s["properties"]["header"]["properties"]), keys(j["header"]));
  EXPECT_EQ(keys(s["properties"]["header"]["properties"]["version"]["properties"]), keys(j["header"]["version"]));
  EXPECT_EQ(keys(s["$defs"]["player"]["properties"]), keys(j["players"][0]));
  EXPECT_EQ(strings(s["$defs"]["player"]["required"]), keys(j["players"][0]));
  EXPECT_EQ(keys(s["$defs"]["event"]["properties"]), keys(j["events"][0]));
}

TEST(Schema, EnumsMatchParsers) {
  const json s = schema();
  for (const auto& race : s["$defs"]["player"]["properties"]["race"]["enum"]) {
    EXPECT_TRUE(parse_race(race.get<std::string>()).has_value()) << race;
  }
  EXPECT_EQ(s["$defs"]["player"]["properties"]["race"]["enum"].size(), 4u);
  for (const auto& result : s["$defs"]["player"]["properties"]["result"]["enum"]) {
    EXPECT_TRUE(parse_result(result.get<std::string>()).has_value()) << result;
  }
  EXPECT_EQ(s["$defs"]["player"]["properties"]["result"]["enum"].size(), 4u);
}
