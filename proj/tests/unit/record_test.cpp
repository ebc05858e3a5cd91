#include <gtest/gtest.h>

#include "sc2tools/error.hpp"
#include "sc2tools/record.hpp"

using namespace sc2tools;
using nlohmann::json;

namespace {

ReplayRecord sample() {
  ReplayRecord r;
  r.header = {std::string(protocol::kReplaySignature), {5, 0, 11, 81009}, 81009, 1600};
  r.map_name = "Oxide LE";
  r.game_duration_loops = 1600;
  r.game_duration_seconds = 100.0;
  r.start_time_utc = 1'600'000'000;
  r.players = {{"Alice", Race::Protoss, GameResult::Win, 120.5}, {"Bob", Race::Zerg, GameResult::Loss, 0}};
  r.events = {{0, 0, "cmd", versioned::TypedValue::integer(7)},
              {16, 1, "camera", versioned::TypedValue::blob("xy")}};
  r.source_file = "a.SC2Replay";
  return r;
}

std::string violation_subject(const json& j) {
  try {
    record_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SchemaViolation) << e.what();
    return e.subject();
  }
  return "<accepted>";
}

}  // namespace

TEST(Record, JsonRoundTrip) {
  const ReplayRecord r = sample();
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
  EXPECT_EQ(record_from_json(json::parse(dump_record(r))), r);
}

TEST(Record, DumpIsCanonical) {
  const std::string text = dump_record(sample());
  EXPECT_EQ(dump_record(record_from_json(json::parse(text))), text);
  EXPECT_LT(text.find("\"events\""), text.find("\"header\""));
}

TEST(Record, Matchup) {
  EXPECT_EQ(matchup(sample()), "PvZ");
  ReplayRecord r = sample();
  r.players.push_back({"Carol", Race::Terran, GameResult::Loss, 0});
  EXPECT_FALSE(matchup(r).has_value());
}

TEST(Record, MissingPlayersNamed) {
  json j = record_to_json(sample());
  j.erase("players");
  EXPECT_EQ(violation_subject(j), "players");
}

TEST(Record, UnknownFieldNamed) {
  json j = record_to_json(sample());
  j["players"][1]["colour"] = "red";
  EXPECT_EQ(violation_subject(j), "players[1].colour");
}

TEST(Record, NegativeDurationRejected) {
  json j = record_to_json(sample());
  j["game_duration_loops"] = -5;
  EXPECT_EQ(violation_subject(j), "game_duration_loops");
}

TEST(Record, DurationSecondsMustMatchLoops) {
  json j = record_to_json(sample());
  j["game_duration_seconds"] = 100.5;
  EXPECT_EQ(violation_subject(j), "game_duration_seconds");
}

TEST(Record, BadRaceNamed) {
  json j = record_to_json(sample());
  j["players"][0]["race"] = "Xel'Naga";
  EXPECT_EQ(violation_subject(j), "players[0].race");
}

TEST(Record, NoWinnerRejected) {
  json j = record_to_json(sample());
  j["players"][0]["result"] = "Loss";
  EXPECT_EQ(violation_subject(j), "players");
}

TEST(Record, AllUnknownResultsAccepted) {
  ReplayRecord r = sample();
  for (auto& p : r.players) p.result = GameResult::Unknown;
  EXPECT_NO_THROW(validate_record(r));
}

TEST(Record, EventOrderAndRange) {
  json j = record_to_json(sample());
  j["events"][1]["loop"] = 2000;
  EXPECT_EQ(violation_subject(j), "events[1].loop");
  j = record_to_json(sample());
  j["events"][0]["loop"] = 20;
  EXPECT_EQ(violation_subject(j), "events[1].loop");
}

TEST(Record, PayloadPathNamed) {
  json j = record_to_json(sample());
  j["events"][0]["payload"] = {{"int", "seven"}};
  EXPECT_EQ(violation_subject(j), "events[0].payload.int");
}

TEST(Record, SchemaVersionPinned) {
  json j = record_to_json(sample());
  j["toolset_version"] = "0.9.0";
  EXPECT_EQ(violation_subject(j), "toolset_version");
}

TEST(Record, EnumNamesRoundTrip) {
  for (Race r : {Race::Terran, Race::Zerg, Race::Protoss, Race::Random}) EXPECT_EQ(parse_race(to_string(r)), r);
  for (GameResult r : {GameResult::Win, GameResult::Loss, GameResult::Tie, GameResult::Unknown}) {
    EXPECT_EQ(parse_result(to_string(r)), r);
  }
  EXPECT_FALSE(parse_race("terran").has_value());
}

TEST(Record, FieldListMatchesDocument) {
  const json j = record_to_json(sample());
  EXPECT_EQ(record_fields().size(), j.size());
  for (const auto& f : record_fields()) EXPECT_TRUE(j.contains(f)) << f;
}
