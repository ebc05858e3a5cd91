#include "sc2tools/protocol.hpp"

#include <limits>

#include "sc2tools/error.hpp"

namespace sc2tools::protocol {

using versioned::TypedValue;

namespace {

constexpr std::int64_t kFiletimeUnixEpoch = 116444736000000000;
constexpr std::int64_t kFiletimeTicksPerSecond = 10000000;

const TypedValue& require(const TypedValue& parent, versioned::FieldId id, std::string_view name) {
  const TypedValue* v = parent.field(id);
  if (!v) throw Error(Errc::SchemaMismatch, std::string(name), "missing field");
  return *v;
}

std::int64_t as_int(const TypedValue& v, std::string_view name) {
  const auto* i = v.get_if<versioned::IntValue>();
  if (!i) throw Error(Errc::SchemaMismatch, std::string(name), "expected int");
  return i->value;
}

std::uint32_t as_u32(const TypedValue& v, std::string_view name) {
  const std::int64_t i = as_int(v, name);
  if (i < 0 || i > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::SchemaMismatch, std::string(name), "out of range");
  }
  return static_cast<std::uint32_t>(i);
}

std::string as_string(const TypedValue& v, std::string_view name) {
  const auto* b = v.get_if<versioned::BlobValue>();
  if (!b) throw Error(Errc::SchemaMismatch, std::string(name), "expected blob");
  return to_string(b->bytes);
}

const std::vector<TypedValue>& as_array(const TypedValue& v, std::string_view name) {
  const auto* a = v.get_if<versioned::ArrayValue>();
  if (!a) throw Error(Errc::SchemaMismatch, std::string(name), "expected array");
  return a->items;
}

void require_struct(const TypedValue& v, std::string_view name) {
  if (!v.get_if<versioned::StructValue>()) {
    throw Error(Errc::SchemaMismatch, std::string(name), "expected struct");
  }
}

}  // namespace

std::string GameVersion::to_string() const {
  return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(revision) +
         "." + std::to_string(build);
}

ProtocolHeader decode_replay_header(ByteView user_data_content) {
  const TypedValue root = versioned::decode_versioned(user_data_content);
  require_struct(root, "header");

  ProtocolHeader h;
  h.signature = as_string(require(root, header_field::kSignature, "signature"), "signature");
  if (h.signature != kReplaySignature) {
    throw Error(Errc::SchemaMismatch, "signature", "not a replay header");
  }
  const TypedValue& version = require(root, header_field::kVersion, "version");
  require_struct(version, "version");
  h.version.major = as_u32(require(version, version_field::kMajor, "version.major"), "version.major");
  h.version.minor = as_u32(require(version, version_field::kMinor, "version.minor"), "version.minor");
  h.version.revision =
      as_u32(require(version, version_field::kRevision, "version.revision"), "version.revision");
  h.version.build = as_u32(require(version, version_field::kBuild, "version.build"), "version.build");
  h.protocol_number =
      as_u32(require(version, version_field::kBaseBuild, "version.base_build"), "version.base_build");
  h.duration_loops = as_u32(require(root, header_field::kElapsedGameLoops, "elapsed_game_loops"),
                            "elapsed_game_loops");
  return h;
}

ReplayDetails decode_details(ByteView member) {
  const TypedValue root = versioned::decode_versioned(member);
  require_struct(root, "details");

  ReplayDetails d;
  for (const TypedValue& p : as_array(require(root, details_field::kPlayerList, "player_list"),
                                      "player_list")) {
    require_struct(p, "player");
    DetailsPlayer player;
    player.name = as_string(require(p, player_field::kName, "player.name"), "player.name");
    player.race = as_string(require(p, player_field::kRace, "player.race"), "player.race");
    player.result = as_int(require(p, player_field::kResult, "player.result"), "player.result");
    if (const TypedValue* team = p.field(player_field::kTeamId)) {
      player.team = as_int(*team, "player.team");
    }
    d.players.push_back(std::move(player));
  }
  d.map_name = as_string(require(root, details_field::kTitle, "title"), "title");
  d.time_utc_filetime = as_int(require(root, details_field::kTimeUtc, "time_utc"), "time_utc");
  if (d.time_utc_filetime < 0) throw Error(Errc::SchemaMismatch, "time_utc", "negative timestamp");
  if (const TypedValue* handles = root.field(details_field::kCacheHandles)) {
    for (const TypedValue& h : as_array(*handles, "cache_handles")) {
      const auto* blob = h.get_if<versioned::BlobValue>();
      if (!blob || blob->bytes.size() != kCacheHandleSize) {
        throw Error(Errc::SchemaMismatch, "cache_handles", "malformed handle");
      }
      if (to_string(ByteView(blob->bytes).first(4)) != kMapHandleType) continue;
      d.map_hashes.push_back(to_hex(ByteView(blob->bytes).subspan(8)));
    }
  }
  return d;
}

std::vector<RawEvent> decode_game_events(ByteView member) {
  const TypedValue root = versioned::decode_versioned(member);
  std::vector<RawEvent> events;
  for (const TypedValue& e : as_array(root, "events")) {
    require_struct(e, "event");
    RawEvent ev;
    ev.loop = as_int(require(e, event_field::kLoop, "event.loop"), "event.loop");
    ev.player = as_int(require(e, event_field::kPlayer, "event.player"), "event.player");
    ev.kind = as_string(require(e, event_field::kKind, "event.kind"), "event.kind");
    ev.payload = require(e, event_field::kPayload, "event.payload");
    events.push_back(std::move(ev));
  }
  return events;
}

TypedValue header_value(const ProtocolHeader& header) {
  auto version = TypedValue::structure({
      {version_field::kFlags, TypedValue::integer(1)},
      {version_field::kMajor, TypedValue::integer(header.version.major)},
      {version_field::kMinor, TypedValue::integer(header.version.minor)},
      {version_field::kRevision, TypedValue::integer(header.version.revision)},
      {version_field::kBuild, TypedValue::integer(header.version.build)},
      {version_field::kBaseBuild, TypedValue::integer(header.protocol_number)},
  });
  return TypedValue::structure({
      {header_field::kSignature, TypedValue::blob(header.signature)},
      {header_field::kVersion, std::move(version)},
      {header_field::kType, TypedValue::integer(2)},
      {header_field::kElapsedGameLoops, TypedValue::integer(header.duration_loops)},
  });
}

TypedValue details_value(const ReplayDetails& details) {
  std::vector<TypedValue> players;
  for (const auto& p : details.players) {
    players.push_back(TypedValue::structure({
        {player_field::kName, TypedValue::blob(p.name)},
        {player_field::kRace, TypedValue::blob(p.race)},
        {player_field::kTeamId, TypedValue::integer(p.team)},
        {player_field::kResult, TypedValue::integer(p.result)},
    }));
  }
  std::vector<TypedValue> handles;
  for (const auto& hash : details.map_hashes) {
    Bytes handle = to_bytes(kMapHandleType);
    handle.insert(handle.end(), {0, 0, 'U', 'S'});
    const Bytes digest = from_hex(hash);
    handle.insert(handle.end(), digest.begin(), digest.end());
    handles.push_back(TypedValue::blob(std::move(handle)));
  }
  return TypedValue::structure({
      {details_field::kPlayerList, TypedValue::array(std::move(players))},
      {details_field::kTitle, TypedValue::blob(details.map_name)},
      {details_field::kTimeUtc, TypedValue::integer(details.time_utc_filetime)},
      {details_field::kCacheHandles, TypedValue::array(std::move(handles))},
  });
}

TypedValue game_events_value(const std::vector<RawEvent>& events) {
  std::vector<TypedValue> items;
  items.reserve(events.size());
  for (const auto& e : events) {
    items.push_back(TypedValue::structure({
        {event_field::kLoop, TypedValue::integer(e.loop)},
        {event_field::kPlayer, TypedValue::integer(e.player)},
        {event_field::kKind, TypedValue::blob(e.kind)},
        {event_field::kPayload, e.payload},
    }));
  }
  return TypedValue::array(std::move(items));
}

std::int64_t filetime_to_unix(std::int64_t filetime) {
  return (filetime - kFiletimeUnixEpoch) / kFiletimeTicksPerSecond;
}

std::int64_t unix_to_filetime(std::int64_t unix_seconds) {
  return unix_seconds * kFiletimeTicksPerSecond + kFiletimeUnixEpoch;
}

}  // namespace sc2tools::protocol
