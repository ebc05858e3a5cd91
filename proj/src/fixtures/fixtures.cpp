#include "sc2tools/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "sc2tools/error.hpp"
#include "sc2tools/mpq.hpp"

namespace sc2tools::fixtures {

namespace fs = std::filesystem;
using versioned::TypedValue;

namespace {

constexpr const char* kMaps[] = {"Fixture Plateau", "Ephemeron LE", "Jagannatha LE", "Oxide LE",
                                 "Lightshade LE", "Romanticide LE"};
constexpr const char* kRaces[] = {"Terran", "Zerg", "Protoss", "Random"};
constexpr const char* kKinds[] = {"cmd", "cmd", "cmd", "camera", "selection", "control_group"};

std::string nickname(std::size_t i) {
  // A few non-ASCII names keep the UTF-8 paths honest.
  static constexpr const char* kStems[] = {"Serral", "Maru", "Clem", "herO", "Réynor", "소울", "ShoWTimE"};
  return std::string(kStems[i % std::size(kStems)]) + std::to_string(i);
}

TypedValue event_payload(std::mt19937_64& rng, std::string_view kind) {
  std::uniform_int_distribution<std::int64_t> coord(0, 200 * 4096);
  if (kind == "cmd") {
    return TypedValue::structure({{0, TypedValue::integer(coord(rng))},
                                  {1, TypedValue::integer(coord(rng))},
                                  {2, TypedValue::integer(static_cast<std::int64_t>(rng() % 600))}});
  }
  if (kind == "selection") {
    std::vector<TypedValue> units;
    for (std::uint64_t i = 0, n = rng() % 5; i < n; ++i) {
      units.push_back(TypedValue::integer(static_cast<std::int64_t>(rng() % 100000)));
    }
    return TypedValue::array(std::move(units));
  }
  if (kind == "control_group") {
    return rng() % 2 ? TypedValue::present(TypedValue::integer(static_cast<std::int64_t>(rng() % 10)))
                     : TypedValue::absent();
  }
  return TypedValue::structure({{0, TypedValue::integer(coord(rng))}, {1, TypedValue::integer(coord(rng))}});
}

std::vector<protocol::RawEvent> make_events(const ReplayFixture& f) {
  std::mt19937_64 rng(f.seed);
  std::uniform_int_distribution<std::int64_t> loop(0, f.duration_loops);
  std::vector<std::int64_t> loops(f.event_count);
  for (auto& l : loops) l = loop(rng);
  std::sort(loops.begin(), loops.end());

  std::vector<protocol::RawEvent> events;
  events.reserve(f.event_count);
  const auto players = static_cast<std::int64_t>(std::max<std::size_t>(1, f.players.size()));
  for (std::int64_t l : loops) {
    std::string kind = kKinds[rng() % std::size(kKinds)];
    TypedValue payload = event_payload(rng, kind);
    events.push_back({l, static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(players)),
                      std::move(kind), std::move(payload)});
  }
  return events;
}

std::size_t planted(std::size_t total, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(total) * fraction));
}

}  // namespace

Bytes map_file_content(std::string_view map_name) {
  std::string text = "SC2Map fixture\n" + std::string(map_name) + "\n";
  Bytes out = to_bytes(text);
  // Pad to a realistic-looking size with a name-derived pattern.
  const Bytes digest = sha256(to_bytes(map_name));
  while (out.size() < 4096) out.insert(out.end(), digest.begin(), digest.end());
  return out;
}

std::string map_hash(std::string_view map_name) { return sha256_hex(map_file_content(map_name)); }

Bytes build_replay(const ReplayFixture& f) {
  const protocol::ProtocolHeader header{std::string(protocol::kReplaySignature), f.version, f.version.build,
                                        f.duration_loops};
  protocol::ReplayDetails details;
  details.players = f.players;
  details.map_name = f.map_name;
  details.time_utc_filetime = protocol::unix_to_filetime(f.start_time_unix);
  details.map_hashes = {map_hash(f.map_name)};

  std::map<std::string, Bytes> members;
  members.emplace(protocol::kDetailsMember, versioned::encode_versioned(protocol::details_value(details)));
  members.emplace(protocol::kGameEventsMember,
                  versioned::encode_versioned(protocol::game_events_value(make_events(f))));

  mpq::BuildOptions options;
  options.compress = f.compress;
  options.encrypt = f.encrypt;
  options.user_data = versioned::encode_versioned(protocol::header_value(header));
  return mpq::build_archive(members, options);
}

ReplayFixture random_fixture(std::uint64_t seed, std::size_t nickname_pool) {
  std::mt19937_64 rng(seed);
  ReplayFixture f;
  f.seed = rng();
  f.map_name = kMaps[rng() % std::size(kMaps)];
  f.duration_loops = static_cast<std::uint32_t>(16 * 60 * 3 + rng() % (16 * 60 * 22));
  // 2019-01-01 .. 2023-12-31
  f.start_time_unix = 1'546'300'800 + static_cast<std::int64_t>(rng() % (5ull * 365 * 86400));
  f.version = rng() % 3 == 0 ? protocol::GameVersion{5, 0, 12, 87702} : protocol::GameVersion{5, 0, 11, 81009};

  const std::size_t pool = std::max<std::size_t>(2, nickname_pool);
  const std::size_t a = rng() % pool;
  std::size_t b = rng() % (pool - 1);
  if (b >= a) ++b;
  const bool first_wins = rng() % 2 == 0;
  f.players = {{nickname(a), kRaces[rng() % std::size(kRaces)], first_wins ? 1 : 2, 0},
               {nickname(b), kRaces[rng() % std::size(kRaces)], first_wins ? 2 : 1, 1}};
  f.encrypt = rng() % 4 == 0;
  return f;
}

CorpusManifest write_corpus(const fs::path& dir, const CorpusSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const std::size_t n_corrupt = planted(spec.replays, spec.corrupt_fraction);
  const std::size_t n_short = planted(spec.replays, spec.short_fraction);
  if (n_corrupt + n_short > spec.replays) {
    throw Error(Errc::InvalidConfig, "corpus", "planted fractions exceed 1");
  }

  // 0 = ok, 1 = short, 2 = corrupt; shuffled so categories interleave.
  std::vector<int> kinds(spec.replays, 0);
  std::fill_n(kinds.begin(), n_short, 1);
  std::fill_n(kinds.begin() + static_cast<std::ptrdiff_t>(n_short), n_corrupt, 2);
  std::shuffle(kinds.begin(), kinds.end(), rng);

  CorpusManifest manifest;
  std::size_t corrupt_seen = 0;
  for (std::size_t i = 0; i < spec.replays; ++i) {
    ReplayFixture f = random_fixture(rng(), spec.nickname_pool);
    f.event_count = spec.event_count;
    if (kinds[i] == 1) f.duration_loops = static_cast<std::uint32_t>(16 * 10 + rng() % (16 * 90));

    Bytes data;
    if (kinds[i] == 2) {
      switch (corrupt_seen++ % 3) {
        case 0: {
          data.resize(512 + rng() % 2048);
          for (auto& b : data) b = static_cast<std::uint8_t>(rng());
          break;
        }
        case 1: {
          data = build_replay(f);
          data.resize(data.size() / 2);
          break;
        }
        default: {
          const Bytes good = build_replay(f);
          // The signature is the first blob of the header; flip one of its bytes.
          data = good;
          const auto sig = std::search(data.begin(), data.end(), protocol::kReplaySignature.begin(),
                                       protocol::kReplaySignature.end());
          if (sig == data.end()) throw Error(Errc::InvalidValue, "fixture", "signature not found");
          *sig ^= 0x20;
          break;
        }
      }
    } else {
      data = build_replay(f);
    }

    char name[48];
    std::snprintf(name, sizeof name, "replay_%05zu.SC2Replay", i);
    std::string rel = name;
    if (spec.subdirectories > 0) {
      rel = "group_" + std::to_string(i % spec.subdirectories) + "/round_" + std::to_string(i % 3) + "/" + rel;
    }
    const fs::path target = dir / rel;
    fs::create_directories(target.parent_path());
    write_file(target, data);

    (kinds[i] == 0 ? manifest.ok : kinds[i] == 1 ? manifest.filtered : manifest.corrupted).push_back(rel);
  }
  return manifest;
}

}  // namespace sc2tools::fixtures
