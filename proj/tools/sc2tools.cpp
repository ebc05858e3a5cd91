// sc2tools: command-line front end for the replay toolkit.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "sc2tools/anonymizer.hpp"
#include "sc2tools/bytes.hpp"
#include "sc2tools/dataset.hpp"
#include "sc2tools/error.hpp"
#include "sc2tools/extractor.hpp"
#include "sc2tools/fixtures.hpp"
#include "sc2tools/mpq.hpp"
#include "sc2tools/prep.hpp"
#include "sc2tools/versioned.hpp"
#include "sc2tools/versioned_json.hpp"

using namespace sc2tools;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct ExtractArgs {
  int workers = 1;
  std::optional<double> min_duration_s;
  std::optional<double> max_duration_s;
  std::vector<std::size_t> player_counts;
  std::vector<std::string> game_versions;
  std::string anonymizer_store;
  std::string anonymizer_addr;
};

void add_extract_options(CLI::App* cmd, ExtractArgs& a) {
  cmd->add_option("-w,--workers", a.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--min-duration-s", a.min_duration_s, "Drop games shorter than this");
  cmd->add_option("--max-duration-s", a.max_duration_s, "Drop games longer than this");
  cmd->add_option("--player-count", a.player_counts, "Allowed player counts (repeatable)");
  cmd->add_option("--game-version", a.game_versions, "Allowed versions a.b.c.d (repeatable)");
  auto* store = cmd->add_option("--anonymizer-store", a.anonymizer_store, "Anonymize via a local journal");
  cmd->add_option("--anonymizer-addr", a.anonymizer_addr, "Anonymize via a running service (host:port)")
      ->excludes(store);
}

/// Options plus the anonymizer objects they point into.
struct ExtractSetup {
  extract::ExtractionOptions options;
  std::unique_ptr<anon::AnonymizationStore> store;
  std::unique_ptr<anon::AnonymizerClient> client;
};

std::unique_ptr<ExtractSetup> make_setup(const ExtractArgs& a) {
  auto s = std::make_unique<ExtractSetup>();
  auto loops = [](double seconds) { return static_cast<std::uint32_t>(seconds * 16.0); };
  if (a.min_duration_s) s->options.filters.min_duration_loops = loops(*a.min_duration_s);
  if (a.max_duration_s) s->options.filters.max_duration_loops = loops(*a.max_duration_s);
  s->options.filters.allowed_player_counts.insert(a.player_counts.begin(), a.player_counts.end());
  s->options.filters.allowed_game_versions.insert(a.game_versions.begin(), a.game_versions.end());
  if (!a.anonymizer_store.empty()) {
    s->store = std::make_unique<anon::AnonymizationStore>(a.anonymizer_store);
    s->client = std::make_unique<anon::StoreClient>(*s->store);
  } else if (!a.anonymizer_addr.empty()) {
    s->client = std::make_unique<anon::HttpAnonymizerClient>(a.anonymizer_addr);
  }
  s->options.anonymizer = s->client.get();
  return s;
}

void print_summary(const extract::PackageSummary& s) {
  std::cout << "total=" << s.total_replays << " ok=" << s.ok << " filtered=" << s.filtered
            << " failed=" << s.failed << "\n";
}

void print_failures(const std::vector<prep::TransferFailure>& failures) {
  for (const auto& f : failures) std::cerr << to_string(f.code) << "(" << f.name << "): " << f.message << "\n";
}

int serve(const std::string& bind, const std::string& store_path) {
  // Route SIGINT/SIGTERM to a watcher thread that stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  anon::AnonymizationStore store(store_path);
  for (const auto& w : store.warnings()) std::cerr << "warning: " << w << "\n";
  anon::AnonymizerService service(store);
  const auto address = anon::parse_bind_address(bind);
  const int port = service.bind(address);
  std::cout << "listening on " << address.host << ":" << port << " entries=" << store.size() << std::endl;

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.run();
  // Wake the watcher if the server stopped on its own.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return kExitOk;
}

int validate_dataset(const fs::path& dir) {
  const auto d = dataset::DatasetHandle::open_local(dir);
  std::vector<dataset::ReplaypackHandle> packs = d.replaypacks();
  // A directory of replay documents is itself a replaypack.
  if (packs.empty()) packs.push_back(dataset::ReplaypackHandle::open(dir));
  std::size_t valid = 0, invalid = 0, warnings = 0;
  for (const auto& pack : packs) {
    for (const auto& w : pack.integrity_warnings()) {
      std::cerr << pack.name() << ": " << w << "\n";
      ++warnings;
    }
    for (const auto& path : pack.paths()) {
      try {
        dataset::load_replay(path);
        ++valid;
      } catch (const Error& e) {
        std::cerr << path.string() << ": " << e.what() << "\n";
        ++invalid;
      }
    }
  }
  std::cout << "valid=" << valid << " invalid=" << invalid << " integrity_warnings=" << warnings << "\n";
  return invalid == 0 && warnings == 0 ? kExitOk : kExitPartial;
}

int dataset_stats(const fs::path& dir) {
  auto d = dataset::DatasetHandle::open_local(dir);
  std::vector<dataset::ReplaypackHandle> packs = d.replaypacks();
  if (packs.empty()) packs.push_back(dataset::ReplaypackHandle::open(dir));
  json out = json::object();
  for (const auto& pack : packs) {
    json p = {{"replays", pack.size()}};
    if (pack.summary()) p["summary"] = extract::summary_to_json(*pack.summary());
    if (!pack.integrity_warnings().empty()) p["integrity_warnings"] = pack.integrity_warnings();
    out[pack.name()] = std::move(p);
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"StarCraft II replay dataset toolkit"};
  app.require_subcommand(1);
  int rc = kExitOk;

  // mpq
  auto* mpq_cmd = app.add_subcommand("mpq", "Inspect MPQ archives")->require_subcommand(1);
  std::string archive_path, member, out_path;
  auto* mpq_list = mpq_cmd->add_subcommand("list", "List archive members");
  mpq_list->add_option("archive", archive_path)->required()->check(CLI::ExistingFile);
  mpq_list->callback([&] {
    for (const auto& name : mpq::list_files(mpq::open_archive(read_file(archive_path)))) std::cout << name << "\n";
  });
  auto* mpq_extract = mpq_cmd->add_subcommand("extract", "Extract one member");
  mpq_extract->add_option("archive", archive_path)->required()->check(CLI::ExistingFile);
  mpq_extract->add_option("member", member)->required();
  mpq_extract->add_option("-o,--output", out_path, "Output file (default: stdout)");
  mpq_extract->callback([&] {
    const Bytes data = mpq::extract_file(mpq::open_archive(read_file(archive_path)), member);
    if (out_path.empty()) {
      std::fwrite(data.data(), 1, data.size(), stdout);
    } else {
      write_file(out_path, data);
    }
  });

  // decode
  auto* decode = app.add_subcommand("decode", "Decode a versioned-encoded value to JSON");
  std::string hex, decode_file;
  auto* hex_opt = decode->add_option("--hex", hex, "Encoded bytes as hex");
  decode->add_option("--file", decode_file, "File with encoded bytes")->excludes(hex_opt)->check(CLI::ExistingFile);
  decode->callback([&] {
    const Bytes data = decode_file.empty() ? from_hex(hex) : read_file(decode_file);
    std::cout << versioned::value_to_json(versioned::decode_versioned(data)).dump(2) << "\n";
  });

  // extract / process
  ExtractArgs ex;
  std::string input, output;
  auto* extract_cmd = app.add_subcommand("extract", "Extract one replaypack directory to JSON");
  extract_cmd->add_option("-i,--input", input, "Replaypack directory")->required();
  extract_cmd->add_option("-o,--output", output, "Output directory")->required();
  add_extract_options(extract_cmd, ex);
  extract_cmd->callback([&] {
    const auto setup = make_setup(ex);
    print_summary(extract::process_replaypack(input, output, setup->options, ex.workers).summary);
  });

  auto* process_cmd = app.add_subcommand("process", "Extract every replaypack under a root");
  process_cmd->add_option("-i,--input", input, "Root of flattened replaypacks")->required();
  process_cmd->add_option("-o,--output", output, "Output root")->required();
  add_extract_options(process_cmd, ex);
  process_cmd->callback([&] {
    const auto setup = make_setup(ex);
    for (const auto& r : prep::process_replaypacks(input, output, setup->options, ex.workers)) {
      std::cout << r.name << ": ";
      if (r.report) {
        print_summary(r.report->summary);
      } else {
        std::cout << "FAILED " << r.error << "\n";
        rc = kExitPartial;
      }
    }
  });

  // dataset preparation
  auto* flatten = app.add_subcommand("flatten", "Flatten a nested replay tree");
  flatten->add_option("-i,--input", input)->required();
  flatten->add_option("-o,--output", output)->required();
  flatten->callback([&] {
    const auto r = prep::flatten_directory(input, output);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "flattened " << r.mapping.size() << " replays\n";
  });

  auto* package = app.add_subcommand("package", "Zip every top-level directory");
  package->add_option("-i,--input", input)->required();
  package->add_option("-o,--output", output)->required();
  package->callback([&] {
    for (const auto& z : prep::package_directories(input, output)) std::cout << z.string() << "\n";
  });

  std::string dir, tournament;
  auto* rename = app.add_subcommand("rename", "Prefix auxiliary files with a tournament name");
  rename->add_option("-d,--dir", dir)->required();
  rename->add_option("-t,--tournament", tournament)->required();
  rename->callback([&] {
    for (const auto& f : prep::rename_auxiliary_files(dir, tournament)) std::cout << f << "\n";
  });

  std::string json_a, json_b;
  auto* merge = app.add_subcommand("merge-json", "Merge two JSON objects");
  merge->add_option("a", json_a)->required()->check(CLI::ExistingFile);
  merge->add_option("b", json_b)->required()->check(CLI::ExistingFile);
  merge->add_option("-o,--output", output, "Output file (default: stdout)");
  merge->callback([&] {
    const std::string text = prep::merge_json_files(json_a, json_b).dump(1) + "\n";
    if (output.empty()) {
      std::cout << text;
    } else {
      write_file(output, text);
    }
  });

  auto* copy = app.add_subcommand("copy-mapping", "Copy processed_mapping.json files to processed outputs");
  copy->add_option("-i,--input", input)->required();
  copy->add_option("-o,--output", output)->required();
  copy->callback([&] {
    const auto r = prep::copy_processed_mapping(input, output);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "copied " << r.copied.size() << " mappings\n";
  });

  std::vector<std::string> replay_dirs;
  std::string base_url;
  auto* maps = app.add_subcommand("download-maps", "Fetch the maps referenced by replays");
  maps->add_option("-r,--replays", replay_dirs, "Replay directories")->required();
  maps->add_option("-o,--output", output)->required();
  maps->add_option("--base-url", base_url, "Map server base URL")->required();
  maps->callback([&] {
    std::vector<fs::path> dirs(replay_dirs.begin(), replay_dirs.end());
    const auto r = prep::download_maps(dirs, output, base_url);
    print_failures(r.failures);
    std::cout << "downloaded=" << r.downloaded.size() << " present=" << r.present.size()
              << " failed=" << r.failures.size() << " undecodable=" << r.undecodable_replays << "\n";
    if (!r.failures.empty()) rc = kExitPartial;
  });

  std::string manifest_path;
  auto* packs = app.add_subcommand("download-replaypacks", "Download and verify replaypacks from a manifest");
  packs->add_option("-m,--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  packs->add_option("-o,--output", output)->required();
  packs->callback([&] {
    const auto r = prep::download_replaypacks(prep::load_manifest(manifest_path), output);
    print_failures(r.failures);
    std::cout << "verified=" << r.verified.size() << " skipped=" << r.skipped.size()
              << " failed=" << r.failures.size() << " transfers=" << r.transfers << "\n";
    if (!r.failures.empty()) rc = kExitPartial;
  });

  std::string config_path;
  auto* pipeline = app.add_subcommand("pipeline", "Run the full preparation pipeline");
  pipeline->add_option("-c,--config", config_path)->required()->check(CLI::ExistingFile);
  pipeline->callback([&] {
    const auto r = prep::run_pipeline(prep::load_pipeline_config(config_path));
    for (const auto& s : r.steps_skipped) std::cout << "skipped " << s << "\n";
    for (const auto& s : r.steps_run) std::cout << "ran " << s << "\n";
    for (const auto& p : r.packs) {
      std::cout << p.name << ": ";
      print_summary(p.report->summary);
    }
  });

  // anonymizer
  auto* anon_cmd = app.add_subcommand("anonymizer", "Nickname anonymization service")->require_subcommand(1);
  std::string bind = anon::default_bind_address(), store_path;
  auto* serve_cmd = anon_cmd->add_subcommand("serve", "Serve POST /anonymize");
  serve_cmd->add_option("--bind", bind, "host:port (port 0 picks one)")->capture_default_str();
  serve_cmd->add_option("--store", store_path, "Journal file")->required();
  serve_cmd->callback([&] { rc = serve(bind, store_path); });

  // dataset
  auto* ds = app.add_subcommand("dataset", "Inspect extracted datasets")->require_subcommand(1);
  auto* validate = ds->add_subcommand("validate", "Validate every replay document");
  validate->add_option("dir", dir)->required();
  validate->callback([&] { rc = validate_dataset(dir); });
  auto* stats = ds->add_subcommand("stats", "Print replaypack summaries");
  stats->add_option("dir", dir)->required();
  stats->callback([&] { rc = dataset_stats(dir); });

  // synthetic corpora
  fixtures::CorpusSpec spec;
  auto* synth = app.add_subcommand("synth", "Write a synthetic replay corpus");
  synth->add_option("-o,--output", output)->required();
  synth->add_option("-n,--replays", spec.replays)->capture_default_str();
  synth->add_option("--seed", spec.seed)->capture_default_str();
  synth->add_option("--corrupt-fraction", spec.corrupt_fraction)->capture_default_str();
  synth->add_option("--short-fraction", spec.short_fraction)->capture_default_str();
  synth->add_option("--events", spec.event_count)->capture_default_str();
  synth->add_option("--subdirs", spec.subdirectories)->capture_default_str();
  synth->callback([&] {
    const auto m = fixtures::write_corpus(output, spec);
    std::cout << "ok=" << m.ok.size() << " filtered=" << m.filtered.size() << " corrupted=" << m.corrupted.size()
              << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return rc;
}
