#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace httplib {
class Server;
}

namespace sc2tools::anon {

/// Anything that can turn a nickname into a stable opaque id.
class AnonymizerClient {
 public:
  virtual ~AnonymizerClient() = default;
  /// Throws Error(AnonymizerUnavailable) when the backing service fails.
  virtual std::string anonymize(std::string_view nickname) = 0;
};

enum class Durability {
  Fsync,   ///< fdatasync() each journal append before replying
  Write,   ///< write() only: survives process crashes, not power loss
};

/// Nickname -> id mapping backed by an append-only journal of
///   {"n": "<nickname>", "id": "<decimal>"}
/// lines. Ids are the decimal rendering of a counter starting at 0.
class AnonymizationStore {
 public:
  /// In-memory store without persistence.
  AnonymizationStore();
  /// Replays the journal at `path` (created if missing). A torn trailing
  /// line is dropped, truncated away and reported in warnings();
  /// damage elsewhere throws Error(CorruptJournal).
  explicit AnonymizationStore(std::filesystem::path path, Durability durability = Durability::Fsync);
  ~AnonymizationStore();

  AnonymizationStore(const AnonymizationStore&) = delete;
  AnonymizationStore& operator=(const AnonymizationStore&) = delete;

  /// Existing id, or the next counter value persisted before returning.
  /// Errors: EmptyNickname (blank after trimming), InvalidValue (not UTF-8).
  std::string get_or_assign(std::string_view nickname);

  std::optional<std::string> lookup(std::string_view nickname) const;
  std::size_t size() const;
  std::uint64_t next_sequence() const;
  const std::vector<std::string>& warnings() const { return warnings_; }
  /// Snapshot of the full mapping.
  std::unordered_map<std::string, std::string> entries() const;

 private:
  void load();
  void persist(std::string_view nickname, std::string_view id);

  std::optional<std::filesystem::path> path_;
  Durability durability_ = Durability::Fsync;
  int fd_ = -1;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> ids_;
  std::uint64_t next_ = 0;
  std::vector<std::string> warnings_;
};

/// In-process client over a store.
class StoreClient final : public AnonymizerClient {
 public:
  explicit StoreClient(AnonymizationStore& store) : store_(store) {}
  std::string anonymize(std::string_view nickname) override;

 private:
  AnonymizationStore& store_;
};

/// Client for the HTTP service (`POST /anonymize`).
class HttpAnonymizerClient final : public AnonymizerClient {
 public:
  /// `address` is "host:port".
  explicit HttpAnonymizerClient(std::string address);
  std::string anonymize(std::string_view nickname) override;

 private:
  std::string host_;
  int port_ = 0;
};

struct BindAddress {
  std::string host;
  int port = 0;
};

/// Parses "host:port"; throws Error(InvalidConfig).
BindAddress parse_bind_address(std::string_view address);

inline constexpr std::string_view kDefaultBindAddress = "127.0.0.1:50051";
inline constexpr const char* kBindEnvVar = "SC2TOOLS_ANONYMIZER_BIND";

/// Default bind address, overridden by $SC2TOOLS_ANONYMIZER_BIND.
std::string default_bind_address();

/// HTTP front end:
///   POST /anonymize {"nickname": s} -> 200 {"id": s} | 400 {"error": s}
class AnonymizerService {
 public:
  explicit AnonymizerService(AnonymizationStore& store);
  ~AnonymizerService();

  /// Binds without serving. Port 0 picks a free port. Returns the port.
  int bind(const BindAddress& address);
  /// Serves on the bound socket until stop(); blocks.
  void run();
  /// run() on a background thread.
  void start();
  void stop();

 private:
  AnonymizationStore& store_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<bool> bound_{false};
};

}  // namespace sc2tools::anon
