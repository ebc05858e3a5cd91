#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>

#include <json.hpp>

#include "sc2tools/anonymizer.hpp"
#include "sc2tools/bytes.hpp"
#include "sc2tools/error.hpp"

namespace sc2tools::anon {

namespace {

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\v\f") == std::string_view::npos;
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += len;
  }
  return true;
}

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::Io, what, std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

AnonymizationStore::AnonymizationStore() = default;

AnonymizationStore::AnonymizationStore(std::filesystem::path path, Durability durability)
    : path_(std::move(path)), durability_(durability) {
  load();
  fd_ = ::open(path_->c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(Errc::OutputNotWritable, path_->string(), std::strerror(errno));
}

AnonymizationStore::~AnonymizationStore() {
  if (fd_ >= 0) ::close(fd_);
}

void AnonymizationStore::load() {
  if (!std::filesystem::exists(*path_)) return;
  const Bytes raw = read_file(*path_);
  const std::string text(raw.begin(), raw.end());

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const bool has_newline = end != std::string::npos;
    const std::string_view line(text.data() + pos, (has_newline ? end : text.size()) - pos);
    const std::size_t next_pos = has_newline ? end + 1 : text.size();
    const bool last = next_pos >= text.size();
    ++line_no;

    std::string problem;
    std::string nickname;
    std::string id;
    try {
      const auto j = nlohmann::json::parse(line);
      nickname = j.at("n").get<std::string>();
      id = j.at("id").get<std::string>();
      if (id != std::to_string(next_)) problem = "id out of sequence";
      else if (ids_.contains(nickname)) problem = "duplicate nickname";
    } catch (const nlohmann::json::exception& e) {
      problem = e.what();
    }
    if (problem.empty() && !has_newline) problem = "missing line terminator";

    if (!problem.empty()) {
      if (!last) {
        throw Error(Errc::CorruptJournal, path_->string(),
                    "line " + std::to_string(line_no) + ": " + problem);
      }
      warnings_.push_back("dropped torn journal line " + std::to_string(line_no) + ": " + problem);
      std::filesystem::resize_file(*path_, pos);
      return;
    }
    ids_.emplace(std::move(nickname), std::move(id));
    ++next_;
    pos = next_pos;
  }
}

void AnonymizationStore::persist(std::string_view nickname, std::string_view id) {
  if (fd_ < 0) return;
  const nlohmann::json line = {{"n", nickname}, {"id", id}};
  write_all(fd_, line.dump() + "\n", path_->string());
  if (durability_ == Durability::Fsync && ::fdatasync(fd_) != 0) {
    throw Error(Errc::Io, path_->string(), std::strerror(errno));
  }
}

std::string AnonymizationStore::get_or_assign(std::string_view nickname) {
  if (blank(nickname)) throw Error(Errc::EmptyNickname);
  if (!valid_utf8(nickname)) throw Error(Errc::InvalidValue, "nickname", "not valid UTF-8");
  const std::string key(nickname);
  {
    std::shared_lock lock(mutex_);
    if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  std::string id = std::to_string(next_);
  persist(key, id);
  ++next_;
  ids_.emplace(key, id);
  return id;
}

std::optional<std::string> AnonymizationStore::lookup(std::string_view nickname) const {
  std::shared_lock lock(mutex_);
  if (auto it = ids_.find(std::string(nickname)); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::size_t AnonymizationStore::size() const {
  std::shared_lock lock(mutex_);
  return ids_.size();
}

std::uint64_t AnonymizationStore::next_sequence() const {
  std::shared_lock lock(mutex_);
  return next_;
}

std::unordered_map<std::string, std::string> AnonymizationStore::entries() const {
  std::shared_lock lock(mutex_);
  return ids_;
}

std::string StoreClient::anonymize(std::string_view nickname) {
  try {
    return store_.get_or_assign(nickname);
  } catch (const Error& e) {
    if (e.code() == Errc::Io) throw Error(Errc::AnonymizerUnavailable, {}, e.what());
    throw;
  }
}

}  // namespace sc2tools::anon
