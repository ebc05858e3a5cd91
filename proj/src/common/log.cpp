#include "sc2tools/log.hpp"

#include <cstdlib>
#include <ctime>

#include "sc2tools/error.hpp"

namespace sc2tools {

std::string_view to_string(LogLevel level) {
  switch (level) {
    case LogLevel::Debug: return "DEBUG";
    case LogLevel::Info: return "INFO";
    case LogLevel::Warn: return "WARN";
    case LogLevel::Error: return "ERROR";
  }
  return "INFO";
}

LogClock fixed_log_clock(std::chrono::system_clock::time_point at) {
  return [at] { return at; };
}

LogClock default_log_clock() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    char* end = nullptr;
    const long long seconds = std::strtoll(epoch, &end, 10);
    if (*end == '\0') return fixed_log_clock(std::chrono::system_clock::time_point(std::chrono::seconds(seconds)));
  }
  return [] { return std::chrono::system_clock::now(); };
}

std::string iso8601(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000 - (ms % 1000 < 0 ? 1 : 0));
  const int millis = static_cast<int>(((ms % 1000) + 1000) % 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

namespace {

void append_field(std::string& out, std::string_view field) {
  for (char c : field) out.push_back(c == '\t' || c == '\n' || c == '\r' ? ' ' : c);
}

}  // namespace

std::string format_log_line(std::chrono::system_clock::time_point t, LogLevel level,
                            std::string_view stage, std::string_view message) {
  std::string line = iso8601(t);
  line.push_back('\t');
  line += to_string(level);
  line.push_back('\t');
  append_field(line, stage);
  line.push_back('\t');
  append_field(line, message);
  line.push_back('\n');
  return line;
}

StageLog::StageLog(const std::filesystem::path& path, LogClock clock)
    : out_(path, std::ios::trunc), clock_(std::move(clock)) {
  if (!out_) throw Error(Errc::OutputNotWritable, path.string());
}

void StageLog::write(LogLevel level, std::string_view stage, std::string_view message) {
  const std::string line = format_log_line(clock_(), level, stage, message);
  std::lock_guard lock(mutex_);
  out_ << line;
  out_.flush();
}

}  // namespace sc2tools
