#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>

namespace sc2tools {

enum class LogLevel { Debug, Info, Warn, Error };

std::string_view to_string(LogLevel level);

using LogClock = std::function<std::chrono::system_clock::time_point()>;

/// Wall clock, unless $SOURCE_DATE_EPOCH is set, in which case every
/// timestamp is pinned to that instant.
LogClock default_log_clock();
LogClock fixed_log_clock(std::chrono::system_clock::time_point at);

/// "2024-05-01T12:00:00.000Z"
std::string iso8601(std::chrono::system_clock::time_point t);

/// One line: ISO8601 <TAB> level <TAB> stage <TAB> message, newline
/// terminated. Tabs and newlines inside fields are replaced by spaces.
std::string format_log_line(std::chrono::system_clock::time_point t, LogLevel level,
                            std::string_view stage, std::string_view message);

/// Thread-safe stage log (main_log.log). Starts a fresh file.
class StageLog {
 public:
  StageLog(const std::filesystem::path& path, LogClock clock);

  void write(LogLevel level, std::string_view stage, std::string_view message);
  void info(std::string_view stage, std::string_view message) { write(LogLevel::Info, stage, message); }
  void warn(std::string_view stage, std::string_view message) { write(LogLevel::Warn, stage, message); }
  void error(std::string_view stage, std::string_view message) { write(LogLevel::Error, stage, message); }

 private:
  std::mutex mutex_;
  std::ofstream out_;
  LogClock clock_;
};

}  // namespace sc2tools
