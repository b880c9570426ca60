#include "svi/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace svi {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("SVI_LOG");
    const std::string v = env ? env : "";
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void log_message(LogLevel level, std::string_view msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  static std::mutex mu;
  const std::lock_guard lock(mu);
  std::cerr << "[svi " << kNames[static_cast<int>(level)] << "] " << msg << '\n';
}

}  // namespace svi
