#pragma once

// Minimal stderr logging; verbosity from the SVI_LOG environment variable
// (error, warn, info, debug; default warn).

#include <string_view>

namespace svi {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level();
void log_message(LogLevel level, std::string_view msg);

inline void log_warn(std::string_view msg) { log_message(LogLevel::Warn, msg); }
inline void log_info(std::string_view msg) { log_message(LogLevel::Info, msg); }
inline void log_debug(std::string_view msg) { log_message(LogLevel::Debug, msg); }

}  // namespace svi
