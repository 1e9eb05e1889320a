// Minimal stderr logging gated by the INVPOSE_LOG environment variable:
// "quiet" | "info" (default) | "debug".

#ifndef INVPOSE_LOG_HPP
#define INVPOSE_LOG_HPP

#include <cstdlib>
#include <iostream>
#include <string>

namespace invpose {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("INVPOSE_LOG");
    if (!env) return LogLevel::Info;
    const std::string v(env);
    if (v == "quiet" || v == "0") return LogLevel::Quiet;
    if (v == "debug" || v == "2") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

inline void log_info(const std::string& message) {
  if (log_level() >= LogLevel::Info) std::cerr << "[invpose] " << message << "\n";
}

inline void log_debug(const std::string& message) {
  if (log_level() >= LogLevel::Debug) std::cerr << "[invpose:debug] " << message << "\n";
}

}  // namespace invpose

#endif  // INVPOSE_LOG_HPP
