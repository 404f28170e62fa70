#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace fblup {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from FB_LOG_LEVEL in {error, warn, info, debug}; default warn.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("FB_LOG_LEVEL");
    if (!env) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  const char* tag = level == LogLevel::Error  ? "error"
                    : level == LogLevel::Warn ? "warn"
                    : level == LogLevel::Info ? "info"
                                              : "debug";
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

}  // namespace fblup
