#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace bitmat::log {

enum class Level { off = 0, error = 1, warn = 2, info = 3, debug = 4 };

// Verbosity comes from the BITMAT_LOG environment variable
// (off|error|warn|info|debug); default is warn.
inline Level threshold() {
  static const Level lvl = [] {
    const char* env = std::getenv("BITMAT_LOG");
    if (env == nullptr) return Level::warn;
    if (std::strcmp(env, "off") == 0) return Level::off;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "warn") == 0) return Level::warn;
    if (std::strcmp(env, "info") == 0) return Level::info;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    return Level::warn;
  }();
  return lvl;
}

template <typename... Args>
void emit(Level lvl, const char* tag, const char* fmt, Args... args) {
  if (lvl > threshold()) return;
  std::fprintf(stderr, "[bitmat %s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

template <typename... Args>
void error(const char* fmt, Args... args) {
  emit(Level::error, "error", fmt, args...);
}
template <typename... Args>
void warn(const char* fmt, Args... args) {
  emit(Level::warn, "warn", fmt, args...);
}
template <typename... Args>
void info(const char* fmt, Args... args) {
  emit(Level::info, "info", fmt, args...);
}
template <typename... Args>
void debug(const char* fmt, Args... args) {
  emit(Level::debug, "debug", fmt, args...);
}

}  // namespace bitmat::log
