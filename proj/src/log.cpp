#include "causalembed/harness/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace causalembed::harness {

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

LogLevel parse_level() {
  const char* env = std::getenv("CAUSAL_EMBED_LOG");
  if (!env) return LogLevel::error;
  const std::string value(env);
  if (value == "debug") return LogLevel::debug;
  if (value == "info") return LogLevel::info;
  return LogLevel::error;
}

void emit(const char* tag, const std::string& message) {
  std::lock_guard<std::mutex> lock(log_mutex());
  std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level();
  return level;
}

void log_error(const std::string& message) { emit("error", message); }

void log_info(const std::string& message) {
  if (log_level() >= LogLevel::info) emit("info", message);
}

void log_debug(const std::string& message) {
  if (log_level() >= LogLevel::debug) emit("debug", message);
}

}  // namespace causalembed::harness
