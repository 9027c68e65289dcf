#include "common/log.hpp"

#include <iostream>
#include <mutex>

namespace tfh {
namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

LogHandler& handler() {
  static LogHandler h = [](LogLevel level, const std::string& msg) {
    std::cerr << (level == LogLevel::kWarning ? "[warn] " : "[info] ") << msg << '\n';
  };
  return h;
}

void emit(LogLevel level, const std::string& msg) {
  std::lock_guard lock(log_mutex());
  if (handler()) handler()(level, msg);
}

}  // namespace

void set_log_handler(LogHandler h) {
  std::lock_guard lock(log_mutex());
  handler() = std::move(h);
}

void log_info(const std::string& message) { emit(LogLevel::kInfo, message); }
void log_warning(const std::string& message) { emit(LogLevel::kWarning, message); }

}  // namespace tfh
