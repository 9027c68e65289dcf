#pragma once

#include <functional>
#include <string>

namespace tfh {

enum class LogLevel { kInfo, kWarning };

using LogHandler = std::function<void(LogLevel, const std::string&)>;

/// Replaces the process-wide sink (default: stderr). Passing an empty handler
/// silences logging. Calls are serialized.
void set_log_handler(LogHandler handler);

void log_info(const std::string& message);
void log_warning(const std::string& message);

}  // namespace tfh
