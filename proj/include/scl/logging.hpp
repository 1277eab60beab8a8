#pragma once

#include <string>

namespace scl {

/// Severity gate read once from SCL_LOG_LEVEL (error|warn|info|debug).
enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level();

/// Write to stderr when `level` passes the gate.
void log(LogLevel level, const std::string& message);

} // namespace scl
