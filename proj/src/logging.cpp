#include "scl/logging.hpp"

#include <cstdlib>
#include <iostream>

namespace scl {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("SCL_LOG_LEVEL");
        if (env == nullptr) {
            return LogLevel::Warn;
        }
        const std::string s(env);
        if (s == "error") {
            return LogLevel::Error;
        }
        if (s == "warn") {
            return LogLevel::Warn;
        }
        if (s == "info") {
            return LogLevel::Info;
        }
        if (s == "debug") {
            return LogLevel::Debug;
        }
        return LogLevel::Warn;
    }();
    return level;
}

void log(LogLevel level, const std::string& message) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) {
        return;
    }
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[scl " << names[static_cast<int>(level)] << "] " << message << '\n';
}

} // namespace scl
