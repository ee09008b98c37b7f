#include "propspan/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace propspan {

namespace {

LogLevel parse_env_level() {
    const char* v = std::getenv("PROPSPAN_LOG");
    if (!v) return LogLevel::Warn;
    if (std::strcmp(v, "error") == 0) return LogLevel::Error;
    if (std::strcmp(v, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(v, "info") == 0) return LogLevel::Info;
    if (std::strcmp(v, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
}

LogLevel& current_level() {
    static LogLevel level = parse_env_level();
    return level;
}

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warning";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
    }
    return "?";
}

}  // namespace

LogLevel log_level() { return current_level(); }

void set_log_level(LogLevel level) { current_level() = level; }

void log_message(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(current_level())) return;
    std::fprintf(stderr, "[propspan %s] %s\n", level_tag(level), msg.c_str());
}

}  // namespace propspan
