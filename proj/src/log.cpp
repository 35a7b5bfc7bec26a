#include "fomo/log.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>

namespace fomo {

namespace {
LogLevel g_level = LogLevel::kInfo;

const char* level_name(LogLevel l) {
    switch (l) {
        case LogLevel::kDebug: return "DEBUG";
        case LogLevel::kInfo: return "INFO";
        case LogLevel::kWarn: return "WARN";
        case LogLevel::kError: return "ERROR";
    }
    return "?";
}
}  // namespace

void log_init_from_env() {
    const char* env = std::getenv("FOMO_LOG");
    if (!env) return;
    if (std::strcmp(env, "debug") == 0) g_level = LogLevel::kDebug;
    else if (std::strcmp(env, "info") == 0) g_level = LogLevel::kInfo;
    else if (std::strcmp(env, "warn") == 0) g_level = LogLevel::kWarn;
    else if (std::strcmp(env, "error") == 0) g_level = LogLevel::kError;
}

void log_set_level(LogLevel level) { g_level = level; }

LogLevel log_level() { return g_level; }

void log_msg(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) < static_cast<int>(g_level)) return;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
    std::fprintf(stderr, "[%s] %-5s %s\n", stamp, level_name(level), msg.c_str());
}

}  // namespace fomo
