#pragma once

#include <string>

namespace fomo {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

// Level comes from FOMO_LOG (debug|info|warn|error), default info.
// Messages go to stderr so machine-readable stdout stays clean.
void log_init_from_env();
void log_set_level(LogLevel level);
LogLevel log_level();
void log_msg(LogLevel level, const std::string& msg);

inline void log_debug(const std::string& m) { log_msg(LogLevel::kDebug, m); }
inline void log_info(const std::string& m) { log_msg(LogLevel::kInfo, m); }
inline void log_warn(const std::string& m) { log_msg(LogLevel::kWarn, m); }
inline void log_error(const std::string& m) { log_msg(LogLevel::kError, m); }

}  // namespace fomo
