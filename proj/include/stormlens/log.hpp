#pragma once

#include <fmt/format.h>

namespace stormlens::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold comes from the STORMLENS_LOG environment variable
// (error|warn|info|debug); default is warn.
Level threshold();
void set_threshold(Level lvl);
void write(Level lvl, const std::string& msg);

template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  if (threshold() >= Level::warn) write(Level::warn, fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  if (threshold() >= Level::info) write(Level::info, fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  if (threshold() >= Level::debug) write(Level::debug, fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace stormlens::log
