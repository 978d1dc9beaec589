#pragma once

#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace stormlens {

/// Error carrying a formatted, user-facing message. Every failure surfaced by
/// the library (parse errors, contract violations, impossible requests) is
/// reported through this type so the CLI can turn it into a structured exit.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}

  template <typename... Args>
  static Error at(fmt::format_string<Args...> f, Args&&... args) {
    return Error(fmt::format(f, std::forward<Args>(args)...));
  }
};

}  // namespace stormlens
