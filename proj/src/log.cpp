#include "stormlens/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace stormlens::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("STORMLENS_LOG");
  if (v == nullptr) return Level::warn;
  if (std::strcmp(v, "error") == 0) return Level::error;
  if (std::strcmp(v, "warn") == 0) return Level::warn;
  if (std::strcmp(v, "info") == 0) return Level::info;
  if (std::strcmp(v, "debug") == 0) return Level::debug;
  return Level::warn;
}

Level g_threshold = parse_env();

const char* tag(Level lvl) {
  switch (lvl) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() { return g_threshold; }
void set_threshold(Level lvl) { g_threshold = lvl; }

void write(Level lvl, const std::string& msg) {
  std::fprintf(stderr, "[%s] %s\n", tag(lvl), msg.c_str());
}

}  // namespace stormlens::log
