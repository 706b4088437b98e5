#include "hahnforge/budget.hpp"

#include <cstdlib>

namespace hahnforge {

namespace {
std::int64_t g_default_limit = [] {
  if (const char* env = std::getenv("HAHNFORGE_BUDGET")) {
    char* end = nullptr;
    long long v = std::strtoll(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<std::int64_t>(v);
  }
  return static_cast<std::int64_t>(100000);
}();
}  // namespace

Budget Budget::with_default() { return Budget(g_default_limit); }

std::int64_t Budget::default_limit() { return g_default_limit; }

void Budget::set_default_limit(std::int64_t limit) {
  if (limit > 0) g_default_limit = limit;
}

}  // namespace hahnforge
