#include "leafpipe/parallel.hpp"

#include "leafpipe/errors.hpp"

#include <cstdlib>
#include <string>

namespace leafpipe {

int resolve_jobs(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ArgumentError("--jobs must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("LEAFPIPE_JOBS"); env && *env) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(env, &used);
      if (used == std::string(env).size() && n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ArgumentError(std::string("LEAFPIPE_JOBS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

}  // namespace leafpipe
