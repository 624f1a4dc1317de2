#include "randbc/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace randbc {

int default_threads() {
    const char* env = std::getenv("RANDBC_THREADS");
    if (!env) return 1;
    int value = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), value);
    if (ec != std::errc() || value < 1) return 1;
    return value;
}

} // namespace randbc
