#include "satconv/tools/threads.hpp"

#include <charconv>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace satconv::tools {

unsigned resolve_threads(std::optional<unsigned> flag) {
  if (flag) {
    if (*flag == 0) throw std::invalid_argument("thread count must be positive");
    return *flag;
  }
  const char* env = std::getenv("SATCONV_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  const std::string_view s(env);
  unsigned v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || v == 0) {
    throw std::invalid_argument("SATCONV_THREADS must be a positive integer, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace satconv::tools
