#pragma once

#include <optional>

namespace satconv::tools {

/// Worker count: the explicit flag if given, else SATCONV_THREADS, else 1.
/// Throws std::invalid_argument for a malformed or zero environment value.
unsigned resolve_threads(std::optional<unsigned> flag);

}  // namespace satconv::tools
