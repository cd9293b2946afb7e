#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace gak {

/// Shared stderr logger. Level comes from the GAK_LOG environment variable
/// (trace, debug, info, warn, error, off); default is warn.
spdlog::logger& log();

}  // namespace gak
