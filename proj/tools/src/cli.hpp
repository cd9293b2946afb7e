#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gak::cli {

/// Runs one command line (program name excluded). Returns 0 on success, 1
/// when the library rejects the input and 2 for usage errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gak::cli
