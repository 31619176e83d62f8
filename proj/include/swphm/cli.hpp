#pragma once

#include <iosfwd>

namespace swphm::cli {

/// Runs one command line. Returns 0 on success, 2 on usage errors and 1 on
/// any other failure. Errors print {"error": CODE} on `out` and a message
/// on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace swphm::cli
