#pragma once

#include <iosfwd>

namespace tagrank::cli {

// Entry point of the `tagrank` tool. Returns 0 on success, 1 on data or
// provider errors and 2 on usage errors. Results go to `out` unless a
// command writes them to a file; diagnostics and the effective seed go to
// `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tagrank::cli
