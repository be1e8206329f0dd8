#pragma once

#include <iosfwd>

namespace nmtk::cli {

/// Runs one subcommand. Returns 0 on success, 1 on a toolkit error (printed
/// as `error<TAB>Code<TAB>message`), 2 on usage errors.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace nmtk::cli
