#pragma once

#include <iosfwd>

namespace liam::io {

/// Exit codes: 0 success, 2 usage or configuration error, 3 I/O, corrupt
/// or incompatible file, 4 non-finite training state, 1 anything else.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace liam::io
