#pragma once

#include <ostream>

namespace rpmixer {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rpmixer
