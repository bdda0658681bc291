#pragma once

#include <iosfwd>

namespace evonet {

/// Entry point of the `evonet` tool. Returns the process exit code:
/// 0 success, 1 numeric failure during a run, 2 usage or configuration error.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace evonet
