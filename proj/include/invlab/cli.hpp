#pragma once

namespace invlab {

/// Entry point behind the `invlab` binary. Returns the process exit code:
/// 0 on success, 2 on usage/validation errors, 1 on runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace invlab
