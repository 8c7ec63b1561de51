#pragma once

namespace stuperf {

/// Entry point behind the `stuperf` binary. Exit codes: 0 success,
/// 1 runtime/config failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace stuperf
