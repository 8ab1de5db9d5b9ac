#ifndef FMSEG_CLI_HPP
#define FMSEG_CLI_HPP

namespace fmseg {

/// Command-line entry point (synth | augment | train | eval | analyze).
/// Returns 0 on success, 2 on usage/configuration errors, 1 on runtime
/// failures.
int run_cli(int argc, const char* const* argv);

}  // namespace fmseg

#endif
