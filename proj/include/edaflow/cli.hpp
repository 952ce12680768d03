#pragma once

#include <iosfwd>

namespace edaflow {

// Exit codes returned by dispatch.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitSolver = 3;

// Runs one CLI invocation. Subcommands: synth, preprocess, decompose,
// features, evaluate, metrics.
int dispatch(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err);

}  // namespace edaflow
