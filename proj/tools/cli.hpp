#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pulseline::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kPipelineError = 1;
inline constexpr int kUsageError = 2;

/// Runs one subcommand. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace pulseline::cli
