#pragma once

#include <string>
#include <vector>

namespace stripedepth::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kConfig = 2,
    kIo = 3,
    kSimulation = 4,
    kNonFinite = 5,
    kProcessing = 6,  // reconstruction, model, training or evaluation failure
};

/// Parses `args` (without the program name) and runs one subcommand.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace stripedepth::cli
