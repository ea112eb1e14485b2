#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vortexscore::cli {

/// Exit statuses, one per error class.
enum ExitStatus : int {
    kOk = 0,
    kCheckFailed = 1,
    kUsage = 2,
    kDomain = 3,
    kPrecondition = 4,
    kModelDivergence = 5,
    kDegenerate = 6,
    kCorruption = 7,
    kVersion = 8,
    kSchema = 9,
    kIo = 10,
    kInternal = 70,
};

/// Parses and runs one command line. argv[0] is the program name.
int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace vortexscore::cli
