#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tabinfill::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2 };

// Runs the command line. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

// Output path for one of the sets written next to an artifact or encoded CSV:
// "dir/a.tifa" with suffix "train" gives "dir/a.train.csv".
std::string sibling_path(const std::string& path, const std::string& suffix);

}  // namespace tabinfill::cli
