// rcchain command-line front end. Kept as a library so tests can drive it
// in-process.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rcchain::cli {

enum ExitCode : int {
    ok = 0,
    usage_or_config = 2,
    instability = 3,
    integrity = 4,
    assertion = 5,
    io_or_parse = 6,
};

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace rcchain::cli
