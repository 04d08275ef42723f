#pragma once

#include <string>
#include <vector>

namespace msgame {

// Front end behind the msgame binary. `args` excludes the program name.
// Returns 0 on success, 1 on contract violations (bad arguments, failed
// validation or certification, detection failure), 2 on I/O problems.
int run_cli(std::vector<std::string> args);

}  // namespace msgame
