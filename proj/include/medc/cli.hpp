#pragma once

#include <string>
#include <vector>

namespace medc {

// exit codes: 0 success, 2 partial coverage / human input required, 1 error
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args); // without the program name

} // namespace medc
