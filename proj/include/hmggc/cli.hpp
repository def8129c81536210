#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hmggc::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 every checked property holds, 1 a violation was found,
// 2 usage or configuration error, 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace hmggc::cli
