#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace besq {

inline constexpr const char* version_string = "besq-lab 1.0.0";

/// Runs one subcommand. Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace besq
