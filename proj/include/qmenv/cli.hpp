#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qmenv {

/// Exit codes: 0 success, 1 domain or validation failure, 2 I/O, parse or usage failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace qmenv
