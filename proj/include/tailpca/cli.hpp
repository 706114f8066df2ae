#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace tailpca::cli {

// Reads a key=value config file: one pair per line, '#' starts a comment,
// surrounding whitespace is trimmed. Throws std::invalid_argument on
// unreadable files or malformed lines.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Command-line front end. `args` excludes the program name, e.g.
// {"analyze", "--input", "data.csv", "--k", "200"}.
//
// Exit codes: 0 on success (including --help), 1 for runtime failures
// (unreadable data, degenerate inputs, failed verification checks),
// 2 for usage errors (unknown command/option/value).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tailpca::cli
