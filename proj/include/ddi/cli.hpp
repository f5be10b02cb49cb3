#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ddi::cli {

/// Runs one subcommand. `args` excludes the program name. Progress goes to
/// `out`; failures print a single "ddi: ..." line to `err` and return nonzero.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddi::cli
