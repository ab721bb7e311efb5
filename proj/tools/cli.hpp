#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bayesid::cli {

/// Entry point shared by the `bayesid` binary and the tests. Returns the
/// process exit status (0 success, 1 runtime failure, 2 usage error).
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bayesid::cli
