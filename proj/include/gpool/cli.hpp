#ifndef GPOOL_CLI_HPP
#define GPOOL_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace gpool {

/// Runs one CLI subcommand. Returns 0 on success, 1 on a runtime failure and
/// 2 on a usage error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace gpool

#endif  // GPOOL_CLI_HPP
