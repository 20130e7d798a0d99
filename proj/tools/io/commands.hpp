#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jmlab::io {

enum ExitCode { Ok = 0, ConfigFailure = 2, NumericFailure = 3 };

const std::vector<std::string>& command_names();

/// Runs one command on a config file, writing artifacts into `out_dir`
/// (created if missing). Failures leave error.json there as well.
int run(const std::string& command, const std::string& config_path, const std::string& out_dir, std::ostream& log);

}  // namespace jmlab::io
