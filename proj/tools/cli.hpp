#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adanns::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,     ///< unknown flag, missing required flag, malformed command
  kConfig = 2,    ///< parameter out of range or inconsistent configuration
  kIo = 3,        ///< missing/unreadable/unwritable file or malformed content
  kInternal = 4,  ///< anything else
};

/// Runs one subcommand (gen | build | search | eval | sweep). `args` excludes
/// the program name. Errors are reported on `err` as a single JSON line.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace adanns::cli
