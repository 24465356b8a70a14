#pragma once

#include <iosfwd>

namespace pheno::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable holding the default output directory.
inline constexpr const char* kOutDirEnv = "PHENO_OUT_DIR";

/// Entry point of the `pheno` command. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pheno::cli
