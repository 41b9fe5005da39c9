#pragma once

#include <stdexcept>
#include <string>

namespace msp {

// Error taxonomy mirrors the CLI exit codes: config problems are the
// caller's fault, data problems live in the input files, estimation
// failures are statistical (singular designs, empty cells), and internal
// errors are bugs.  Keep the distinction when adding throw sites.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {   // exit code 2
  using Error::Error;
};

struct DataError : Error {     // exit code 3
  using Error::Error;
};

struct EstimationError : Error {  // exit code 4
  using Error::Error;
};

struct InternalError : Error {    // exit code 5
  using Error::Error;
};

// Invariant check that survives NDEBUG; violations are bugs, not user
// errors, so they map to exit code 5.
inline void require_internal(bool ok, const std::string& what) {
  if (!ok) throw InternalError("internal invariant violated: " + what);
}

inline void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline void require_data(bool ok, const std::string& what) {
  if (!ok) throw DataError(what);
}

}  // namespace msp
