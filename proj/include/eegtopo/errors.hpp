#pragma once

#include <stdexcept>
#include <string>

namespace eegtopo {

// Error categories map one-to-one onto CLI exit codes:
// ConfigError -> 2, DataError -> 3, NumericalError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

}  // namespace eegtopo
