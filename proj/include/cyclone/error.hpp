#pragma once

#include <stdexcept>
#include <string>

namespace cyclone {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, invalid configuration, dangling labels.
/// The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class GraphError : public InputError {
 public:
  using InputError::InputError;
};

/// Raised when the modularity total weight m is zero.
class ModularityUndefined : public InputError {
 public:
  ModularityUndefined() : InputError("modularity undefined (m = 0)") {}
};

}  // namespace cyclone
