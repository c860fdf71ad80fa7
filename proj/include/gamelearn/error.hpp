#pragma once

#include <stdexcept>
#include <string>

namespace gamelearn {

// Base for every error raised by the library. Callers that only care about
// "something in the model was wrong" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A transition whose deviators move outside their constrained action sets.
class InfeasibleTransition : public Error {
 public:
  using Error::Error;
};

// A precondition of an analysis (separability, potential structure) failed.
class PreconditionFailed : public Error {
 public:
  using Error::Error;
};

class ScaleError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gamelearn
