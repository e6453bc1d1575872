#pragma once

#include <stdexcept>
#include <string>

namespace grandcouple {

// Malformed input: dimension mismatches, invalid parameters, bad configs.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A guard on problem size was exceeded (exhaustive permutations, LP tuples).
class TooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A rejection loop or iterative solver hit its hard cap.
class IterationCap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A Poisson scan met an atom whose density ratio exceeds 1 / w_min.
class InvalidBound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The operation has no implementation for this measure kind.
class UnsupportedKind : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace grandcouple
