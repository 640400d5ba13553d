#pragma once

#include <stdexcept>
#include <string>

namespace spangcn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (bracketed trees, JSONL, embedding files).
struct ParseError : Error {
  using Error::Error;
};

// Incompatible tensor shapes in a primitive application.
struct ShapeError : Error {
  using Error::Error;
};

// NaN/Inf encountered in a forward value or a gradient.
struct NumericError : Error {
  using Error::Error;
};

// Violated data invariants (spans, vocabularies, configs).
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace spangcn
