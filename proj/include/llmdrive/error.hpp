#pragma once

#include <stdexcept>
#include <string>

namespace llmdrive {

// Bad argument or record contents (non-finite value, out-of-range pedal, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input text/JSON. `offset` is a byte offset or line number,
// depending on the producer; -1 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long offset = -1)
      : std::runtime_error(what), offset_(offset) {}
  long offset() const noexcept { return offset_; }

 private:
  long offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace llmdrive
