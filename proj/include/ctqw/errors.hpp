#pragma once

#include <stdexcept>
#include <string>

namespace ctqw {

// A documented precondition was violated by the caller (bad shape, non-unit
// state, invalid density matrix, non-positive rate, ...).
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed text input. Carries the 1-based line number of the offending line.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, long line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

// A numerical postcondition failed (imaginary residue too large, probability
// out of range, independent singularity probes disagree). Results that raise
// this must not be trusted; the CLI maps it to exit code 2.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctqw
