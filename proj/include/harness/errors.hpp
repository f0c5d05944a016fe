#pragma once

#include <stdexcept>
#include <string>

namespace harness {

struct GateDecision; // gatekeeper.hpp

// Contract violation on a kernel operation (bad precondition, bad input).
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Filesystem / serialization failure.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Event-log corruption. Names the first unreadable line.
class IntegrityError : public std::runtime_error {
public:
  IntegrityError(std::string msg, std::size_t line)
      : std::runtime_error(std::move(msg)), first_bad_line(line) {}
  std::size_t first_bad_line;
};

// A role attempted an action the authority matrix denies.
class AuthorityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace harness
