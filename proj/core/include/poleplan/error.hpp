#pragma once

#include <stdexcept>
#include <string>

namespace poleplan {

// Base of everything the library throws on bad input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a type invariant (bbox order, probability range, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A file or request body could not be parsed. `where` names the line or
// feature index when known.
class FormatError : public Error {
 public:
  FormatError(const std::string& where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(where) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// Demand exists but no candidate could possibly serve it.
class Infeasible : public Error {
 public:
  using Error::Error;
};

}  // namespace poleplan
