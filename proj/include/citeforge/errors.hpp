#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace citeforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// One offending location inside an input record.
struct Issue {
  std::string record;  // paper_id, example_id, or line number
  std::string path;    // JSON-pointer-like field path
  std::string message;
};

/// Input failed schema or referential validation. Carries every issue found,
/// not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Issue> issues);
  const std::vector<Issue>& issues() const noexcept { return issues_; }
  const char* kind() const noexcept override { return "validation"; }

 private:
  std::vector<Issue> issues_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "not_found"; }
};

class BudgetError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "budget"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

/// Precondition on caller-supplied arguments (sizes, counts, config values).
class ArgumentError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "argument"; }
};

}  // namespace citeforge
