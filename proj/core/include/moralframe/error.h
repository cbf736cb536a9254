#ifndef MORALFRAME_ERROR_H_
#define MORALFRAME_ERROR_H_

#include <stdexcept>
#include <string>

namespace moralframe {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data: unreadable files, malformed records,
// degenerate numerical inputs. The CLI maps this to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

// A persisted artifact carries a schema version this build does not read.
class SchemaVersionError : public DataError {
 public:
  SchemaVersionError(const std::string& what, int found, int expected)
      : DataError(what), found_(found), expected_(expected) {}

  int found() const { return found_; }
  int expected() const { return expected_; }

 private:
  int found_;
  int expected_;
};

// Invalid arguments supplied by the caller (CLI exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace moralframe

#endif  // MORALFRAME_ERROR_H_
