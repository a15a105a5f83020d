#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tabinfill {

// Errors caused by the data or configuration a caller supplied. The CLI maps
// every DataError to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

class ArtifactError : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedVersionError : public ArtifactError {
 public:
  explicit UnsupportedVersionError(int found)
      : ArtifactError("unsupported artifact format version " + std::to_string(found)),
        found_(found) {}

  int found() const noexcept { return found_; }

 private:
  int found_;
};

}  // namespace tabinfill
