#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace infoflow {

/// Invalid or inconsistent user configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure at runtime, e.g. divergent training (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// I/O or parse failure; carries the byte offset where parsing stopped
/// (CLI exit code 4).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t byte_offset,
             const std::string& what)
      : std::runtime_error(path + ": byte " + std::to_string(byte_offset) +
                           ": " + what),
        path_(path),
        byte_offset_(byte_offset) {}

  const std::string& path() const { return path_; }
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::string path_;
  std::size_t byte_offset_;
};

}  // namespace infoflow
