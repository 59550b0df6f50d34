#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nwt {

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorKind { validation, runtime, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// State does not fit the grid (boundary density or spread too large).
struct GridError : Error {
  explicit GridError(const std::string& w) : Error(ErrorKind::runtime, "grid: " + w) {}
};

/// A kick that cannot be represented on the periodic grid without aliasing.
struct AliasingError : Error {
  explicit AliasingError(const std::string& w) : Error(ErrorKind::runtime, "kick aliasing: " + w) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(ErrorKind::runtime, "dimension mismatch: " + w) {}
};

/// Malformed or incomplete measurement data.
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::runtime, "data: " + w) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::validation, w) {}
};

struct IoError : Error {
  IoError(const std::string& path, const std::string& w)
      : Error(ErrorKind::io, path + ": " + w) {}
};

/// One diagnostic produced while reading a configuration document.
struct ConfigIssue {
  int line = 0;  // 0 when the issue is not tied to a line
  std::string message;
};

/// Aggregates every syntax and validation problem found in a document.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : Error(ErrorKind::validation, render(issues)), issues_(std::move(issues)) {}
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string render(const std::vector<ConfigIssue>& issues) {
    std::string out = "configuration invalid:";
    for (const auto& i : issues) {
      out += "\n  ";
      if (i.line > 0) out += "line " + std::to_string(i.line) + ": ";
      out += i.message;
    }
    return out;
  }
  std::vector<ConfigIssue> issues_;
};

}  // namespace nwt
