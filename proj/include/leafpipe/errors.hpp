#pragma once

#include <stdexcept>
#include <string>

namespace leafpipe {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used by the CLI for its single-line machine-parsable error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error("argument", w) {}

 protected:
  ArgumentError(std::string kind, const std::string& w) : Error(std::move(kind), w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};
struct DecodeError : Error {
  explicit DecodeError(const std::string& w) : Error("decode", w) {}
};
struct DegenerateError : Error {
  explicit DegenerateError(const std::string& w) : Error("degenerate", w) {}
};
struct SolverError : Error {
  explicit SolverError(const std::string& w) : Error("solver", w) {}
};
struct DivergenceError : Error {
  DivergenceError(const std::string& w, int epoch)
      : Error("divergence", w + " (epoch " + std::to_string(epoch) + ")"), epoch(epoch) {}
  int epoch;
};
struct ParseError : Error {
  ParseError(const std::string& w, long line)
      : Error("parse", "line " + std::to_string(line) + ": " + w), line(line) {}
  long line;
};
/// An ArgumentError with its own tag so the CLI can report it distinctly.
struct DictionaryMismatch : ArgumentError {
  explicit DictionaryMismatch(const std::string& w) : ArgumentError("dictionary-mismatch", w) {}
};
struct LoadError : Error {
  explicit LoadError(const std::string& w) : Error("load", w) {}

 protected:
  LoadError(std::string kind, const std::string& w) : Error(std::move(kind), w) {}
};
/// Schema-version mismatch; a LoadError with its own tag.
struct VersionError : LoadError {
  explicit VersionError(const std::string& w) : LoadError("version", w) {}
};
struct IngestError : Error {
  explicit IngestError(const std::string& w) : Error("ingest", w) {}
};

}  // namespace leafpipe
