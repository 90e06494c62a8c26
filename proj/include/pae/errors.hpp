#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pae {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or record. `line` is 1-based, 0 when not applicable.
class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyPolicy : public Error {
 public:
  using Error::Error;
};
class UnknownPolicy : public Error {
 public:
  using Error::Error;
};
class SpanMismatch : public Error {
 public:
  using Error::Error;
};
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};
class OutOfVocabulary : public Error {
 public:
  using Error::Error;
};
class EmptyVocabulary : public Error {
 public:
  using Error::Error;
};
class DuplicateRule : public Error {
 public:
  using Error::Error;
};
class EmptyParaphraseSet : public Error {
 public:
  using Error::Error;
};
class MissingRanking : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failures of an external backend (scorer or translator). Callers map these
// to exit code 2 / HTTP 502.
class BackendError : public Error {
 public:
  BackendError(std::string backend, const std::string& what)
      : Error(what), backend_(std::move(backend)) {}
  const std::string& backend() const { return backend_; }

 private:
  std::string backend_;
};

class TranslatorUnavailable : public BackendError {
 public:
  explicit TranslatorUnavailable(const std::string& what) : BackendError("translator", what) {}
};
class ScorerUnavailable : public BackendError {
 public:
  explicit ScorerUnavailable(const std::string& what) : BackendError("scorer", what) {}
};
class ProtocolError : public BackendError {
 public:
  explicit ProtocolError(const std::string& what) : BackendError("scorer", what) {}
};
class ScoreOutOfRange : public BackendError {
 public:
  explicit ScoreOutOfRange(const std::string& what) : BackendError("scorer", what) {}
};

}  // namespace pae
