#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace tdclean {

// Base of every failure raised by the library. `kind()` is a stable,
// machine-readable identifier used by the command line tool.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class MalformedDiff : public Error {
 public:
  explicit MalformedDiff(std::size_t line_no, const std::string& detail = {})
      : Error("MalformedDiff", "malformed diff at line " + std::to_string(line_no) +
                                   (detail.empty() ? "" : ": " + detail)),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class SchemaViolation : public Error {
 public:
  SchemaViolation(std::size_t line_no, const std::string& detail)
      : Error("SchemaViolation", "schema violation at line " + std::to_string(line_no) + ": " + detail),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class IoFailure : public Error {
 public:
  explicit IoFailure(const std::string& what) : Error("IoFailure", what) {}
};

class TooFewSamples : public Error {
 public:
  explicit TooFewSamples(std::size_t n)
      : Error("TooFewSamples", "need at least 10 samples to split, got " + std::to_string(n)) {}
};

class Insufficient : public Error {
 public:
  Insufficient(const std::string& label, std::size_t have, std::size_t want)
      : Error("Insufficient", "requested " + std::to_string(want) + " " + label + " samples, only " +
                                  std::to_string(have) + " available") {}
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("EmptyCorpus", "cannot build a vocabulary from an empty corpus") {}
};

class MissingExternalVector : public Error {
 public:
  explicit MissingExternalVector(const std::string& text_hash)
      : Error("MissingExternalVector", "no external vector for text hash " + text_hash),
        hash_(text_hash) {}
  const std::string& text_hash() const noexcept { return hash_; }

 private:
  std::string hash_;
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("ShapeMismatch", what) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t preds, std::size_t labels)
      : Error("LengthMismatch", std::to_string(preds) + " predictions for " + std::to_string(labels) + " labels") {}
};

class EmptyEvaluation : public Error {
 public:
  EmptyEvaluation() : Error("EmptyEvaluation", "no samples were evaluated") {}
};

class GitUnavailable : public Error {
 public:
  explicit GitUnavailable(const std::string& what) : Error("GitUnavailable", what) {}
};

class NotARepository : public Error {
 public:
  explicit NotARepository(const std::string& path)
      : Error("NotARepository", path + " is not a git repository") {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("InvalidArgument", what) {}
};

}  // namespace tdclean
