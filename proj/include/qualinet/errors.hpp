#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qualinet {

/// Base class of every domain error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SourceLocation {
  int line = 0;
  int column = 0;
};

struct Diagnostic {
  SourceLocation location;
  std::string message;

  std::string str() const;
};

/// Raised by the model parser; carries every diagnostic found.
class ModelError : public Error {
 public:
  explicit ModelError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Structural problem found while turning a model into a network.
class CompileError : public Error {
 public:
  using Error::Error;
};

/// A node id that does not exist in the network.
class UnknownNodeError : public Error {
 public:
  explicit UnknownNodeError(std::string node)
      : Error("unknown node '" + node + "'"), node_(std::move(node)) {}

  const std::string& node() const { return node_; }

 private:
  std::string node_;
};

/// Evidence that is malformed for the node it targets (bad label, number on a
/// ranked node, state out of range).
class InvalidEvidenceError : public Error {
 public:
  using Error::Error;
};

/// Evidence with probability zero under the network.
class ImpossibleEvidenceError : public Error {
 public:
  ImpossibleEvidenceError() : Error("impossible evidence: P(evidence) = 0") {}
};

}  // namespace qualinet
