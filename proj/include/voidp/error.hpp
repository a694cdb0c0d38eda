#pragma once

#include <stdexcept>
#include <string>

namespace voidp {

/// Base class for all library errors. The exit code maps onto the CLI contract.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// A model, evidence set, reward spec or cost model violates its invariants.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what, 2) {}
};

/// The inputs are well formed but the request cannot be satisfied.
class InfeasibleInput : public Error {
 public:
  explicit InfeasibleInput(const std::string& what) : Error(what, 3) {}
};

/// Evidence (or an HMM emission sequence) has probability zero under the model.
class ZeroProbabilityEvidence : public InfeasibleInput {
 public:
  explicit ZeroProbabilityEvidence(const std::string& what)
      : InfeasibleInput("zero-probability evidence: " + what) {}
};

/// Enumeration or table size exceeds a hard cap.
class CapacityExceeded : public InfeasibleInput {
 public:
  explicit CapacityExceeded(const std::string& what) : InfeasibleInput(what) {}
};

/// File could not be read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, 4) {}
};

/// A serialized document does not match its schema. `field` is a JSON-pointer-like path.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : Error("schema error at '" + field + "': " + what, 4), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace voidp
