#pragma once

#include <stdexcept>
#include <string>

namespace cspi {

// Input fails a documented precondition or structural invariant
// (non-Hermitian A, non-symmetric B, bad shapes, label length mismatch, ...).
class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside its admissible range (t outside [0, T], lambda outside range, ...).
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

// alpha (or conj(alpha)) is numerically singular where a solve is required.
class singularity_error : public std::runtime_error {
 public:
  explicit singularity_error(const std::string& what) : std::runtime_error(what) {}
};

// Integration or iterative refinement failed to meet its configured bound.
class integration_error : public std::runtime_error {
 public:
  explicit integration_error(const std::string& what) : std::runtime_error(what) {}
};

// Input file is structurally usable as nothing (empty family, no work to do);
// the command line maps this to its usage exit code.
class usage_error : public std::invalid_argument {
 public:
  explicit usage_error(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace cspi
