#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aesl {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller violated a documented precondition (dimension mismatch, bad config, ...).
class ContractError : public Error {
public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

/// A matrix factorization hit a non-positive pivot. Carries the pivot index.
class SingularityError : public Error {
public:
  SingularityError(const std::string& msg, std::size_t pivot)
      : Error(msg + " (pivot " + std::to_string(pivot) + ")"), pivot_index(pivot) {}
  std::size_t pivot_index;
};

/// Training produced a non-finite loss; the offending step was not applied.
class TrainingDivergedError : public Error {
public:
  explicit TrainingDivergedError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class BadMagicError : public IoError {
public:
  explicit BadMagicError(const std::string& msg) : IoError(msg) {}
};

class TruncatedFileError : public IoError {
public:
  explicit TruncatedFileError(const std::string& msg) : IoError(msg) {}
};

class CountMismatchError : public IoError {
public:
  explicit CountMismatchError(const std::string& msg) : IoError(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace aesl
