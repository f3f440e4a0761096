#pragma once

#include <stdexcept>
#include <string>

namespace rcr {

enum class ErrorCode {
  kParse,
  kCapacity,
  kNotCountNormalized,
  kNoFeasibleWorld,
  kInvalidArgument,
  kInference,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message)
      : Error(ErrorCode::kParse, "parse error at " + std::to_string(line) + ":" +
                                     std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class CapacityError : public Error {
 public:
  explicit CapacityError(std::string message)
      : Error(ErrorCode::kCapacity, std::move(message)) {}
};

/// Raised when an equivalence fails the count-normalization check. Carries a
/// witness pair of original groundings that appear in different numbers of
/// ground equivalences.
class NotCountNormalizedError : public Error {
 public:
  NotCountNormalizedError(std::string witness_a, long count_a, std::string witness_b,
                          long count_b)
      : Error(ErrorCode::kNotCountNormalized,
              "equivalence is not count-normalized: " + witness_a + " appears in " +
                  std::to_string(count_a) + " ground equivalences but " + witness_b +
                  " appears in " + std::to_string(count_b)),
        witness_a_(std::move(witness_a)),
        witness_b_(std::move(witness_b)),
        count_a_(count_a),
        count_b_(count_b) {}

  const std::string& witness_a() const { return witness_a_; }
  const std::string& witness_b() const { return witness_b_; }
  long count_a() const { return count_a_; }
  long count_b() const { return count_b_; }

 private:
  std::string witness_a_;
  std::string witness_b_;
  long count_a_;
  long count_b_;
};

/// Every world violates some hard formula; marginals are undefined.
class NoFeasibleWorldError : public Error {
 public:
  NoFeasibleWorldError()
      : Error(ErrorCode::kNoFeasibleWorld,
              "all worlds have zero weight; the distribution is undefined") {}
};

}  // namespace rcr
