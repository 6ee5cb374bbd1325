#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gods {

using Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

enum class ErrorCode {
  Dimension,
  EmptyData,
  Domain,
  Parse,
  Schema,
  Io,
  NotPositiveDefinite,
  Conditioning,
  DegenerateStep,
  Numeric,
};

/// Single exception type for the library; the code decides how callers react
/// (the CLI maps input problems to exit 1 and numeric failures to exit 2).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline bool is_numeric_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::Conditioning:
    case ErrorCode::DegenerateStep:
    case ErrorCode::Numeric:
      return true;
    default:
      return false;
  }
}

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Dimension: return "dimension error";
    case ErrorCode::EmptyData: return "empty data";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Schema: return "schema error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::NotPositiveDefinite: return "not positive definite";
    case ErrorCode::Conditioning: return "conditioning error";
    case ErrorCode::DegenerateStep: return "degenerate step";
    case ErrorCode::Numeric: return "numeric error";
  }
  return "error";
}

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::Dimension, what);
}

}  // namespace gods
