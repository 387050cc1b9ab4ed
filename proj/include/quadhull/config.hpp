/**
 * @file config.hpp
 * @brief Tolerance record and the error type shared by every quadhull module.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quadhull {

/// Numeric thresholds threaded through every module. Instance files may
/// override any of them by name.
struct Tolerances {
  double eig_tol = 1e-9;       ///< relative zero threshold for eigenvalues
  double lin_tol = 1e-9;       ///< relative zero threshold for linear coefficients
  double pivot_tol = 1e-10;    ///< elimination pivots below this are zero
  double slack_tol = 1e-7;     ///< implicit-equality / redundancy slack (absolute)
  double g_snap = 1e-12;       ///< relative snap of the canonical right-hand side to 0
  double solver_tol = 1e-8;    ///< conic solver feasibility / gap tolerance
  double membership_tol = 1e-6;
  double ray_tol = 1e-9;       ///< double-description zero test
  double prune_tol = 1e-7;     ///< candidate points closer than this to the hull of others are dropped
  double surface_tol = 1e-8;   ///< on-surface test for witness / sampling inputs
  std::size_t max_iter = 200;  ///< conic solver iteration cap
  std::size_t dim_cap = 8;     ///< vertex enumeration dimension cap
};

enum class ErrorCode {
  InvalidInput,
  Infeasible,
  Unbounded,
  BudgetExceeded,
  Capacity,
  NumericFailure,
  Internal,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::Unbounded: return "unbounded";
    case ErrorCode::BudgetExceeded: return "budget-exceeded";
    case ErrorCode::Capacity: return "capacity";
    case ErrorCode::NumericFailure: return "numeric-failure";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace quadhull
