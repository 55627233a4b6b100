#pragma once

#include <stdexcept>
#include <tuple>

#include "smup/matrix.hpp"
#include "smup/rng.hpp"

namespace smup {

/// Thrown when an iterative method hits its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(std::string what, int64_t iterations, double last, double prev)
        : std::runtime_error(std::move(what)),
          iterations(iterations),
          last_estimate(last),
          prev_estimate(prev) {}

    int64_t iterations;
    double last_estimate;
    double prev_estimate;
};

/// rows x cols matrix with i.i.d. Normal(0, std^2) entries, consumed
/// sequentially from `rng` (rows*cols draws).
Matrix gaussian_matrix(RngStream& rng, int64_t rows, int64_t cols, double std_dev);

/// Dense product a*b. Dimension mismatch throws std::invalid_argument.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Largest singular value via one-sided Jacobi, accurate to ~tol relative
/// error. Iteration cap: 10*max(rows, cols) sweeps, then ConvergenceError.
double svd_max_singular(const Matrix& a, double tol);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;  // of log(y) vs log(x)
    double r2 = 0.0;
};

/// Ordinary least squares on (log x, log y). Requires >= 3 strictly
/// positive points.
LogLogFit fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace smup
