#pragma once

#include <cstdint>
#include <vector>

#include "smup/linalg.hpp"
#include "smup/matrix.hpp"
#include "smup/rng.hpp"

namespace smup {

enum class NormMethod { PowerIteration, DenseSVD, MonteCarlo };

struct NormEstimate {
    double value = 0.0;
    NormMethod method = NormMethod::PowerIteration;
    int64_t samples_or_iters = 0;
    double std_error = 0.0;  // 0 for deterministic methods
};

/// Largest singular value by power iteration on A^T A, started from a
/// deterministic Gaussian vector (reserved stream). Relative tolerance is
/// judged on successive Rayleigh quotients; exceeding max_iters throws
/// ConvergenceError carrying the last two quotients.
NormEstimate spectral_norm(const Matrix& a, double tol = 1e-6, int64_t max_iters = 5000);

/// Monte-Carlo estimate of E[ ||Ax||_2 / ||x||_2 ] over x with i.i.d.
/// standard normal entries. std_error = sample std / sqrt(num_samples).
/// A zero-norm sample (probability zero) is resampled; trips are counted
/// in *guard_trips when given.
NormEstimate expected_operator_norm(const Matrix& a, const RngStream& rng, int64_t num_samples,
                                    int64_t* guard_trips = nullptr);

/// (r * a.rows()) x a.cols() matrix stacking r copies of a.
Matrix concat_rows(const Matrix& a, int64_t r);

/// Asymptotic spectral-norm prediction std*(sqrt(rows)+sqrt(cols)) for an
/// i.i.d. matrix of the given shape.
double bai_yin_estimate(int64_t rows, int64_t cols, double std_dev);

namespace detail {
/// Per-sample ratios ||A x_j|| / ||x_j|| for caller-provided samples
/// (each row of xs is one x). Lets tests evaluate several matrices on a
/// shared sample set.
std::vector<double> operator_norm_ratios(const Matrix& a, const Matrix& xs);

/// Mean/stderr reduction used by expected_operator_norm: strictly
/// left-to-right over sample index, so any partitioning that writes
/// disjoint index ranges reduces to the identical result.
NormEstimate reduce_ratios(const std::vector<double>& ratios);
}  // namespace detail

}  // namespace smup
