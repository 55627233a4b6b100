#include "smup/norms.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

namespace smup {

using EigenRowM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const EigenRowM>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using VecMapConst = Eigen::Map<const Eigen::VectorXd>;

NormEstimate spectral_norm(const Matrix& a, double tol, int64_t max_iters) {
    if (a.empty()) throw std::invalid_argument("spectral_norm: empty matrix");
    if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm: tol must be > 0");
    if (max_iters < 1) throw std::invalid_argument("spectral_norm: max_iters must be >= 1");

    MapConst A(a.data(), a.rows(), a.cols());
    RngStream start(stream_ids::kPowerIterationStart, 0);
    Eigen::VectorXd v(a.cols());
    for (int64_t i = 0; i < a.cols(); ++i) v[i] = start.next_gaussian();
    v.normalize();

    Eigen::VectorXd u(a.rows());
    double sigma_prev = 0.0;
    double sigma = 0.0;
    int stable = 0;
    for (int64_t it = 1; it <= max_iters; ++it) {
        u.noalias() = A * v;
        sigma_prev = sigma;
        sigma = u.norm();
        if (sigma == 0.0) {
            return {0.0, NormMethod::PowerIteration, it, 0.0};
        }
        v.noalias() = A.transpose() * u;
        const double vn = v.norm();
        if (vn == 0.0) {
            return {sigma, NormMethod::PowerIteration, it, 0.0};
        }
        v /= vn;
        if (it > 1 && std::fabs(sigma - sigma_prev) <= tol * sigma) {
            if (++stable >= 2) {
                return {sigma, NormMethod::PowerIteration, it, 0.0};
            }
        } else {
            stable = 0;
        }
    }
    throw ConvergenceError("spectral_norm: no convergence after " +
                               std::to_string(max_iters) + " iterations",
                           max_iters, sigma, sigma_prev);
}

namespace detail {

std::vector<double> operator_norm_ratios(const Matrix& a, const Matrix& xs) {
    if (xs.cols() != a.cols()) {
        throw std::invalid_argument("operator_norm_ratios: sample dim mismatch");
    }
    MapConst A(a.data(), a.rows(), a.cols());
    std::vector<double> ratios(static_cast<size_t>(xs.rows()));
    Eigen::VectorXd y(a.rows());
    for (int64_t j = 0; j < xs.rows(); ++j) {
        VecMapConst x(xs.data() + j * xs.cols(), xs.cols());
        const double xn = x.norm();
        y.noalias() = A * x;
        ratios[static_cast<size_t>(j)] = y.norm() / xn;
    }
    return ratios;
}

NormEstimate reduce_ratios(const std::vector<double>& ratios) {
    const auto n = static_cast<int64_t>(ratios.size());
    double sum = 0.0;
    for (double r : ratios) sum += r;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double r : ratios) {
        const double d = r - mean;
        ss += d * d;
    }
    const double sample_std = (n > 1) ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    NormEstimate e;
    e.value = mean;
    e.method = NormMethod::MonteCarlo;
    e.samples_or_iters = n;
    e.std_error = sample_std / std::sqrt(static_cast<double>(n));
    return e;
}

}  // namespace detail

NormEstimate expected_operator_norm(const Matrix& a, const RngStream& rng, int64_t num_samples,
                                    int64_t* guard_trips) {
    if (a.empty()) throw std::invalid_argument("expected_operator_norm: empty matrix");
    if (num_samples < 2) {
        throw std::invalid_argument("expected_operator_norm: num_samples must be >= 2");
    }

    MapConst A(a.data(), a.rows(), a.cols());
    const int64_t dim = a.cols();
    std::vector<double> ratios(static_cast<size_t>(num_samples));
    Eigen::VectorXd x(dim), y(a.rows());
    int64_t trips = 0;

    for (int64_t j = 0; j < num_samples; ++j) {
        // Sample j owns draw indices [j*dim, (j+1)*dim); guard resamples
        // pull from indices past the regular block.
        uint64_t base = static_cast<uint64_t>(j) * static_cast<uint64_t>(dim);
        double xn = 0.0;
        for (;;) {
            for (int64_t i = 0; i < dim; ++i) {
                x[i] = rng.gaussian_at(base + static_cast<uint64_t>(i));
            }
            xn = x.norm();
            if (xn > 0.0) break;
            ++trips;
            base = (static_cast<uint64_t>(num_samples) + static_cast<uint64_t>(trips)) *
                   static_cast<uint64_t>(dim);
        }
        y.noalias() = A * x;
        ratios[static_cast<size_t>(j)] = y.norm() / xn;
    }
    if (guard_trips != nullptr) *guard_trips = trips;
    return detail::reduce_ratios(ratios);
}

Matrix concat_rows(const Matrix& a, int64_t r) {
    if (r < 1) throw std::invalid_argument("concat_rows: r must be >= 1");
    Matrix out(a.rows() * r, a.cols());
    const size_t block = static_cast<size_t>(a.size()) * sizeof(double);
    for (int64_t k = 0; k < r; ++k) {
        std::memcpy(out.data() + k * a.size(), a.data(), block);
    }
    return out;
}

double bai_yin_estimate(int64_t rows, int64_t cols, double std_dev) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("bai_yin_estimate: rows and cols must be >= 1");
    }
    if (std_dev < 0.0) {
        throw std::invalid_argument("bai_yin_estimate: std must be >= 0");
    }
    return std_dev * (std::sqrt(static_cast<double>(rows)) + std::sqrt(static_cast<double>(cols)));
}

}  // namespace smup
