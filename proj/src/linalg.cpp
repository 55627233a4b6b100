#include "smup/linalg.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace smup {

using EigenRowM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const EigenRowM>;
using Map = Eigen::Map<EigenRowM>;

Matrix gaussian_matrix(RngStream& rng, int64_t rows, int64_t cols, double std_dev) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("gaussian_matrix: rows and cols must be >= 1");
    }
    if (std_dev < 0.0) {
        throw std::invalid_argument("gaussian_matrix: std must be >= 0");
    }
    Matrix m(rows, cols);
    if (std_dev == 0.0) {
        rng.skip(static_cast<uint64_t>(rows * cols));
        return m;
    }
    for (int64_t i = 0; i < m.size(); ++i) {
        m.data()[i] = std_dev * rng.next_gaussian();
    }
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    }
    Matrix c(a.rows(), b.cols());
    MapConst ma(a.data(), a.rows(), a.cols());
    MapConst mb(b.data(), b.rows(), b.cols());
    Map mc(c.data(), c.rows(), c.cols());
    mc.noalias() = ma * mb;
    return c;
}

double svd_max_singular(const Matrix& a, double tol) {
    if (a.empty()) {
        throw std::invalid_argument("svd_max_singular: empty matrix");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("svd_max_singular: tol must be > 0");
    }

    // One-sided Jacobi orthogonalizes the columns of the work matrix, so
    // arrange for cols <= rows.
    Matrix work = (a.cols() <= a.rows()) ? a : a.transposed();
    const int64_t m = work.rows();
    const int64_t n = work.cols();
    Map w(work.data(), m, n);

    const int64_t max_sweeps = 10 * std::max(a.rows(), a.cols());
    const double rot_threshold = std::min(tol, 1e-2) * 0.1;

    double off_prev = 0.0;
    double off_last = 0.0;
    for (int64_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        double off_max = 0.0;
        for (int64_t p = 0; p < n - 1; ++p) {
            for (int64_t q = p + 1; q < n; ++q) {
                auto cp = w.col(p);
                auto cq = w.col(q);
                const double alpha = cp.squaredNorm();
                const double beta = cq.squaredNorm();
                const double gamma = cp.dot(cq);
                if (alpha == 0.0 || beta == 0.0) continue;
                const double rel = std::fabs(gamma) / std::sqrt(alpha * beta);
                off_max = std::max(off_max, rel);
                if (rel <= rot_threshold) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int64_t i = 0; i < m; ++i) {
                    const double wp = w(i, p);
                    const double wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
            }
        }
        off_prev = off_last;
        off_last = off_max;
        if (!rotated) {
            double best = 0.0;
            for (int64_t j = 0; j < n; ++j) best = std::max(best, w.col(j).norm());
            return best;
        }
    }
    throw ConvergenceError("svd_max_singular: no convergence after " +
                               std::to_string(max_sweeps) + " sweeps",
                           max_sweeps, off_last, off_prev);
}

LogLogFit fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("fit_loglog_slope: xs and ys lengths differ");
    }
    if (xs.size() < 3) {
        throw std::invalid_argument("fit_loglog_slope: need at least 3 points");
    }
    const size_t n = xs.size();
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
            throw std::invalid_argument("fit_loglog_slope: all values must be > 0");
        }
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = lx[i] - mx;
        const double dy = ly[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_loglog_slope: xs are all equal");
    }

    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0.0) {
        fit.r2 = 1.0;  // constant ys are fit exactly by slope 0
    } else {
        double ss_res = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
            ss_res += e * e;
        }
        fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
    return fit;
}

}  // namespace smup
