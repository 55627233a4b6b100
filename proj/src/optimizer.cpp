#include "smup/optimizer.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace smup {

namespace {
std::atomic<int64_t> g_clamp_warnings{0};
constexpr double kPi = 3.14159265358979323846;
}  // namespace

Matrix adam_step_direction(AdamState& state, const Matrix& grad, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("adam_step_direction: eps must be > 0");
    if (state.m.rows() != grad.rows() || state.m.cols() != grad.cols()) {
        throw std::invalid_argument("adam_step_direction: state/grad shape mismatch");
    }
    state.t += 1;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));

    Matrix rhat(grad.rows(), grad.cols());
    double* m = state.m.data();
    double* v = state.v.data();
    const double* g = grad.data();
    double* r = rhat.data();
    for (int64_t i = 0; i < grad.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        r[i] = mhat / (std::sqrt(vhat) + eps);
    }
    return rhat;
}

void apply_update(Matrix& param, const Matrix& rhat, const GroupHyper& g, double sched_mult,
                  WdMode wd_mode) {
    if (param.rows() != rhat.rows() || param.cols() != rhat.cols()) {
        throw std::invalid_argument("apply_update: param/rhat shape mismatch");
    }
    const double decay =
        (wd_mode == WdMode::Coupled) ? sched_mult * g.lr * g.wd : sched_mult * g.wd;
    const double step = sched_mult * g.lr;
    double* w = param.data();
    const double* r = rhat.data();
    for (int64_t i = 0; i < param.size(); ++i) {
        w[i] -= decay * w[i] + step * r[i];
    }
}

double schedule_multiplier(const Schedule& s, int64_t step) {
    if (step < 0) throw std::invalid_argument("schedule_multiplier: step must be >= 0");
    if (s.total_steps < 1) throw std::invalid_argument("schedule_multiplier: empty schedule");
    if (step > s.total_steps) {
        g_clamp_warnings.fetch_add(1, std::memory_order_relaxed);
        step = s.total_steps;
    }
    if (s.warmup > 0 && step < s.warmup) {
        return static_cast<double>(step) / static_cast<double>(s.warmup);
    }
    if (step == s.warmup) return 1.0;
    const double span = static_cast<double>(s.total_steps - s.warmup);
    if (span <= 0.0) return 1.0;
    const double progress = static_cast<double>(step - s.warmup) / span;
    if (progress >= 1.0) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * progress));
}

int64_t schedule_clamp_warnings() { return g_clamp_warnings.load(std::memory_order_relaxed); }

int64_t warmup_steps(int64_t n_training, int64_t batch_seqs, int64_t seq_len) {
    if (n_training < 1 || batch_seqs < 1 || seq_len < 1) {
        throw std::invalid_argument("warmup_steps: all arguments must be positive");
    }
    const auto a = static_cast<int64_t>(0.02 * static_cast<double>(n_training));
    const auto b = static_cast<int64_t>(
        375e6 / (static_cast<double>(batch_seqs) * static_cast<double>(seq_len)));
    return std::min(a, b);
}

}  // namespace smup
