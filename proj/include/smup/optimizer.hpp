#pragma once

#include <cstdint>

#include "smup/matrix.hpp"
#include "smup/parameterization.hpp"

namespace smup {

/// Adam moment state for one parameter matrix.
struct AdamState {
    Matrix m;  // first moment
    Matrix v;  // second moment
    int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.95;

    AdamState() = default;
    AdamState(int64_t rows, int64_t cols, double b1, double b2)
        : m(rows, cols), v(rows, cols), beta1(b1), beta2(b2) {}
};

/// Advance the moments with grad and return the bias-corrected step
/// direction rhat = mhat / (sqrt(vhat) + eps).
Matrix adam_step_direction(AdamState& state, const Matrix& grad, double eps);

/// In-place parameter update.
/// Coupled:   W -= sched*lr*wd*W + sched*lr*rhat
/// Decoupled: W -= sched*wd*W    + sched*lr*rhat
/// The schedule multiplies the decay term as well as the gradient term.
void apply_update(Matrix& param, const Matrix& rhat, const GroupHyper& g, double sched_mult,
                  WdMode wd_mode);

/// Linear warmup to 1.0 followed by cosine decay to 0.0 at total_steps.
struct Schedule {
    int64_t warmup = 0;
    int64_t total_steps = 1;
};

/// Multiplier in [0,1]; exactly 1 at step == warmup, exactly 0 at
/// step == total_steps. Steps past the end clamp to the final value (a
/// warning is counted).
double schedule_multiplier(const Schedule& s, int64_t step);

/// Number of schedule_multiplier calls that clamped so far (process-wide).
int64_t schedule_clamp_warnings();

/// min(int(0.02 * n_training), int(375e6 / (batch_seqs * seq_len))).
int64_t warmup_steps(int64_t n_training, int64_t batch_seqs, int64_t seq_len);

}  // namespace smup
