#pragma once

#include <cstdint>
#include <string>

namespace smup {

/// Weight-group roles. AttnKV is the only role whose scaling depends on
/// the key/value repetition factor r.
enum class Role { Embedding, Unembedding, AttnQ, AttnO, AttnKV, FFNIn, FFNOut };

const char* role_name(Role r);
Role role_from_name(const std::string& s);

enum class ParamKind { SP, AdamMuP, GqaMuP };
const char* param_kind_name(ParamKind k);
ParamKind param_kind_from_name(const std::string& s);

enum class WdMode { Coupled, Decoupled };
enum class BetaModeKind { Constant, CompleteP };
enum class EpsMode { Scaled, Constant };

struct BetaMode {
    BetaModeKind kind = BetaModeKind::Constant;
    double beta0 = 1.0;
};

/// Base hyperparameters plus the scaling-rule choice. resolve_group turns
/// this into concrete per-group values at a given width/repetition.
struct Parameterization {
    ParamKind kind = ParamKind::GqaMuP;
    double eta0 = 1e-2;    // base learning rate
    double lambda0 = 0.0;  // base weight decay
    double sigma0 = 0.02;  // base init std
    double eps0 = 1e-9;    // base Adam epsilon
    WdMode wd_mode = WdMode::Coupled;
    BetaMode beta_mode;
    EpsMode eps_mode = EpsMode::Scaled;
    // Ablation: read the init row of the rule table as a variance instead
    // of a standard deviation.
    bool init_as_variance = false;
};

struct GroupHyper {
    Role role = Role::FFNIn;
    int64_t fan_in = 0;
    int64_t fan_out = 0;
    int64_t r = 1;  // 1 unless AttnKV
    double init_std = 0.0;
    double multiplier = 1.0;
    double lr = 0.0;
    double wd = 0.0;
    double eps = 0.0;
};

/// Concrete per-group hyperparameters for one role at width n and
/// repetition r. Fan dims that depend on the vocabulary are left 0 and
/// filled in by the model.
GroupHyper resolve_group(const Parameterization& p, Role role, int64_t n, int64_t r);

/// Residual-branch multiplier for depth L.
double resolve_beta(const Parameterization& p, int64_t L);

/// (lambda0 * eta0 * iters)^-1.
double tau_epoch(double lambda0, double eta0, double iters);

/// g.lr * g.wd / (eta0 * lambda0); equals 1.0 exactly for every role under
/// coupled weight decay.
double wd_lr_balance_check(const Parameterization& p, const GroupHyper& g);

}  // namespace smup
