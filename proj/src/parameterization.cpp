#include "smup/parameterization.hpp"

#include <cmath>
#include <stdexcept>

namespace smup {

const char* role_name(Role r) {
    switch (r) {
        case Role::Embedding: return "Embedding";
        case Role::Unembedding: return "Unembedding";
        case Role::AttnQ: return "AttnQ";
        case Role::AttnO: return "AttnO";
        case Role::AttnKV: return "AttnKV";
        case Role::FFNIn: return "FFNIn";
        case Role::FFNOut: return "FFNOut";
    }
    throw std::invalid_argument("role_name: unknown role");
}

Role role_from_name(const std::string& s) {
    for (Role r : {Role::Embedding, Role::Unembedding, Role::AttnQ, Role::AttnO, Role::AttnKV,
                   Role::FFNIn, Role::FFNOut}) {
        if (s == role_name(r)) return r;
    }
    throw std::invalid_argument("role_from_name: unknown role '" + s + "'");
}

const char* param_kind_name(ParamKind k) {
    switch (k) {
        case ParamKind::SP: return "sp";
        case ParamKind::AdamMuP: return "adam-mup";
        case ParamKind::GqaMuP: return "gqa-mup";
    }
    throw std::invalid_argument("param_kind_name: unknown kind");
}

ParamKind param_kind_from_name(const std::string& s) {
    if (s == "sp") return ParamKind::SP;
    if (s == "adam-mup") return ParamKind::AdamMuP;
    if (s == "gqa-mup") return ParamKind::GqaMuP;
    throw std::invalid_argument("param_kind_from_name: unknown kind '" + s + "'");
}

namespace {

// Nudge wd within a few ulps so that fl(lr*wd) == fl(eta0*lambda0). The
// balance identity lr*wd = eta0*lambda0 holds algebraically; this makes it
// hold in 64-bit arithmetic too.
double exact_balance_wd(double lr, double eta0, double lambda0, double wd_natural) {
    if (lambda0 == 0.0 || lr == 0.0) return wd_natural;
    const double target = eta0 * lambda0;
    double wd = target / lr;
    if (lr * wd == target) return wd;
    double lo = wd, hi = wd;
    for (int step = 0; step < 8; ++step) {
        lo = std::nextafter(lo, 0.0);
        hi = std::nextafter(hi, wd * 2.0);
        if (lr * lo == target) return lo;
        if (lr * hi == target) return hi;
    }
    return wd;  // within 8 ulps either way; keep the rounded quotient
}

}  // namespace

GroupHyper resolve_group(const Parameterization& p, Role role, int64_t n, int64_t r) {
    if (n < 1) throw std::invalid_argument("resolve_group: n must be >= 1");
    if (r < 1) throw std::invalid_argument("resolve_group: r must be >= 1");
    if (!(p.eta0 > 0.0)) throw std::invalid_argument("resolve_group: eta0 must be > 0");
    if (p.lambda0 < 0.0) throw std::invalid_argument("resolve_group: lambda0 must be >= 0");

    const double nd = static_cast<double>(n);
    GroupHyper g;
    g.role = role;
    g.r = (role == Role::AttnKV) ? r : 1;

    // Fan dims that don't involve the vocabulary.
    switch (role) {
        case Role::AttnQ:
        case Role::AttnO: g.fan_in = n; g.fan_out = n; break;
        case Role::AttnKV: g.fan_in = n; g.fan_out = n / g.r; break;
        case Role::FFNIn: g.fan_in = n; g.fan_out = 4 * n; break;
        case Role::FFNOut: g.fan_in = 4 * n; g.fan_out = n; break;
        case Role::Embedding:
        case Role::Unembedding: g.fan_in = 0; g.fan_out = 0; break;
    }

    const double hidden_std =
        p.init_as_variance ? p.sigma0 / std::pow(nd, 0.25) : p.sigma0 / std::sqrt(nd);

    if (p.kind == ParamKind::SP) {
        g.init_std = hidden_std;
        g.multiplier = 1.0;
        g.lr = p.eta0;
        g.wd = p.lambda0;
        g.eps = p.eps0;
        return g;
    }

    // AdamMuP and GqaMuP share everything except the AttnKV row.
    switch (role) {
        case Role::Embedding:
            g.init_std = p.sigma0;
            g.multiplier = 1.0;
            g.lr = p.eta0;
            g.wd = p.lambda0;
            g.eps = p.eps0;
            break;
        case Role::Unembedding:
            g.init_std = p.sigma0;
            g.multiplier = 1.0 / nd;
            g.lr = p.eta0;
            g.wd = p.lambda0;
            g.eps = p.eps0 / nd;
            break;
        case Role::AttnQ:
        case Role::AttnO:
        case Role::FFNIn:
        case Role::FFNOut:
            g.init_std = hidden_std;
            g.multiplier = 1.0;
            g.lr = p.eta0 / nd;
            g.wd = exact_balance_wd(g.lr, p.eta0, p.lambda0, nd * p.lambda0);
            g.eps = p.eps0 / nd;
            break;
        case Role::AttnKV: {
            g.init_std = hidden_std;
            g.multiplier = 1.0;
            if (p.kind == ParamKind::GqaMuP) {
                const double f = (1.0 + std::sqrt(static_cast<double>(r))) / 2.0;
                g.lr = p.eta0 * f / nd;
                g.wd = exact_balance_wd(g.lr, p.eta0, p.lambda0, nd * p.lambda0 / f);
            } else {
                g.lr = p.eta0 / nd;
                g.wd = exact_balance_wd(g.lr, p.eta0, p.lambda0, nd * p.lambda0);
            }
            g.eps = p.eps0 / nd;
            break;
        }
    }

    if (p.wd_mode == WdMode::Decoupled) {
        g.wd = p.lambda0;
    }
    if (p.eps_mode == EpsMode::Constant) {
        g.eps = p.eps0;
    }
    return g;
}

double resolve_beta(const Parameterization& p, int64_t L) {
    if (L < 1) throw std::invalid_argument("resolve_beta: L must be >= 1");
    switch (p.beta_mode.kind) {
        case BetaModeKind::Constant: return p.beta_mode.beta0;
        case BetaModeKind::CompleteP: return p.beta_mode.beta0 / static_cast<double>(L);
    }
    throw std::invalid_argument("resolve_beta: unknown mode");
}

double tau_epoch(double lambda0, double eta0, double iters) {
    if (!(lambda0 > 0.0) || !(eta0 > 0.0) || !(iters > 0.0)) {
        throw std::invalid_argument("tau_epoch: all arguments must be > 0");
    }
    return 1.0 / (lambda0 * eta0 * iters);
}

double wd_lr_balance_check(const Parameterization& p, const GroupHyper& g) {
    const double base = p.eta0 * p.lambda0;
    if (base == 0.0) {
        throw std::invalid_argument("wd_lr_balance_check: eta0*lambda0 must be > 0");
    }
    return g.lr * g.wd / base;
}

}  // namespace smup
