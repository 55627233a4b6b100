#include "smup/model.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "smup/linalg.hpp"

namespace smup {

using EigenRowM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const EigenRowM>;
using Map = Eigen::Map<EigenRowM>;

namespace {

constexpr double kRmsEps = 1e-8;
constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC = 0.044715;

inline double gelu(double x) {
    const double u = kGeluK * (x + kGeluC * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

inline double gelu_grad(double x) {
    const double u = kGeluK * (x + kGeluC * x * x * x);
    const double th = std::tanh(u);
    const double du = kGeluK * (1.0 + 3.0 * kGeluC * x * x);
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

MapConst map_of(const Matrix& m) { return MapConst(m.data(), m.rows(), m.cols()); }
Map map_of(Matrix& m) { return Map(m.data(), m.rows(), m.cols()); }

// Row-wise RMS normalization: out_row = in_row / sqrt(mean(in_row^2)+eps).
void rms_norm(const Matrix& in, Matrix& out, std::vector<double>& inv_rms) {
    const int64_t rows = in.rows(), cols = in.cols();
    inv_rms.resize(static_cast<size_t>(rows));
    for (int64_t i = 0; i < rows; ++i) {
        const double* x = in.data() + i * cols;
        double ms = 0.0;
        for (int64_t j = 0; j < cols; ++j) ms += x[j] * x[j];
        ms /= static_cast<double>(cols);
        const double inv = 1.0 / std::sqrt(ms + kRmsEps);
        inv_rms[static_cast<size_t>(i)] = inv;
        double* y = out.data() + i * cols;
        for (int64_t j = 0; j < cols; ++j) y[j] = x[j] * inv;
    }
}

// d_in += backward of rms_norm given saved input and inv_rms.
void rms_norm_backward(const Matrix& in, const std::vector<double>& inv_rms, const Matrix& d_out,
                       Matrix& d_in) {
    const int64_t rows = in.rows(), cols = in.cols();
    for (int64_t i = 0; i < rows; ++i) {
        const double* x = in.data() + i * cols;
        const double* dy = d_out.data() + i * cols;
        double* dx = d_in.data() + i * cols;
        const double inv = inv_rms[static_cast<size_t>(i)];
        double dot = 0.0;
        for (int64_t j = 0; j < cols; ++j) dot += x[j] * dy[j];
        const double k = inv * inv * inv * dot / static_cast<double>(cols);
        for (int64_t j = 0; j < cols; ++j) dx[j] += inv * dy[j] - k * x[j];
    }
}

// Y = X * W^T for weight W stored (out x in).
void linear(const Matrix& x, const Matrix& w, Matrix& y) {
    map_of(y).noalias() = map_of(x) * map_of(w).transpose();
}

// Slice columns [c0, c0+w) of src into contiguous dst (rows x w).
void pack_cols(const Matrix& src, int64_t c0, int64_t w, Matrix& dst) {
    for (int64_t i = 0; i < src.rows(); ++i) {
        const double* s = src.data() + i * src.cols() + c0;
        double* d = dst.data() + i * w;
        for (int64_t j = 0; j < w; ++j) d[j] = s[j];
    }
}

void add_cols(Matrix& dst, int64_t c0, int64_t w, const Matrix& src) {
    for (int64_t i = 0; i < dst.rows(); ++i) {
        const double* s = src.data() + i * w;
        double* d = dst.data() + i * dst.cols() + c0;
        for (int64_t j = 0; j < w; ++j) d[j] += s[j];
    }
}

void check_tokens(const ModelConfig& cfg, const std::vector<int>& tokens) {
    if (tokens.empty()) throw std::invalid_argument("forward: empty token sequence");
    if (static_cast<int64_t>(tokens.size()) > cfg.seq_len) {
        throw std::invalid_argument("forward: sequence longer than seq_len");
    }
    for (int t : tokens) {
        if (t < 0 || t >= cfg.vocab) {
            throw std::invalid_argument("forward: token id out of range");
        }
    }
}

}  // namespace

double ModelConfig::attn_scale() const {
    if (attn_scale_override != 0.0) return attn_scale_override;
    if (param.kind == ParamKind::SP) return 1.0 / std::sqrt(static_cast<double>(d_head));
    return 1.0 / static_cast<double>(d_head);
}

void ModelConfig::validate() const {
    if (n < 1 || L < 0 || H < 1 || d_head < 1 || kv_heads < 1) {
        throw std::invalid_argument("ModelConfig: dimensions must be positive");
    }
    if (H * d_head != n) throw std::invalid_argument("ModelConfig: H*d_head must equal n");
    if (H % kv_heads != 0) throw std::invalid_argument("ModelConfig: kv_heads must divide H");
    if (seq_len < 1) throw std::invalid_argument("ModelConfig: seq_len must be >= 1");
    if (vocab < 2) throw std::invalid_argument("ModelConfig: vocab must be >= 2");
}

int64_t TransformerParams::total_params() const {
    int64_t s = 0;
    for (const auto& t : tensors) s += t.w.size();
    return s;
}

void TransformerParams::zero_grads() {
    for (auto& t : tensors) t.g.set_zero();
}

TransformerParams init_params(const ModelConfig& cfg, const RngStream& rng) {
    cfg.validate();
    TransformerParams p;
    const int64_t n = cfg.n;
    const int64_t r = cfg.r();
    const int64_t kv_dim = n / r;

    auto push = [&](const std::string& name, Role role, int64_t layer, int64_t rows,
                    int64_t cols, int64_t fan_in, int64_t fan_out) {
        GroupHyper h = resolve_group(cfg.param, role, n, r);
        h.fan_in = fan_in;
        h.fan_out = fan_out;
        ParamTensor t;
        t.name = name;
        t.role = role;
        t.layer = layer;
        t.hyper = h;
        RngStream s = rng.substream(static_cast<uint64_t>(p.tensors.size()) + 1);
        t.w = gaussian_matrix(s, rows, cols, h.init_std);
        t.g = Matrix(rows, cols);
        p.tensors.push_back(std::move(t));
        return static_cast<int64_t>(p.tensors.size()) - 1;
    };

    p.embedding = push("embedding", Role::Embedding, -1, cfg.vocab, n, cfg.vocab, n);
    if (cfg.learned_positions) {
        p.positions = push("positions", Role::Embedding, -1, cfg.seq_len, n, cfg.seq_len, n);
    }
    for (int64_t l = 0; l < cfg.L; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        TransformerParams::LayerIdx idx;
        idx.q = push(pre + "attn_q", Role::AttnQ, l, n, n, n, n);
        idx.k = push(pre + "attn_k", Role::AttnKV, l, kv_dim, n, n, kv_dim);
        idx.v = push(pre + "attn_v", Role::AttnKV, l, kv_dim, n, n, kv_dim);
        idx.o = push(pre + "attn_o", Role::AttnO, l, n, n, n, n);
        idx.ffn_in = push(pre + "ffn_in", Role::FFNIn, l, 4 * n, n, n, 4 * n);
        idx.ffn_out = push(pre + "ffn_out", Role::FFNOut, l, n, 4 * n, 4 * n, n);
        p.layers.push_back(idx);
    }
    p.unembedding = push("unembedding", Role::Unembedding, -1, n, cfg.vocab, n, cfg.vocab);
    return p;
}

Matrix forward(const TransformerParams& params, const ModelConfig& cfg,
               const std::vector<int>& tokens, Tape* tape) {
    check_tokens(cfg, tokens);
    const int64_t T = static_cast<int64_t>(tokens.size());
    const int64_t n = cfg.n;
    const int64_t r = cfg.r();
    const int64_t kv_dim = n / r;
    const int64_t d = cfg.d_head;
    const double beta = resolve_beta(cfg.param, std::max<int64_t>(cfg.L, 1));
    const double scale = cfg.attn_scale();

    Matrix x(T, n);
    {
        const Matrix& emb = params.tensors[static_cast<size_t>(params.embedding)].w;
        for (int64_t t = 0; t < T; ++t) {
            const double* src = emb.data() + static_cast<int64_t>(tokens[t]) * n;
            double* dst = x.data() + t * n;
            for (int64_t j = 0; j < n; ++j) dst[j] = src[j];
        }
        if (params.positions >= 0) {
            const Matrix& pos = params.tensors[static_cast<size_t>(params.positions)].w;
            for (int64_t t = 0; t < T; ++t) {
                const double* src = pos.data() + t * n;
                double* dst = x.data() + t * n;
                for (int64_t j = 0; j < n; ++j) dst[j] += src[j];
            }
        }
    }
    if (tape) {
        tape->tokens = tokens;
        tape->x0 = x;
        tape->layers.clear();
        tape->layers.resize(static_cast<size_t>(cfg.L));
    }

    Matrix qh(T, d), kh(T, d), vh(T, d), ctxh(T, d);
    for (int64_t l = 0; l < cfg.L; ++l) {
        const auto& idx = params.layers[static_cast<size_t>(l)];
        LayerTape local;
        LayerTape& lt = tape ? tape->layers[static_cast<size_t>(l)] : local;

        lt.ln1_out = Matrix(T, n);
        rms_norm(x, lt.ln1_out, lt.inv_rms1);

        lt.q = Matrix(T, n);
        lt.k = Matrix(T, kv_dim);
        lt.v = Matrix(T, kv_dim);
        linear(lt.ln1_out, params.tensors[static_cast<size_t>(idx.q)].w, lt.q);
        linear(lt.ln1_out, params.tensors[static_cast<size_t>(idx.k)].w, lt.k);
        linear(lt.ln1_out, params.tensors[static_cast<size_t>(idx.v)].w, lt.v);

        lt.ctx = Matrix(T, n);
        lt.probs.assign(static_cast<size_t>(cfg.H), Matrix());
        for (int64_t h = 0; h < cfg.H; ++h) {
            const int64_t kvh = h % cfg.kv_heads;
            pack_cols(lt.q, h * d, d, qh);
            pack_cols(lt.k, kvh * d, d, kh);
            pack_cols(lt.v, kvh * d, d, vh);

            Matrix& P = lt.probs[static_cast<size_t>(h)];
            P = Matrix(T, T);
            map_of(P).noalias() = map_of(qh) * map_of(kh).transpose() * scale;
            // causal softmax, row t over columns [0, t]
            for (int64_t t = 0; t < T; ++t) {
                double* row = P.data() + t * T;
                double mx = row[0];
                for (int64_t u = 1; u <= t; ++u) mx = std::max(mx, row[u]);
                double sum = 0.0;
                for (int64_t u = 0; u <= t; ++u) {
                    row[u] = std::exp(row[u] - mx);
                    sum += row[u];
                }
                const double inv = 1.0 / sum;
                for (int64_t u = 0; u <= t; ++u) row[u] *= inv;
                for (int64_t u = t + 1; u < T; ++u) row[u] = 0.0;
            }
            map_of(ctxh).noalias() = map_of(P) * map_of(vh);
            for (int64_t t = 0; t < T; ++t) {
                const double* s = ctxh.data() + t * d;
                double* dst = lt.ctx.data() + t * n + h * d;
                for (int64_t j = 0; j < d; ++j) dst[j] = s[j];
            }
        }

        lt.a_mid = Matrix(T, n);
        lt.attn_out = Matrix(T, n);
        linear(lt.ctx, params.tensors[static_cast<size_t>(idx.o)].w, lt.attn_out);
        for (int64_t i = 0; i < T * n; ++i) {
            lt.a_mid.data()[i] = x.data()[i] + beta * lt.attn_out.data()[i];
        }

        lt.ln2_out = Matrix(T, n);
        rms_norm(lt.a_mid, lt.ln2_out, lt.inv_rms2);
        lt.h1 = Matrix(T, 4 * n);
        linear(lt.ln2_out, params.tensors[static_cast<size_t>(idx.ffn_in)].w, lt.h1);
        lt.hg = Matrix(T, 4 * n);
        for (int64_t i = 0; i < lt.h1.size(); ++i) lt.hg.data()[i] = gelu(lt.h1.data()[i]);

        lt.x_out = Matrix(T, n);
        lt.ffn_out = Matrix(T, n);
        linear(lt.hg, params.tensors[static_cast<size_t>(idx.ffn_out)].w, lt.ffn_out);
        for (int64_t i = 0; i < T * n; ++i) {
            lt.x_out.data()[i] = lt.a_mid.data()[i] + beta * lt.ffn_out.data()[i];
        }
        x = lt.x_out;
    }

    Matrix ln_f(T, n);
    std::vector<double> inv_rms_f;
    rms_norm(x, ln_f, inv_rms_f);

    const auto& unemb = params.tensors[static_cast<size_t>(params.unembedding)];
    Matrix logits(T, cfg.vocab);
    map_of(logits).noalias() =
        map_of(ln_f) * map_of(unemb.w) * unemb.hyper.multiplier;

    if (tape) {
        tape->ln_f_out = std::move(ln_f);
        tape->inv_rms_f = std::move(inv_rms_f);
        tape->logits = logits;
    }
    return logits;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& tokens) {
    const int64_t T = static_cast<int64_t>(tokens.size());
    if (T < 2) throw std::invalid_argument("cross_entropy: need at least 2 tokens");
    const int64_t V = logits.cols();
    double loss = 0.0;
    for (int64_t t = 0; t < T - 1; ++t) {
        const double* row = logits.data() + t * V;
        double mx = row[0];
        for (int64_t j = 1; j < V; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int64_t j = 0; j < V; ++j) sum += std::exp(row[j] - mx);
        loss += (mx + std::log(sum)) - row[tokens[static_cast<size_t>(t + 1)]];
    }
    return loss / static_cast<double>(T - 1);
}

double loss_and_backward(TransformerParams& params, const ModelConfig& cfg,
                         const std::vector<int>& tokens) {
    if (tokens.size() < 2) {
        throw std::invalid_argument("loss_and_backward: need at least 2 tokens");
    }
    Tape tape;
    forward(params, cfg, tokens, &tape);
    const double loss = cross_entropy(tape.logits, tokens);

    params.zero_grads();
    const int64_t T = static_cast<int64_t>(tokens.size());
    const int64_t n = cfg.n;
    const int64_t V = cfg.vocab;
    const int64_t r = cfg.r();
    const int64_t kv_dim = n / r;
    const int64_t d = cfg.d_head;
    const double beta = resolve_beta(cfg.param, std::max<int64_t>(cfg.L, 1));
    const double scale = cfg.attn_scale();
    const double inv_count = 1.0 / static_cast<double>(T - 1);

    // dlogits = (softmax - onehot)/count over predicting positions
    Matrix dlogits(T, V);
    dlogits.set_zero();
    for (int64_t t = 0; t < T - 1; ++t) {
        const double* row = tape.logits.data() + t * V;
        double* drow = dlogits.data() + t * V;
        double mx = row[0];
        for (int64_t j = 1; j < V; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int64_t j = 0; j < V; ++j) {
            drow[j] = std::exp(row[j] - mx);
            sum += drow[j];
        }
        const double inv = 1.0 / sum;
        for (int64_t j = 0; j < V; ++j) drow[j] *= inv * inv_count;
        drow[tokens[static_cast<size_t>(t + 1)]] -= inv_count;
    }

    auto& unemb = params.tensors[static_cast<size_t>(params.unembedding)];
    const double mult = unemb.hyper.multiplier;
    map_of(unemb.g).noalias() = map_of(tape.ln_f_out).transpose() * map_of(dlogits) * mult;

    Matrix dx(T, n);
    {
        Matrix dln_f(T, n);
        map_of(dln_f).noalias() = map_of(dlogits) * map_of(unemb.w).transpose() * mult;
        dx.set_zero();
        const Matrix& x_final = cfg.L > 0 ? tape.layers.back().x_out : tape.x0;
        rms_norm_backward(x_final, tape.inv_rms_f, dln_f, dx);
    }

    Matrix qh(T, d), kh(T, d), vh(T, d), dqh(T, d), dctxh(T, d), dP(T, T);
    for (int64_t l = cfg.L - 1; l >= 0; --l) {
        const auto& idx = params.layers[static_cast<size_t>(l)];
        LayerTape& lt = tape.layers[static_cast<size_t>(l)];
        const Matrix& x_in = (l == 0) ? tape.x0 : tape.layers[static_cast<size_t>(l - 1)].x_out;

        auto& wq = params.tensors[static_cast<size_t>(idx.q)];
        auto& wk = params.tensors[static_cast<size_t>(idx.k)];
        auto& wv = params.tensors[static_cast<size_t>(idx.v)];
        auto& wo = params.tensors[static_cast<size_t>(idx.o)];
        auto& win = params.tensors[static_cast<size_t>(idx.ffn_in)];
        auto& wout = params.tensors[static_cast<size_t>(idx.ffn_out)];

        // FFN branch: x_out = a_mid + beta * hg * Wout^T
        Matrix da_mid = dx;  // identity path
        {
            Matrix dffn(T, n);
            for (int64_t i = 0; i < T * n; ++i) dffn.data()[i] = beta * dx.data()[i];
            map_of(wout.g).noalias() += map_of(dffn).transpose() * map_of(lt.hg);
            Matrix dhg(T, 4 * n);
            map_of(dhg).noalias() = map_of(dffn) * map_of(wout.w);
            for (int64_t i = 0; i < dhg.size(); ++i) {
                dhg.data()[i] *= gelu_grad(lt.h1.data()[i]);
            }
            map_of(win.g).noalias() += map_of(dhg).transpose() * map_of(lt.ln2_out);
            Matrix dln2(T, n);
            map_of(dln2).noalias() = map_of(dhg) * map_of(win.w);
            rms_norm_backward(lt.a_mid, lt.inv_rms2, dln2, da_mid);
        }

        // attention branch: a_mid = x_in + beta * ctx * Wo^T
        dx = da_mid;  // identity path into x_in
        {
            Matrix dattn(T, n);
            for (int64_t i = 0; i < T * n; ++i) dattn.data()[i] = beta * da_mid.data()[i];
            map_of(wo.g).noalias() += map_of(dattn).transpose() * map_of(lt.ctx);
            Matrix dctx(T, n);
            map_of(dctx).noalias() = map_of(dattn) * map_of(wo.w);

            Matrix dq(T, n);
            dq.set_zero();
            Matrix dk(T, kv_dim), dv(T, kv_dim);
            dk.set_zero();
            dv.set_zero();
            Matrix dkh(T, d), dvh(T, d);
            for (int64_t h = 0; h < cfg.H; ++h) {
                const int64_t kvh = h % cfg.kv_heads;
                pack_cols(lt.q, h * d, d, qh);
                pack_cols(lt.k, kvh * d, d, kh);
                pack_cols(lt.v, kvh * d, d, vh);
                pack_cols(dctx, h * d, d, dctxh);
                const Matrix& P = lt.probs[static_cast<size_t>(h)];

                map_of(dP).noalias() = map_of(dctxh) * map_of(vh).transpose();
                map_of(dvh).noalias() = map_of(P).transpose() * map_of(dctxh);
                // softmax backward per causal row
                for (int64_t t = 0; t < T; ++t) {
                    const double* prow = P.data() + t * T;
                    double* dprow = dP.data() + t * T;
                    double dot = 0.0;
                    for (int64_t u = 0; u <= t; ++u) dot += prow[u] * dprow[u];
                    for (int64_t u = 0; u <= t; ++u) {
                        dprow[u] = prow[u] * (dprow[u] - dot) * scale;
                    }
                    for (int64_t u = t + 1; u < T; ++u) dprow[u] = 0.0;
                }
                map_of(dqh).noalias() = map_of(dP) * map_of(kh);
                map_of(dkh).noalias() = map_of(dP).transpose() * map_of(qh);
                add_cols(dq, h * d, d, dqh);
                add_cols(dk, kvh * d, d, dkh);
                add_cols(dv, kvh * d, d, dvh);
            }

            map_of(wq.g).noalias() += map_of(dq).transpose() * map_of(lt.ln1_out);
            map_of(wk.g).noalias() += map_of(dk).transpose() * map_of(lt.ln1_out);
            map_of(wv.g).noalias() += map_of(dv).transpose() * map_of(lt.ln1_out);

            Matrix dln1(T, n);
            map_of(dln1).noalias() = map_of(dq) * map_of(wq.w);
            map_of(dln1).noalias() += map_of(dk) * map_of(wk.w);
            map_of(dln1).noalias() += map_of(dv) * map_of(wv.w);
            rms_norm_backward(x_in, lt.inv_rms1, dln1, dx);
        }
    }

    // embeddings
    auto& emb = params.tensors[static_cast<size_t>(params.embedding)];
    for (int64_t t = 0; t < T; ++t) {
        const double* src = dx.data() + t * n;
        double* dst = emb.g.data() + static_cast<int64_t>(tokens[static_cast<size_t>(t)]) * n;
        for (int64_t j = 0; j < n; ++j) dst[j] += src[j];
    }
    if (params.positions >= 0) {
        auto& pos = params.tensors[static_cast<size_t>(params.positions)];
        for (int64_t t = 0; t < T; ++t) {
            const double* src = dx.data() + t * n;
            double* dst = pos.g.data() + t * n;
            for (int64_t j = 0; j < n; ++j) dst[j] += src[j];
        }
    }
    return loss;
}

std::vector<ProbeVectors> measure_activations(const TransformerParams& params,
                                              const ModelConfig& cfg,
                                              const std::vector<int>& tokens,
                                              int64_t probe_layer) {
    if (probe_layer >= cfg.L) {
        throw std::invalid_argument("measure_activations: probe layer out of range");
    }
    Tape tape;
    forward(params, cfg, tokens, &tape);
    const int64_t T = static_cast<int64_t>(tokens.size());
    const int64_t n = cfg.n;
    const int64_t pos = T - 1;

    std::vector<ProbeVectors> out;
    for (int64_t l = 0; l < cfg.L; ++l) {
        if (probe_layer >= 0 && l != probe_layer) continue;
        const LayerTape& lt = tape.layers[static_cast<size_t>(l)];
        ProbeVectors pv;
        pv.attn_branch.resize(static_cast<size_t>(n));
        pv.ffn_branch.resize(static_cast<size_t>(n));
        pv.residual.resize(static_cast<size_t>(n));
        for (int64_t j = 0; j < n; ++j) {
            pv.attn_branch[static_cast<size_t>(j)] = lt.attn_out(pos, j);
            pv.ffn_branch[static_cast<size_t>(j)] = lt.ffn_out(pos, j);
            pv.residual[static_cast<size_t>(j)] = lt.x_out(pos, j);
        }
        out.push_back(std::move(pv));
    }
    return out;
}

Trainer::Trainer(const ModelConfig& cfg, uint64_t seed, Schedule sched, double adam_beta1,
                 double adam_beta2)
    : cfg_(cfg), sched_(sched) {
    cfg_.validate();
    RngStream init_stream(seed, 1);
    params_ = init_params(cfg_, init_stream);
    opt_.reserve(params_.tensors.size());
    for (const auto& t : params_.tensors) {
        opt_.emplace_back(t.w.rows(), t.w.cols(), adam_beta1, adam_beta2);
    }
}

double Trainer::step(const std::vector<int>& tokens, const TensorHook& hook) {
    const double loss = loss_and_backward(params_, cfg_, tokens);
    step_count_ += 1;
    const double sm = schedule_multiplier(sched_, step_count_);
    Matrix before;
    for (size_t i = 0; i < params_.tensors.size(); ++i) {
        auto& t = params_.tensors[i];
        if (hook) before = t.w;
        Matrix rhat = adam_step_direction(opt_[i], t.g, t.hyper.eps);
        apply_update(t.w, rhat, t.hyper, sm, cfg_.param.wd_mode);
        if (hook) {
            Matrix delta = sub(t.w, before);
            hook(t, delta);
        }
    }
    return loss;
}

double Trainer::eval_loss(const std::vector<int>& tokens) const {
    Matrix logits = forward(params_, cfg_, tokens, nullptr);
    return cross_entropy(logits, tokens);
}

}  // namespace smup
