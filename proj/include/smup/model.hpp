#pragma once

#include <functional>
#include <string>
#include <vector>

#include "smup/matrix.hpp"
#include "smup/optimizer.hpp"
#include "smup/parameterization.hpp"
#include "smup/rng.hpp"

namespace smup {

/// Decoder-only GQA transformer shape. n = H * d_head; kv_heads divides H;
/// r = H / kv_heads is the key/value repetition factor.
struct ModelConfig {
    int64_t n = 64;
    int64_t L = 2;
    int64_t H = 4;
    int64_t d_head = 16;
    int64_t kv_heads = 4;
    int64_t vocab = 256;
    int64_t seq_len = 64;
    Parameterization param;
    bool learned_positions = false;
    double attn_scale_override = 0.0;  // 0 = choose by parameterization kind

    int64_t r() const { return H / kv_heads; }
    double attn_scale() const;
    void validate() const;
};

struct ParamTensor {
    std::string name;
    Role role = Role::FFNIn;
    int64_t layer = -1;  // -1 for embedding/unembedding/positions
    Matrix w;
    Matrix g;
    GroupHyper hyper;
};

struct TransformerParams {
    std::vector<ParamTensor> tensors;
    int64_t embedding = -1;
    int64_t positions = -1;
    int64_t unembedding = -1;
    struct LayerIdx {
        int64_t q = -1, k = -1, v = -1, o = -1, ffn_in = -1, ffn_out = -1;
    };
    std::vector<LayerIdx> layers;

    int64_t total_params() const;
    void zero_grads();
};

/// Saved forward intermediates for one block.
struct LayerTape {
    Matrix ln1_out;
    std::vector<double> inv_rms1;
    Matrix q, k, v;
    std::vector<Matrix> probs;  // per query head, T x T (causal rows)
    Matrix ctx;
    Matrix attn_out;  // branch output before beta scaling
    Matrix a_mid;
    Matrix ln2_out;
    std::vector<double> inv_rms2;
    Matrix h1, hg;
    Matrix ffn_out;  // branch output before beta scaling
    Matrix x_out;
};

/// Forward record sufficient for the reverse sweep; replaying forward from
/// identical inputs reproduces identical outputs bit-for-bit.
struct Tape {
    std::vector<int> tokens;
    Matrix x0;  // embeddings entering the first block
    std::vector<LayerTape> layers;
    Matrix ln_f_out;
    std::vector<double> inv_rms_f;
    Matrix logits;
};

/// Every matrix sampled i.i.d. Gaussian with the std resolved by
/// resolve_group; deterministic given rng.
TransformerParams init_params(const ModelConfig& cfg, const RngStream& rng);

/// Causal forward pass; returns logits (len x vocab). Out-of-range token
/// ids throw. tape may be null when intermediates are not needed.
Matrix forward(const TransformerParams& params, const ModelConfig& cfg,
               const std::vector<int>& tokens, Tape* tape);

/// Mean next-token cross-entropy of precomputed logits.
double cross_entropy(const Matrix& logits, const std::vector<int>& tokens);

/// Forward + reverse sweep. Fills every gradient matrix (overwriting);
/// gradients of shared K/V tensors sum over all r replicated uses.
double loss_and_backward(TransformerParams& params, const ModelConfig& cfg,
                         const std::vector<int>& tokens);

struct ProbeVectors {
    std::vector<double> attn_branch;  // branch output before beta scaling
    std::vector<double> ffn_branch;
    std::vector<double> residual;  // stream after the block
};

/// Activation probes at the last position, one entry per layer. probe_layer
/// >= 0 restricts to that layer (must be < L).
std::vector<ProbeVectors> measure_activations(const TransformerParams& params,
                                              const ModelConfig& cfg,
                                              const std::vector<int>& tokens,
                                              int64_t probe_layer = -1);

/// One model + optimizer instance, confined to one task.
class Trainer {
public:
    Trainer(const ModelConfig& cfg, uint64_t seed, Schedule sched, double adam_beta1 = 0.9,
            double adam_beta2 = 0.95);

    /// Called after each tensor update with the tensor and its delta
    /// W_t - W_{t-1}.
    using TensorHook = std::function<void(const ParamTensor&, const Matrix& delta)>;

    /// One optimizer step on one token sequence; returns the training loss.
    double step(const std::vector<int>& tokens, const TensorHook& hook = nullptr);

    double eval_loss(const std::vector<int>& tokens) const;

    const ModelConfig& config() const { return cfg_; }
    TransformerParams& params() { return params_; }
    const TransformerParams& params() const { return params_; }
    std::vector<AdamState>& opt_states() { return opt_; }
    int64_t steps_taken() const { return step_count_; }

private:
    ModelConfig cfg_;
    TransformerParams params_;
    std::vector<AdamState> opt_;
    Schedule sched_;
    int64_t step_count_ = 0;
};

}  // namespace smup
