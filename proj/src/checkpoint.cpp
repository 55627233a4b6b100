#include "smup/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace smup {

namespace {

constexpr char kMagic[] = "SMUPCKPT1\n";

void write_matrix(std::ofstream& out, const Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix read_matrix(std::ifstream& in, int64_t rows, int64_t cols) {
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated matrix block");
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const TransformerParams& params, const std::vector<AdamState>* opt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");

    std::ostringstream hdr;
    hdr << "n=" << cfg.n << "\nL=" << cfg.L << "\nH=" << cfg.H << "\nd_head=" << cfg.d_head
        << "\nkv_heads=" << cfg.kv_heads << "\nvocab=" << cfg.vocab
        << "\nseq_len=" << cfg.seq_len << "\n";
    hdr << "param_kind=" << param_kind_name(cfg.param.kind) << "\n";
    char buf[64];
    auto num = [&buf](double v) {
        snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    hdr << "eta0=" << num(cfg.param.eta0) << "\nlambda0=" << num(cfg.param.lambda0)
        << "\nsigma0=" << num(cfg.param.sigma0) << "\neps0=" << num(cfg.param.eps0) << "\n";
    hdr << "wd_mode=" << (cfg.param.wd_mode == WdMode::Coupled ? "coupled" : "decoupled") << "\n";
    hdr << "beta_mode="
        << (cfg.param.beta_mode.kind == BetaModeKind::Constant ? "constant" : "complete-p")
        << "\nbeta0=" << num(cfg.param.beta_mode.beta0) << "\n";
    hdr << "eps_mode=" << (cfg.param.eps_mode == EpsMode::Scaled ? "scaled" : "constant") << "\n";
    hdr << "learned_positions=" << (cfg.learned_positions ? 1 : 0) << "\n";
    hdr << "attn_scale_override=" << num(cfg.attn_scale_override) << "\n";
    hdr << "has_opt=" << (opt != nullptr ? 1 : 0) << "\n";
    hdr << "tensors=" << params.tensors.size() << "\n";
    for (const auto& t : params.tensors) {
        hdr << "tensor=" << t.name << " " << role_name(t.role) << " " << t.layer << " "
            << t.w.rows() << " " << t.w.cols() << " lr=" << num(t.hyper.lr)
            << " wd=" << num(t.hyper.wd) << " eps=" << num(t.hyper.eps)
            << " std=" << num(t.hyper.init_std) << " mult=" << num(t.hyper.multiplier)
            << " r=" << t.hyper.r << "\n";
    }
    if (opt != nullptr && !opt->empty()) {
        hdr << "adam_t=" << (*opt)[0].t << " beta1=" << num((*opt)[0].beta1)
            << " beta2=" << num((*opt)[0].beta2) << "\n";
    }
    hdr << "end_header\n";

    out.write(kMagic, sizeof(kMagic) - 1);
    const std::string h = hdr.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto& t : params.tensors) write_matrix(out, t.w);
    if (opt != nullptr) {
        for (const auto& s : *opt) {
            write_matrix(out, s.m);
            write_matrix(out, s.v);
        }
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    std::string magic(sizeof(kMagic) - 1, '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || magic != kMagic) {
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
    }

    Checkpoint ck;
    std::vector<std::string> tensor_lines;
    int64_t adam_t = 0;
    double beta1 = 0.9, beta2 = 0.95;
    std::string line;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("checkpoint: malformed header line '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "n") ck.cfg.n = std::stoll(val);
        else if (key == "L") ck.cfg.L = std::stoll(val);
        else if (key == "H") ck.cfg.H = std::stoll(val);
        else if (key == "d_head") ck.cfg.d_head = std::stoll(val);
        else if (key == "kv_heads") ck.cfg.kv_heads = std::stoll(val);
        else if (key == "vocab") ck.cfg.vocab = std::stoll(val);
        else if (key == "seq_len") ck.cfg.seq_len = std::stoll(val);
        else if (key == "param_kind") ck.cfg.param.kind = param_kind_from_name(val);
        else if (key == "eta0") ck.cfg.param.eta0 = std::stod(val);
        else if (key == "lambda0") ck.cfg.param.lambda0 = std::stod(val);
        else if (key == "sigma0") ck.cfg.param.sigma0 = std::stod(val);
        else if (key == "eps0") ck.cfg.param.eps0 = std::stod(val);
        else if (key == "wd_mode")
            ck.cfg.param.wd_mode = (val == "coupled") ? WdMode::Coupled : WdMode::Decoupled;
        else if (key == "beta_mode")
            ck.cfg.param.beta_mode.kind =
                (val == "constant") ? BetaModeKind::Constant : BetaModeKind::CompleteP;
        else if (key == "beta0") ck.cfg.param.beta_mode.beta0 = std::stod(val);
        else if (key == "eps_mode")
            ck.cfg.param.eps_mode = (val == "scaled") ? EpsMode::Scaled : EpsMode::Constant;
        else if (key == "learned_positions") ck.cfg.learned_positions = (val == "1");
        else if (key == "attn_scale_override") ck.cfg.attn_scale_override = std::stod(val);
        else if (key == "has_opt") ck.has_opt = (val == "1");
        else if (key == "tensor") tensor_lines.push_back(val);
        else if (key == "adam_t") {
            std::istringstream ss(val);
            std::string tok;
            ss >> adam_t;
            while (ss >> tok) {
                if (tok.rfind("beta1=", 0) == 0) beta1 = std::stod(tok.substr(6));
                if (tok.rfind("beta2=", 0) == 0) beta2 = std::stod(tok.substr(6));
            }
        }
    }

    // Rebuild the tensor skeleton so indices and hypers match init_params.
    RngStream dummy(0, 0);
    ck.params = init_params(ck.cfg, dummy);
    if (ck.params.tensors.size() != tensor_lines.size()) {
        throw std::runtime_error("checkpoint: tensor count mismatch");
    }
    for (size_t i = 0; i < tensor_lines.size(); ++i) {
        std::istringstream ss(tensor_lines[i]);
        std::string name, role_s;
        int64_t layer, rows, cols;
        ss >> name >> role_s >> layer >> rows >> cols;
        auto& t = ck.params.tensors[i];
        if (name != t.name || rows != t.w.rows() || cols != t.w.cols()) {
            throw std::runtime_error("checkpoint: tensor directory mismatch at '" + name + "'");
        }
        std::string tok;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string k = tok.substr(0, eq);
            const double v = std::stod(tok.substr(eq + 1));
            if (k == "lr") t.hyper.lr = v;
            else if (k == "wd") t.hyper.wd = v;
            else if (k == "eps") t.hyper.eps = v;
            else if (k == "std") t.hyper.init_std = v;
            else if (k == "mult") t.hyper.multiplier = v;
            else if (k == "r") t.hyper.r = static_cast<int64_t>(v);
        }
    }
    for (auto& t : ck.params.tensors) {
        t.w = read_matrix(in, t.w.rows(), t.w.cols());
    }
    if (ck.has_opt) {
        for (auto& t : ck.params.tensors) {
            AdamState s(t.w.rows(), t.w.cols(), beta1, beta2);
            s.t = adam_t;
            s.m = read_matrix(in, t.w.rows(), t.w.cols());
            s.v = read_matrix(in, t.w.rows(), t.w.cols());
            ck.opt.push_back(std::move(s));
        }
    }
    return ck;
}

}  // namespace smup
