// A small bidirectional sequence denoiser: one attention layer plus one
// residual MLP, with exact hand-written reverse-mode gradients.
//
// Parameters live in one flat vector whose layout is fixed (it is part of
// the checkpoint format):
//   E    [V x d]     token embeddings
//   P    [L x d]     positional embeddings
//   Wq   [d x d]     query projection
//   Wk   [d x d]     key projection
//   Wv   [d x d]     value projection
//   W1   [d_ff x d]  MLP in
//   W2   [d x d_ff]  MLP out
//   Wout [V x d]     output projection
// All matrices are row major. MASK is the ordinary token id V-1.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lfpo::denoiser {

using Vec = std::vector<double>;
using ParamVector = std::vector<double>;
using Tokens = std::vector<int>;

struct Config {
    std::size_t vocab = 0;       // includes the reserved MASK id (vocab - 1)
    std::size_t seq_len = 0;     // prompt_len + completion_len
    std::size_t embed_dim = 0;
    std::size_t hidden_dim = 0;  // MLP width, >= embed_dim
    std::uint64_t seed = 0;

    int mask_id() const { return static_cast<int>(vocab) - 1; }
    std::size_t param_count() const {
        return vocab * embed_dim + seq_len * embed_dim +
               3 * embed_dim * embed_dim + 2 * hidden_dim * embed_dim +
               vocab * embed_dim;
    }
    void validate() const;
};

// Offsets of each weight block inside the flat parameter vector.
struct Layout {
    std::size_t e, p, wq, wk, wv, w1, w2, wout, total;

    explicit Layout(const Config& c);
};

// L rows of V logits, row major.
struct LogitGrid {
    std::size_t seq_len = 0;
    std::size_t vocab = 0;
    Vec data;

    LogitGrid() = default;
    LogitGrid(std::size_t l, std::size_t v)
        : seq_len(l), vocab(v), data(l * v, 0.0) {}
    double* row(std::size_t i) { return data.data() + i * vocab; }
    const double* row(std::size_t i) const { return data.data() + i * vocab; }
};

// Weights drawn i.i.d. uniform(-s, s) with s = 1/sqrt(d). Bit-identical for
// identical (config, seed).
ParamVector init_params(const Config& config, std::uint64_t seed);

LogitGrid forward(const Config& config, const ParamVector& params,
                  const Tokens& tokens);

// Exact gradient of sum_i upstream_i . logits_i with respect to params.
// Upstream rows outside active_positions must be zero; positions listed in
// active_positions bound where the output projection gradient is gathered,
// but gradients still flow to every position through attention.
ParamVector backward(const Config& config, const ParamVector& params,
                     const Tokens& tokens, const LogitGrid& upstream,
                     const std::vector<std::size_t>& active_positions);

struct FdReport {
    double max_rel_error = 0.0;   // coordinates with |analytic| >= 1e-12
    double max_abs_error = 0.0;   // remaining near-zero coordinates
    int trials = 0;
    int coords_checked = 0;
};

// Compares backward against central finite differences (h = 1e-5) on random
// instances; instances whose ReLU pre-activations sit within 1e-3 of the
// kink are redrawn. Deterministic given seed.
FdReport fd_check(const Config& config, std::uint64_t seed, int trials);

}  // namespace lfpo::denoiser
