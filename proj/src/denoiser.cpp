#include "lfpo/denoiser.hpp"

#include <cmath>
#include <stdexcept>

#include "lfpo/rng.hpp"

namespace lfpo::denoiser {

namespace {

// Everything the reverse pass needs from the forward pass.
struct Cache {
    std::vector<Vec> h0, q, k, v, h1, u, a, h2;  // per position
    std::vector<Vec> attn;                       // attention rows, length L each
};

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_tokens(const Config& c, const Tokens& tokens) {
    require(tokens.size() == c.seq_len, "token sequence length mismatch");
    for (int t : tokens) {
        require(t >= 0 && t < static_cast<int>(c.vocab), "token id out of range");
    }
}

// out[r] = sum_c M[r][c] * x[c], M is rows x cols row major.
void matvec(const double* m, std::size_t rows, std::size_t cols,
            const double* x, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const double* row = m + r * cols;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
        out[r] = s;
    }
}

// out[c] += sum_r M[r][c] * y[r]  (transpose apply)
void matvec_t_add(const double* m, std::size_t rows, std::size_t cols,
                  const double* y, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m + r * cols;
        const double yr = y[r];
        if (yr == 0.0) continue;
        for (std::size_t c = 0; c < cols; ++c) out[c] += yr * row[c];
    }
}

// M[r][c] += y[r] * x[c]  (outer product accumulate)
void outer_add(double* m, std::size_t rows, std::size_t cols, const double* y,
               const double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double yr = y[r];
        if (yr == 0.0) continue;
        double* row = m + r * cols;
        for (std::size_t c = 0; c < cols; ++c) row[c] += yr * x[c];
    }
}

Cache run_forward(const Config& c, const ParamVector& params,
                  const Tokens& tokens, LogitGrid& logits) {
    const Layout lay(c);
    const std::size_t L = c.seq_len, d = c.embed_dim, dff = c.hidden_dim;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    Cache cc;
    cc.h0.assign(L, Vec(d));
    cc.q.assign(L, Vec(d));
    cc.k.assign(L, Vec(d));
    cc.v.assign(L, Vec(d));
    cc.h1.assign(L, Vec(d));
    cc.u.assign(L, Vec(dff));
    cc.a.assign(L, Vec(dff));
    cc.h2.assign(L, Vec(d));
    cc.attn.assign(L, Vec(L));

    const double* E = params.data() + lay.e;
    const double* P = params.data() + lay.p;
    for (std::size_t i = 0; i < L; ++i) {
        const double* emb = E + static_cast<std::size_t>(tokens[i]) * d;
        const double* pos = P + i * d;
        for (std::size_t x = 0; x < d; ++x) cc.h0[i][x] = emb[x] + pos[x];
        matvec(params.data() + lay.wq, d, d, cc.h0[i].data(), cc.q[i].data());
        matvec(params.data() + lay.wk, d, d, cc.h0[i].data(), cc.k[i].data());
        matvec(params.data() + lay.wv, d, d, cc.h0[i].data(), cc.v[i].data());
    }

    // Full (non-causal) attention with row softmax over scores.
    Vec scores(L);
    for (std::size_t i = 0; i < L; ++i) {
        double smax = -1e300;
        for (std::size_t j = 0; j < L; ++j) {
            double s = 0.0;
            for (std::size_t x = 0; x < d; ++x) s += cc.q[i][x] * cc.k[j][x];
            scores[j] = s * inv_sqrt_d;
            if (scores[j] > smax) smax = scores[j];
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
            cc.attn[i][j] = std::exp(scores[j] - smax);
            sum += cc.attn[i][j];
        }
        for (std::size_t j = 0; j < L; ++j) cc.attn[i][j] /= sum;

        for (std::size_t x = 0; x < d; ++x) {
            double s = cc.h0[i][x];
            for (std::size_t j = 0; j < L; ++j) s += cc.attn[i][j] * cc.v[j][x];
            cc.h1[i][x] = s;
        }
    }

    for (std::size_t i = 0; i < L; ++i) {
        matvec(params.data() + lay.w1, dff, d, cc.h1[i].data(), cc.u[i].data());
        for (std::size_t r = 0; r < dff; ++r) {
            cc.a[i][r] = cc.u[i][r] > 0.0 ? cc.u[i][r] : 0.0;
        }
        Vec mlp(d);
        matvec(params.data() + lay.w2, d, dff, cc.a[i].data(), mlp.data());
        for (std::size_t x = 0; x < d; ++x) cc.h2[i][x] = cc.h1[i][x] + mlp[x];
        matvec(params.data() + lay.wout, c.vocab, d, cc.h2[i].data(),
               logits.row(i));
    }
    return cc;
}

}  // namespace

void Config::validate() const {
    if (vocab < 4 || seq_len < 2 || embed_dim < 2 || hidden_dim < embed_dim) {
        throw std::invalid_argument("denoiser config out of range");
    }
}

Layout::Layout(const Config& c) {
    const std::size_t d = c.embed_dim;
    e = 0;
    p = e + c.vocab * d;
    wq = p + c.seq_len * d;
    wk = wq + d * d;
    wv = wk + d * d;
    w1 = wv + d * d;
    w2 = w1 + c.hidden_dim * d;
    wout = w2 + d * c.hidden_dim;
    total = wout + c.vocab * d;
}

ParamVector init_params(const Config& config, std::uint64_t seed) {
    config.validate();
    const double s = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
    Rng rng(derive_seed(seed, stream::kInitParams));
    ParamVector params(config.param_count());
    for (double& w : params) w = rng.uniform_real(-s, s);
    return params;
}

LogitGrid forward(const Config& config, const ParamVector& params,
                  const Tokens& tokens) {
    config.validate();
    require(params.size() == config.param_count(), "parameter count mismatch");
    check_tokens(config, tokens);
    LogitGrid logits(config.seq_len, config.vocab);
    run_forward(config, params, tokens, logits);
    return logits;
}

ParamVector backward(const Config& config, const ParamVector& params,
                     const Tokens& tokens, const LogitGrid& upstream,
                     const std::vector<std::size_t>& active_positions) {
    config.validate();
    require(params.size() == config.param_count(), "parameter count mismatch");
    check_tokens(config, tokens);
    require(upstream.seq_len == config.seq_len && upstream.vocab == config.vocab,
            "upstream shape mismatch");

    const Layout lay(config);
    const std::size_t L = config.seq_len, d = config.embed_dim,
                      dff = config.hidden_dim, V = config.vocab;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<bool> active(L, false);
    for (std::size_t i : active_positions) {
        require(i < L, "active position out of range");
        active[i] = true;
    }

    LogitGrid logits(L, V);
    Cache cc = run_forward(config, params, tokens, logits);

    ParamVector grad(params.size(), 0.0);
    double* dWq = grad.data() + lay.wq;
    double* dWk = grad.data() + lay.wk;
    double* dWv = grad.data() + lay.wv;
    double* dW1 = grad.data() + lay.w1;
    double* dW2 = grad.data() + lay.w2;
    double* dWout = grad.data() + lay.wout;

    std::vector<Vec> dh0(L, Vec(d, 0.0));
    std::vector<Vec> dq(L, Vec(d, 0.0));
    std::vector<Vec> dk(L, Vec(d, 0.0));
    std::vector<Vec> dv(L, Vec(d, 0.0));

    Vec dh2(d), dh1(d), da(dff), du(dff), dattn_row(d), dA(L), ds(L);
    for (std::size_t i = 0; i < L; ++i) {
        const double* g = upstream.row(i);
        if (!active[i]) continue;  // contract: zero rows outside active set

        // logits_i = Wout h2_i
        std::fill(dh2.begin(), dh2.end(), 0.0);
        outer_add(dWout, V, d, g, cc.h2[i].data());
        matvec_t_add(params.data() + lay.wout, V, d, g, dh2.data());

        // h2 = h1 + W2 relu(W1 h1)
        dh1 = dh2;
        std::fill(da.begin(), da.end(), 0.0);
        outer_add(dW2, d, dff, dh2.data(), cc.a[i].data());
        matvec_t_add(params.data() + lay.w2, d, dff, dh2.data(), da.data());
        for (std::size_t r = 0; r < dff; ++r) {
            du[r] = cc.u[i][r] > 0.0 ? da[r] : 0.0;
        }
        outer_add(dW1, dff, d, du.data(), cc.h1[i].data());
        matvec_t_add(params.data() + lay.w1, dff, d, du.data(), dh1.data());

        // h1_i = h0_i + sum_j A_ij v_j
        for (std::size_t x = 0; x < d; ++x) {
            dh0[i][x] += dh1[x];
            dattn_row[x] = dh1[x];
        }
        double dot = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
            double s = 0.0;
            for (std::size_t x = 0; x < d; ++x) s += dattn_row[x] * cc.v[j][x];
            dA[j] = s;
            dot += cc.attn[i][j] * s;
            for (std::size_t x = 0; x < d; ++x) {
                dv[j][x] += cc.attn[i][j] * dattn_row[x];
            }
        }
        // row-softmax Jacobian
        for (std::size_t j = 0; j < L; ++j) {
            ds[j] = cc.attn[i][j] * (dA[j] - dot);
        }
        for (std::size_t j = 0; j < L; ++j) {
            const double w = ds[j] * inv_sqrt_d;
            if (w == 0.0) continue;
            for (std::size_t x = 0; x < d; ++x) {
                dq[i][x] += w * cc.k[j][x];
                dk[j][x] += w * cc.q[i][x];
            }
        }
    }

    // Projections and embeddings: every position can carry gradient through
    // its keys and values even when its own upstream row is zero.
    double* dE = grad.data() + lay.e;
    double* dP = grad.data() + lay.p;
    for (std::size_t i = 0; i < L; ++i) {
        outer_add(dWq, d, d, dq[i].data(), cc.h0[i].data());
        matvec_t_add(params.data() + lay.wq, d, d, dq[i].data(), dh0[i].data());
        outer_add(dWk, d, d, dk[i].data(), cc.h0[i].data());
        matvec_t_add(params.data() + lay.wk, d, d, dk[i].data(), dh0[i].data());
        outer_add(dWv, d, d, dv[i].data(), cc.h0[i].data());
        matvec_t_add(params.data() + lay.wv, d, d, dv[i].data(), dh0[i].data());

        double* e_row = dE + static_cast<std::size_t>(tokens[i]) * d;
        double* p_row = dP + i * d;
        for (std::size_t x = 0; x < d; ++x) {
            e_row[x] += dh0[i][x];
            p_row[x] += dh0[i][x];
        }
    }
    return grad;
}

FdReport fd_check(const Config& config, std::uint64_t seed, int trials) {
    config.validate();
    const std::size_t L = config.seq_len, dff = config.hidden_dim;
    const double h = 1e-5;
    const double kink_margin = 1e-3;

    FdReport report;
    report.trials = trials;
    Rng rng(derive_seed(seed, 0xfdfd));

    for (int trial = 0; trial < trials; ++trial) {
        ParamVector params;
        Tokens tokens(L);
        bool ok = false;
        for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
            params = init_params(config, rng.next_u64());
            for (std::size_t i = 0; i < L; ++i) {
                tokens[i] = static_cast<int>(rng.uniform_below(config.vocab));
            }
            // keep ReLU pre-activations clear of the kink so central
            // differences stay on one linear piece
            LogitGrid logits(L, config.vocab);
            Cache cc = run_forward(config, params, tokens, logits);
            ok = true;
            for (std::size_t i = 0; i < L && ok; ++i) {
                for (std::size_t r = 0; r < dff; ++r) {
                    if (std::abs(cc.u[i][r]) < kink_margin) {
                        ok = false;
                        break;
                    }
                }
            }
        }

        LogitGrid upstream(L, config.vocab);
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < L; ++i) {
            if (rng.uniform01() < 0.5 || (i == L - 1 && active.empty())) {
                active.push_back(i);
                for (std::size_t vtok = 0; vtok < config.vocab; ++vtok) {
                    upstream.row(i)[vtok] = rng.uniform_real(-1.0, 1.0);
                }
            }
        }

        ParamVector analytic = backward(config, params, tokens, upstream, active);

        auto objective = [&](const ParamVector& p) {
            LogitGrid lg = forward(config, p, tokens);
            double s = 0.0;
            for (std::size_t i : active) {
                for (std::size_t vtok = 0; vtok < config.vocab; ++vtok) {
                    s += upstream.row(i)[vtok] * lg.row(i)[vtok];
                }
            }
            return s;
        };

        for (int cidx = 0; cidx < 20; ++cidx) {
            const std::size_t c = static_cast<std::size_t>(
                rng.uniform_below(params.size()));
            ParamVector pp = params;
            pp[c] = params[c] + h;
            const double fp = objective(pp);
            pp[c] = params[c] - h;
            const double fm = objective(pp);
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[c];
            ++report.coords_checked;
            if (std::abs(an) < 1e-12) {
                report.max_abs_error =
                    std::max(report.max_abs_error, std::abs(fd - an));
            } else {
                const double rel =
                    std::abs(fd - an) / std::max(std::abs(an), std::abs(fd));
                report.max_rel_error = std::max(report.max_rel_error, rel);
            }
        }
    }
    return report;
}

}  // namespace lfpo::denoiser
