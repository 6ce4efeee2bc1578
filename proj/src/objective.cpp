#include "lfpo/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace lfpo::objective {

namespace {

using simplex::Dist;
using simplex::LogitRow;

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::All: return "all";
        case Mode::PosOnly: return "pos-only";
        case Mode::NegOnly: return "neg-only";
    }
    return "all";
}

Mode mode_from_string(const std::string& name) {
    if (name == "all") return Mode::All;
    if (name == "pos-only") return Mode::PosOnly;
    if (name == "neg-only") return Mode::NegOnly;
    throw std::invalid_argument("unknown loss mode: " + name);
}

void LfpoConfig::validate() const {
    require(beta > 0.0, "beta must be > 0");
    require(lambda_anchor >= 0.0, "lambda_anchor must be >= 0");
}

Vec velocity_deviation(const Vec& z_theta, const Vec& z_ref) {
    require(z_theta.size() == z_ref.size(), "dimension mismatch");
    const Vec lt = simplex::log_softmax(LogitRow{z_theta});
    const Vec lr = simplex::log_softmax(LogitRow{z_ref});
    Vec out(lt.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lt[i] - lr[i];
    return out;
}

ImplicitTargets implicit_targets(const Vec& z_theta, const Vec& z_ref,
                                 double beta) {
    require(beta > 0.0, "beta must be > 0");
    const Vec lr = simplex::log_softmax(LogitRow{z_ref});
    const Vec lt = simplex::log_softmax(LogitRow{z_theta});
    ImplicitTargets out;
    out.s_plus.resize(lr.size());
    out.s_minus.resize(lr.size());
    for (std::size_t i = 0; i < lr.size(); ++i) {
        const double dev = lt[i] - lr[i];
        out.s_plus[i] = lr[i] + beta * dev;
        out.s_minus[i] = lr[i] - beta * dev;
    }
    out.pi_plus = simplex::softmax(LogitRow{out.s_plus});
    out.pi_minus = simplex::softmax(LogitRow{out.s_minus});
    return out;
}

double lfpo_position_loss(const Vec& z_theta, const Vec& z_ref, double beta,
                          double reward, Mode mode) {
    require(reward >= 0.0 && reward <= 1.0, "reward outside [0, 1]");
    const ImplicitTargets t = implicit_targets(z_theta, z_ref, beta);
    const Vec lt = simplex::log_softmax(LogitRow{z_theta});
    double loss = 0.0;
    if (mode != Mode::NegOnly) {
        loss += reward * -dot(t.pi_plus.probs, lt);
    }
    if (mode != Mode::PosOnly) {
        loss += (1.0 - reward) * -dot(t.pi_minus.probs, lt);
    }
    return loss;
}

Vec lfpo_logit_gradient(const Vec& z_theta, const Vec& z_ref, double beta,
                        double reward, Mode mode, bool detach_targets) {
    require(reward >= 0.0 && reward <= 1.0, "reward outside [0, 1]");
    const ImplicitTargets t = implicit_targets(z_theta, z_ref, beta);
    const Dist p = simplex::softmax(LogitRow{z_theta});
    const std::size_t n = z_theta.size();
    Vec grad(n, 0.0);

    if (mode != Mode::NegOnly) {
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] += reward * (p.probs[i] - t.pi_plus.probs[i]);
        }
    }
    if (mode != Mode::PosOnly) {
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] += (1.0 - reward) * (p.probs[i] - t.pi_minus.probs[i]);
        }
    }
    if (detach_targets) return grad;

    // Flow through the targets themselves. With l = log_softmax(z_theta),
    // d pi+/dz_i = beta * pi+_k (delta_ki - pi+_i) and the extra term per
    // target is -+ beta * pi_k (l_k - E_pi[l]).
    const Vec lt = simplex::log_softmax(LogitRow{z_theta});
    if (mode != Mode::NegOnly) {
        const double mean_plus = dot(t.pi_plus.probs, lt);
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] -= reward * beta * t.pi_plus.probs[i] * (lt[i] - mean_plus);
        }
    }
    if (mode != Mode::PosOnly) {
        const double mean_minus = dot(t.pi_minus.probs, lt);
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] += (1.0 - reward) * beta * t.pi_minus.probs[i] *
                       (lt[i] - mean_minus);
        }
    }
    return grad;
}

double anchor_loss(const Vec& z_theta, std::size_t final_token,
                   double reward) {
    require(reward >= 0.0 && reward <= 1.0, "reward outside [0, 1]");
    require(final_token < z_theta.size(), "token id out of range");
    const Vec lt = simplex::log_softmax(simplex::LogitRow{z_theta});
    return -reward * lt[final_token];
}

Vec anchor_gradient(const Vec& z_theta, std::size_t final_token,
                    double reward) {
    require(reward >= 0.0 && reward <= 1.0, "reward outside [0, 1]");
    require(final_token < z_theta.size(), "token id out of range");
    const Dist p = simplex::softmax(simplex::LogitRow{z_theta});
    Vec grad(p.probs.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        grad[i] = reward * p.probs[i];
    }
    grad[final_token] -= reward;
    return grad;
}

SequenceLoss sequence_loss(const diffusion::Trajectory& traj,
                           const diffusion::MaskPattern& pattern,
                           const denoiser::LogitGrid& theta_logits,
                           const denoiser::LogitGrid& ref_logits,
                           const LfpoConfig& config) {
    config.validate();
    const std::size_t lp = traj.prompt.size();
    const std::size_t lc = traj.completion.size();
    require(pattern.masked.size() == lc, "mask pattern length mismatch");
    require(theta_logits.seq_len == lp + lc && ref_logits.seq_len == lp + lc,
            "logit grid length mismatch");
    require(theta_logits.vocab == ref_logits.vocab, "vocab mismatch");
    const std::size_t masked = pattern.count();
    require(masked >= 1, "no masked positions");
    const double r = traj.reward;
    require(r >= 0.0 && r <= 1.0, "reward outside [0, 1]");

    SequenceLoss out;
    out.masked_count = masked;
    out.upstream = denoiser::LogitGrid(theta_logits.seq_len, theta_logits.vocab);
    const double scale = 1.0 / static_cast<double>(masked);

    for (std::size_t i = 0; i < lc; ++i) {
        if (!pattern.masked[i]) continue;
        const std::size_t row = lp + i;
        Vec zt(theta_logits.row(row), theta_logits.row(row) + theta_logits.vocab);
        Vec zr(ref_logits.row(row), ref_logits.row(row) + ref_logits.vocab);

        double pos_loss =
            lfpo_position_loss(zt, zr, config.beta, r, config.mode);
        Vec grad = lfpo_logit_gradient(zt, zr, config.beta, r, config.mode,
                                       config.detach_targets);
        if (config.lambda_anchor > 0.0) {
            const auto tok = static_cast<std::size_t>(traj.completion[i]);
            pos_loss += config.lambda_anchor * anchor_loss(zt, tok, r);
            const Vec ag = anchor_gradient(zt, tok, r);
            for (std::size_t v = 0; v < grad.size(); ++v) {
                grad[v] += config.lambda_anchor * ag[v];
            }
        }
        out.loss += scale * pos_loss;
        double* urow = out.upstream.row(row);
        for (std::size_t v = 0; v < grad.size(); ++v) {
            urow[v] = scale * grad[v];
        }
    }
    return out;
}

}  // namespace lfpo::objective
