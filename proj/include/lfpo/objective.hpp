// The contrastive velocity-rectification objective.
//
// Per masked position, the current policy's log-space deviation from a
// reference policy is amplified into an implicit positive target and
// reversed into an implicit negative target; the loss is a reward-weighted
// cross entropy against those targets. Gradients with respect to the
// current logits are available in two forms: the exact reverse-mode
// gradient through the target construction (default), and the detached
// form where the targets are held constant (the residual-vector form).

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lfpo/denoiser.hpp"
#include "lfpo/diffusion.hpp"
#include "lfpo/simplex.hpp"

namespace lfpo::objective {

using Vec = simplex::Vec;

enum class Mode { All, PosOnly, NegOnly };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct LfpoConfig {
    double beta = 2.0;
    Mode mode = Mode::All;
    bool detach_targets = false;
    double lambda_anchor = 1.0;
    bool group_rescale = false;

    void validate() const;
};

// log pi_theta - log pi_ref, computed from normalized log-probabilities.
Vec velocity_deviation(const Vec& z_theta, const Vec& z_ref);

struct ImplicitTargets {
    simplex::Dist pi_plus;
    simplex::Dist pi_minus;
    Vec s_plus;   // log-score of pi_plus before normalization
    Vec s_minus;  // log-score of pi_minus before normalization
};

// s+ = log pi_ref + beta * deviation, s- = log pi_ref - beta * deviation;
// both renormalized through softmax. At beta = 1 the positive target equals
// pi_theta exactly, and softmax((s+ + s-)/2) equals pi_ref.
ImplicitTargets implicit_targets(const Vec& z_theta, const Vec& z_ref,
                                 double beta);

// r * CE(pi+, pi_theta) + (1 - r) * CE(pi-, pi_theta), restricted to one
// term under PosOnly / NegOnly.
double lfpo_position_loss(const Vec& z_theta, const Vec& z_ref, double beta,
                          double reward, Mode mode);

// Gradient of lfpo_position_loss with respect to z_theta. With
// detach_targets the targets are constants and the gradient is the residual
// form r*(p - pi+) + (1-r)*(p - pi-); otherwise the gradient flows through
// the target construction as well.
Vec lfpo_logit_gradient(const Vec& z_theta, const Vec& z_ref, double beta,
                        double reward, Mode mode, bool detach_targets);

// r * CE(onehot(final_token), pi_theta): pull intermediate states toward
// the trajectory's final token, weighted by its reward.
double anchor_loss(const Vec& z_theta, std::size_t final_token, double reward);

// Gradient of anchor_loss with respect to z_theta: r * (p - onehot).
Vec anchor_gradient(const Vec& z_theta, std::size_t final_token,
                    double reward);

struct SequenceLoss {
    double loss = 0.0;
    denoiser::LogitGrid upstream;  // zero outside masked completion rows
    std::size_t masked_count = 0;
};

// Mean of per-position losses (contrastive + lambda_anchor * anchor) over
// the masked completion positions; the upstream gradient carries the same
// 1/masked_count scaling and is exactly zero elsewhere.
SequenceLoss sequence_loss(const diffusion::Trajectory& traj,
                           const diffusion::MaskPattern& pattern,
                           const denoiser::LogitGrid& theta_logits,
                           const denoiser::LogitGrid& ref_logits,
                           const LfpoConfig& config);

}  // namespace lfpo::objective
