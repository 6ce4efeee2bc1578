// Exact vector math on the probability simplex: categorical distributions,
// displacement (velocity) vectors between simplex points, and the losses
// whose logit gradients reduce to residual vectors.
//
// Everything here is a pure function over 64-bit doubles; the identities the
// rest of the project leans on (softmax shift invariance, cross-entropy
// gradient = prediction - target, base-point cancellation of velocity
// differences) hold to near machine precision at this width.

#pragma once

#include <cstddef>
#include <vector>

namespace lfpo::simplex {

using Vec = std::vector<double>;

// Pre-softmax logits for one position. All entries finite, size >= 2.
struct LogitRow {
    Vec values;
};

// Point on the probability simplex: entries >= 0, sum == 1 within 1e-9.
struct Dist {
    Vec probs;
};

// Vertex of the simplex, stored as (index, dimension).
struct OneHot {
    std::size_t index = 0;
    std::size_t size = 0;

    Dist to_dist() const;
};

// Difference of two simplex points; components sum to 0 within 1e-9.
struct Velocity {
    Vec components;
};

// What ce_loss does when the prediction has zero mass where the target has
// support: clamp the prediction at 1e-300 (and report it), or throw.
enum class CeZeroPolicy { Clamp, Error };

inline constexpr double kProbFloor = 1e-300;

bool is_finite(const Vec& v);
bool is_valid_dist(const Vec& probs, double tol = 1e-9);

// Numerically stabilized softmax (max entry subtracted before exp).
Dist softmax(const LogitRow& z);

// Normalized log-probabilities; exp of the result sums to 1 within 1e-12.
Vec log_softmax(const LogitRow& z);

// Uniform distribution over V tokens (the mask prior at the simplex center).
Dist mask_prior(std::size_t vocab);

// (1 - alpha) * m + alpha * x1 for alpha in [0, 1].
Dist interpolate_state(const OneHot& x1, const Dist& m, double alpha);

// p - base: displacement from a base point to the model prediction.
Velocity model_velocity(const Dist& p, const Dist& base);

// x1 - base: displacement from a base point to the data vertex.
Velocity target_velocity(const OneHot& x1, const Dist& base);

// Squared Euclidean distance ||p - x1||^2; equals the squared velocity
// residual for any shared base point.
double fm_loss(const Dist& p, const OneHot& x1);

// Cross entropy -sum target_i * log(pred_i). `clamped`, when non-null, is
// set when the floor was applied under CeZeroPolicy::Clamp.
double ce_loss(const Dist& target, const Dist& pred,
               CeZeroPolicy policy = CeZeroPolicy::Clamp,
               bool* clamped = nullptr);

// Gradient of ce_loss(target, softmax(z)) with respect to z, with the
// target held constant: exactly pred - target. Valid for one-hot and soft
// targets alike.
Vec ce_gradient(const Dist& pred, const Dist& target);

}  // namespace lfpo::simplex
