#include "lfpo/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lfpo::simplex {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_logits(const Vec& z) {
    require(z.size() >= 2, "logit row needs at least 2 entries");
    require(is_finite(z), "logit row has non-finite entries");
}

}  // namespace

bool is_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool is_valid_dist(const Vec& probs, double tol) {
    if (probs.empty() || !is_finite(probs)) return false;
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
}

Dist OneHot::to_dist() const {
    Vec v(size, 0.0);
    v[index] = 1.0;
    return Dist{std::move(v)};
}

Dist softmax(const LogitRow& z) {
    require_logits(z.values);
    const double zmax = *std::max_element(z.values.begin(), z.values.end());
    Vec out(z.values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        out[i] = std::exp(z.values[i] - zmax);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return Dist{std::move(out)};
}

Vec log_softmax(const LogitRow& z) {
    require_logits(z.values);
    const double zmax = *std::max_element(z.values.begin(), z.values.end());
    double sum = 0.0;
    for (double v : z.values) sum += std::exp(v - zmax);
    const double log_norm = zmax + std::log(sum);
    Vec out(z.values.size());
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        out[i] = z.values[i] - log_norm;
    }
    return out;
}

Dist mask_prior(std::size_t vocab) {
    require(vocab >= 2, "mask prior needs vocab >= 2");
    return Dist{Vec(vocab, 1.0 / static_cast<double>(vocab))};
}

Dist interpolate_state(const OneHot& x1, const Dist& m, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, "alpha outside [0, 1]");
    require(x1.size == m.probs.size(), "dimension mismatch");
    require(x1.index < x1.size, "one-hot index out of range");
    Vec out(m.probs.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (1.0 - alpha) * m.probs[i];
    }
    out[x1.index] += alpha;
    return Dist{std::move(out)};
}

Velocity model_velocity(const Dist& p, const Dist& base) {
    require(p.probs.size() == base.probs.size(), "dimension mismatch");
    Vec out(p.probs.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = p.probs[i] - base.probs[i];
    }
    return Velocity{std::move(out)};
}

Velocity target_velocity(const OneHot& x1, const Dist& base) {
    require(x1.size == base.probs.size(), "dimension mismatch");
    require(x1.index < x1.size, "one-hot index out of range");
    Vec out(base.probs.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -base.probs[i];
    out[x1.index] += 1.0;
    return Velocity{std::move(out)};
}

double fm_loss(const Dist& p, const OneHot& x1) {
    require(p.probs.size() == x1.size, "dimension mismatch");
    require(x1.index < x1.size, "one-hot index out of range");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        const double d = p.probs[i] - (i == x1.index ? 1.0 : 0.0);
        sum += d * d;
    }
    return sum;
}

double ce_loss(const Dist& target, const Dist& pred, CeZeroPolicy policy,
               bool* clamped) {
    require(target.probs.size() == pred.probs.size(), "dimension mismatch");
    if (clamped) *clamped = false;
    double loss = 0.0;
    for (std::size_t i = 0; i < target.probs.size(); ++i) {
        const double t = target.probs[i];
        if (t == 0.0) continue;
        double q = pred.probs[i];
        if (q < kProbFloor) {
            if (policy == CeZeroPolicy::Error) {
                throw std::invalid_argument(
                    "prediction has zero mass where target has support");
            }
            q = kProbFloor;
            if (clamped) *clamped = true;
        }
        loss -= t * std::log(q);
    }
    return loss;
}

Vec ce_gradient(const Dist& pred, const Dist& target) {
    require(pred.probs.size() == target.probs.size(), "dimension mismatch");
    Vec out(pred.probs.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = pred.probs[i] - target.probs[i];
    }
    return out;
}

}  // namespace lfpo::simplex
