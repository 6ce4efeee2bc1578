#include "lfpo/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lfpo::diffusion {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Softmax over the non-MASK entries of a logit row; returns (probs, argmax).
// Ties resolve to the smallest token id.
std::pair<std::vector<double>, int> data_token_probs(const double* logits,
                                                     std::size_t vocab,
                                                     int mask_id,
                                                     double inv_temp) {
    std::vector<double> p(vocab, 0.0);
    double zmax = -1e300;
    for (std::size_t v = 0; v < vocab; ++v) {
        if (static_cast<int>(v) == mask_id) continue;
        zmax = std::max(zmax, logits[v]);
    }
    double sum = 0.0;
    int best = -1;
    double best_p = -1.0;
    for (std::size_t v = 0; v < vocab; ++v) {
        if (static_cast<int>(v) == mask_id) continue;
        p[v] = std::exp((logits[v] - zmax) * inv_temp);
        sum += p[v];
    }
    for (std::size_t v = 0; v < vocab; ++v) {
        p[v] /= sum;
        if (static_cast<int>(v) != mask_id && p[v] > best_p) {
            best_p = p[v];
            best = static_cast<int>(v);
        }
    }
    return {std::move(p), best};
}

}  // namespace

std::size_t NoiseSchedule::mask_count(std::size_t t) const {
    require(t >= 1 && t <= completion_len, "timestep out of range");
    return t;
}

std::size_t MaskPattern::count() const {
    std::size_t n = 0;
    for (bool b : masked) n += b ? 1 : 0;
    return n;
}

void DecodeConfig::validate() const {
    require(confidence_threshold >= 0.0 && confidence_threshold <= 1.01,
            "confidence threshold outside [0, 1.01]");
    require(temperature >= 0.0, "temperature must be >= 0");
}

std::pair<Tokens, MaskPattern> forward_mask(const denoiser::Config& model,
                                            const Trajectory& traj,
                                            std::size_t t, Rng& rng) {
    const std::size_t lc = traj.completion.size();
    const std::size_t lp = traj.prompt.size();
    require(lp + lc == model.seq_len, "trajectory length mismatch");
    require(t >= 1 && t <= lc, "timestep out of range");

    Tokens tokens;
    tokens.reserve(model.seq_len);
    tokens.insert(tokens.end(), traj.prompt.begin(), traj.prompt.end());
    tokens.insert(tokens.end(), traj.completion.begin(), traj.completion.end());

    MaskPattern pattern;
    pattern.masked.assign(lc, false);
    for (std::size_t idx : rng.sample_without_replacement(lc, t)) {
        pattern.masked[idx] = true;
        tokens[lp + idx] = model.mask_id();
    }
    return {std::move(tokens), std::move(pattern)};
}

Trajectory decode(const denoiser::Config& model,
                  const denoiser::ParamVector& params, const Tokens& prompt,
                  std::size_t completion_len, const DecodeConfig& config,
                  Rng& rng) {
    config.validate();
    require(completion_len >= 1, "completion length must be >= 1");
    require(prompt.size() + completion_len == model.seq_len,
            "prompt length mismatch");
    const std::size_t lp = prompt.size();
    const std::size_t cap = config.max_unmask_per_step == 0
                                ? completion_len
                                : config.max_unmask_per_step;
    require(cap >= 1, "per-step unmask cap must be >= 1");

    Tokens tokens = prompt;
    tokens.resize(model.seq_len, model.mask_id());
    std::vector<bool> masked(completion_len, true);
    std::size_t remaining = completion_len;
    std::size_t steps = 0;

    while (remaining > 0) {
        ++steps;
        denoiser::LogitGrid logits = denoiser::forward(model, params, tokens);

        struct Candidate {
            std::size_t pos;      // completion index
            double confidence;    // top data-token probability
        };
        std::vector<Candidate> cands;
        cands.reserve(remaining);
        for (std::size_t i = 0; i < completion_len; ++i) {
            if (!masked[i]) continue;
            auto [p, best] = data_token_probs(logits.row(lp + i), model.vocab,
                                              model.mask_id(), 1.0);
            cands.push_back({i, p[static_cast<std::size_t>(best)]});
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a,
                                                 const Candidate& b) {
            if (a.confidence != b.confidence) return a.confidence > b.confidence;
            return a.pos < b.pos;
        });

        std::size_t take = 0;
        while (take < cands.size() && take < cap &&
               cands[take].confidence >= config.confidence_threshold) {
            ++take;
        }
        if (take == 0) take = 1;  // progress guarantee

        for (std::size_t n = 0; n < take; ++n) {
            const std::size_t i = cands[n].pos;
            const double* row = logits.row(lp + i);
            int token;
            if (config.temperature == 0.0) {
                auto [p, best] = data_token_probs(row, model.vocab,
                                                  model.mask_id(), 1.0);
                token = best;
            } else {
                auto [p, best] = data_token_probs(row, model.vocab,
                                                  model.mask_id(),
                                                  1.0 / config.temperature);
                double u = rng.uniform01();
                token = best;  // fallback for accumulated rounding
                double acc = 0.0;
                for (std::size_t v = 0; v < model.vocab; ++v) {
                    if (static_cast<int>(v) == model.mask_id()) continue;
                    acc += p[v];
                    if (u < acc) {
                        token = static_cast<int>(v);
                        break;
                    }
                }
            }
            tokens[lp + i] = token;
            masked[i] = false;
            --remaining;
        }
    }

    Trajectory traj;
    traj.prompt = prompt;
    traj.completion.assign(tokens.begin() + static_cast<std::ptrdiff_t>(lp),
                           tokens.end());
    traj.decode_steps = steps;
    return traj;
}

double mean_decode_steps(const denoiser::Config& model,
                         const denoiser::ParamVector& params,
                         const std::vector<Tokens>& prompts,
                         std::size_t completion_len,
                         const DecodeConfig& config) {
    require(!prompts.empty(), "prompt set is empty");
    DecodeConfig greedy = config;
    greedy.temperature = 0.0;
    double total = 0.0;
    for (const Tokens& prompt : prompts) {
        Rng rng(0);  // greedy decode consumes no randomness
        total += static_cast<double>(
            decode(model, params, prompt, completion_len, greedy, rng)
                .decode_steps);
    }
    return total / static_cast<double>(prompts.size());
}

}  // namespace lfpo::diffusion
