// Discrete masked-diffusion processes: forward re-noising (mask exactly t
// completion positions) and the reverse decode loop with confidence-based
// early stopping.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lfpo/denoiser.hpp"
#include "lfpo/rng.hpp"

namespace lfpo::diffusion {

using Tokens = denoiser::Tokens;

// Linear schedule over the completion: timestep t masks exactly t of the
// Lc completion positions, t in {1..Lc}.
struct NoiseSchedule {
    std::size_t completion_len = 0;

    std::size_t max_timestep() const { return completion_len; }
    std::size_t mask_count(std::size_t t) const;
};

// Which completion positions are masked (true = masked).
struct MaskPattern {
    std::vector<bool> masked;  // length = completion_len

    std::size_t count() const;
};

struct Trajectory {
    Tokens prompt;
    Tokens completion;
    double reward = 0.0;
    std::size_t decode_steps = 0;
};

struct DecodeConfig {
    double confidence_threshold = 0.9;  // in [0, 1.01]
    double temperature = 0.0;           // 0 = greedy
    std::size_t max_unmask_per_step = 0;  // 0 means "completion length"

    void validate() const;
};

// Re-noise a completed trajectory at timestep t: replace exactly t
// completion positions (uniform, without replacement) by MASK. The prompt
// is never masked.
std::pair<Tokens, MaskPattern> forward_mask(const denoiser::Config& model,
                                            const Trajectory& traj,
                                            std::size_t t, Rng& rng);

// Reverse process: start from a fully masked completion and iteratively
// finalize positions. Each step finalizes every still-masked position whose
// top probability reaches the confidence threshold (highest confidence
// first, up to the per-step cap); if none qualify, the single most
// confident position is finalized, so progress is guaranteed. Tokens are
// drawn at the configured temperature (argmax when 0). MASK itself is
// excluded from both confidence and sampling.
Trajectory decode(const denoiser::Config& model,
                  const denoiser::ParamVector& params, const Tokens& prompt,
                  std::size_t completion_len, const DecodeConfig& config,
                  Rng& rng);

// Mean decode_steps over greedy (temperature 0) decodes of each prompt.
double mean_decode_steps(const denoiser::Config& model,
                         const denoiser::ParamVector& params,
                         const std::vector<Tokens>& prompts,
                         std::size_t completion_len,
                         const DecodeConfig& config);

}  // namespace lfpo::diffusion
