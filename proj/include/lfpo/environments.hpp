// Synthetic verifiable-reward tasks. Each task checks a completion against
// a rule computable from the prompt and returns a scalar reward in [0, 1]:
// exact (all-or-nothing) or dense (per-position partial credit).

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lfpo/denoiser.hpp"
#include "lfpo/diffusion.hpp"
#include "lfpo/rng.hpp"

namespace lfpo::env {

using Tokens = denoiser::Tokens;

enum class TaskKind { Copy, Reverse, ModSum, Majority, ParenBalance };
enum class RewardMode { Exact, Dense };

std::string to_string(TaskKind kind);
TaskKind task_from_string(const std::string& name);

struct TaskSpec {
    TaskKind kind = TaskKind::Copy;
    std::size_t vocab_data = 0;  // data tokens are ids [0, vocab_data)
    std::size_t prompt_len = 0;
    std::size_t completion_len = 0;
    RewardMode mode = RewardMode::Exact;

    void validate() const;
};

struct RewardOutcome {
    double reward = 0.0;
    std::vector<bool> correct;  // per-position diagnostic
    bool malformed = false;     // wrong length or MASK present
};

// Uniform prompt over the data vocabulary; deterministic per rng stream.
Tokens sample_prompt(const TaskSpec& spec, Rng& rng);

// Score a completion. Malformed completions (wrong length, or containing a
// token outside [0, vocab) / the MASK id) score 0 with the malformed flag.
RewardOutcome reward(const TaskSpec& spec, const denoiser::Config& model,
                     const Tokens& prompt, const Tokens& completion);

// Greedy-decode n_prompts fresh prompts and average their Exact rewards.
double evaluate(const TaskSpec& spec, const denoiser::Config& model,
                const denoiser::ParamVector& params,
                const diffusion::DecodeConfig& decode, std::size_t n_prompts,
                Rng& rng);

}  // namespace lfpo::env
