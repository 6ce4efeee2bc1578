#include "lfpo/environments.hpp"

#include <algorithm>
#include <stdexcept>

namespace lfpo::env {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Expected completion for the rule-based tasks (everything but ParenBalance).
Tokens target_completion(const TaskSpec& spec, const Tokens& prompt) {
    Tokens target(spec.completion_len, 0);
    switch (spec.kind) {
        case TaskKind::Copy:
            target = prompt;
            break;
        case TaskKind::Reverse:
            target.assign(prompt.rbegin(), prompt.rend());
            break;
        case TaskKind::Majority: {
            std::vector<std::size_t> counts(spec.vocab_data, 0);
            for (int t : prompt) counts[static_cast<std::size_t>(t)]++;
            int best = 0;
            for (std::size_t v = 1; v < counts.size(); ++v) {
                if (counts[v] > counts[static_cast<std::size_t>(best)]) {
                    best = static_cast<int>(v);  // ties keep the smaller id
                }
            }
            std::fill(target.begin(), target.end(), best);
            break;
        }
        case TaskKind::ModSum: {
            std::size_t sum = 0;
            for (int t : prompt) sum += static_cast<std::size_t>(t);
            target[0] = static_cast<int>(sum % spec.vocab_data);
            break;  // remaining positions stay token 0
        }
        case TaskKind::ParenBalance:
            break;  // handled separately
    }
    return target;
}

// Length of the longest prefix that uses only ids {0, 1} and keeps the
// running bracket balance non-negative (i.e. is extendable to a balanced
// string).
std::size_t balanced_prefix_len(const Tokens& completion) {
    long balance = 0;
    std::size_t len = 0;
    for (int t : completion) {
        if (t == 0) {
            ++balance;
        } else if (t == 1) {
            --balance;
            if (balance < 0) break;
        } else {
            break;
        }
        ++len;
    }
    return len;
}

bool is_balanced(const Tokens& completion) {
    return balanced_prefix_len(completion) == completion.size() &&
           [&] {
               long balance = 0;
               for (int t : completion) balance += t == 0 ? 1 : -1;
               return balance == 0;
           }();
}

}  // namespace

std::string to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::Copy: return "copy";
        case TaskKind::Reverse: return "reverse";
        case TaskKind::ModSum: return "modsum";
        case TaskKind::Majority: return "majority";
        case TaskKind::ParenBalance: return "paren-balance";
    }
    return "copy";
}

TaskKind task_from_string(const std::string& name) {
    if (name == "copy") return TaskKind::Copy;
    if (name == "reverse") return TaskKind::Reverse;
    if (name == "modsum") return TaskKind::ModSum;
    if (name == "majority") return TaskKind::Majority;
    if (name == "paren-balance") return TaskKind::ParenBalance;
    throw std::invalid_argument("unknown task kind: " + name);
}

void TaskSpec::validate() const {
    require(vocab_data >= 2, "data vocab must be >= 2");
    require(prompt_len >= 1, "prompt length must be >= 1");
    require(completion_len >= 1, "completion length must be >= 1");
    if (kind == TaskKind::Copy || kind == TaskKind::Reverse) {
        require(completion_len == prompt_len,
                "copy/reverse need completion_len == prompt_len");
    }
    if (kind == TaskKind::ParenBalance) {
        require(completion_len % 2 == 0, "paren-balance needs even length");
    }
}

Tokens sample_prompt(const TaskSpec& spec, Rng& rng) {
    spec.validate();
    Tokens prompt(spec.prompt_len);
    for (int& t : prompt) {
        t = static_cast<int>(rng.uniform_below(spec.vocab_data));
    }
    return prompt;
}

RewardOutcome reward(const TaskSpec& spec, const denoiser::Config& model,
                     const Tokens& prompt, const Tokens& completion) {
    spec.validate();
    RewardOutcome out;
    out.correct.assign(spec.completion_len, false);
    if (completion.size() != spec.completion_len) {
        out.malformed = true;
        return out;
    }
    for (int t : completion) {
        if (t < 0 || t >= static_cast<int>(model.vocab) || t == model.mask_id()) {
            out.malformed = true;
            return out;
        }
    }

    if (spec.kind == TaskKind::ParenBalance) {
        const std::size_t prefix = balanced_prefix_len(completion);
        for (std::size_t i = 0; i < prefix; ++i) out.correct[i] = true;
        if (spec.mode == RewardMode::Exact) {
            out.reward = is_balanced(completion) ? 1.0 : 0.0;
        } else {
            out.reward = static_cast<double>(prefix) /
                         static_cast<double>(spec.completion_len);
        }
        return out;
    }

    const Tokens target = target_completion(spec, prompt);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < spec.completion_len; ++i) {
        if (completion[i] == target[i]) {
            out.correct[i] = true;
            ++hits;
        }
    }
    if (spec.mode == RewardMode::Exact) {
        out.reward = hits == spec.completion_len ? 1.0 : 0.0;
    } else {
        out.reward =
            static_cast<double>(hits) / static_cast<double>(spec.completion_len);
    }
    return out;
}

double evaluate(const TaskSpec& spec, const denoiser::Config& model,
                const denoiser::ParamVector& params,
                const diffusion::DecodeConfig& decode, std::size_t n_prompts,
                Rng& rng) {
    require(n_prompts >= 1, "need at least one prompt");
    TaskSpec exact_spec = spec;
    exact_spec.mode = RewardMode::Exact;
    diffusion::DecodeConfig greedy = decode;
    greedy.temperature = 0.0;

    double total = 0.0;
    for (std::size_t n = 0; n < n_prompts; ++n) {
        const Tokens prompt = sample_prompt(spec, rng);
        Rng decode_rng(rng.next_u64());
        const diffusion::Trajectory traj = diffusion::decode(
            model, params, prompt, spec.completion_len, greedy, decode_rng);
        total += reward(exact_spec, model, prompt, traj.completion).reward;
    }
    return total / static_cast<double>(n_prompts);
}

}  // namespace lfpo::env
