#include "lfpo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lfpo::config {

namespace {

using nlohmann::json;

void check_keys(const json& section, const std::string& name,
                const std::set<std::string>& allowed) {
    if (!section.is_object()) {
        throw ConfigError("section \"" + name + "\" must be an object");
    }
    for (const auto& [key, value] : section.items()) {
        (void)value;
        if (!allowed.count(key)) {
            throw ConfigError("unknown key \"" + name + "." + key + "\"");
        }
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("bad value for key \"") + key + "\"");
        }
    }
}

env::RewardMode reward_mode_from(const std::string& name) {
    if (name == "exact") return env::RewardMode::Exact;
    if (name == "dense") return env::RewardMode::Dense;
    throw ConfigError("unknown reward mode: " + name);
}

std::string reward_mode_to(env::RewardMode mode) {
    return mode == env::RewardMode::Exact ? "exact" : "dense";
}

}  // namespace

train::TrainConfig parse(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, "config", {"task", "model", "decode", "lfpo", "trainer"});

    train::TrainConfig c;

    if (root.contains("task")) {
        const json& t = root.at("task");
        check_keys(t, "task",
                   {"kind", "vocab_data", "prompt_len", "completion_len",
                    "train_reward"});
        std::string kind = env::to_string(c.task.kind);
        get_if(t, "kind", kind);
        try {
            c.task.kind = env::task_from_string(kind);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        get_if(t, "vocab_data", c.task.vocab_data);
        get_if(t, "prompt_len", c.task.prompt_len);
        get_if(t, "completion_len", c.task.completion_len);
        std::string reward = reward_mode_to(c.train_reward);
        get_if(t, "train_reward", reward);
        c.train_reward = reward_mode_from(reward);
    }

    if (root.contains("model")) {
        const json& m = root.at("model");
        check_keys(m, "model", {"embed_dim", "hidden_dim", "seed"});
        get_if(m, "embed_dim", c.model.embed_dim);
        get_if(m, "hidden_dim", c.model.hidden_dim);
        get_if(m, "seed", c.model.seed);
    }

    if (root.contains("decode")) {
        const json& d = root.at("decode");
        check_keys(d, "decode",
                   {"confidence_threshold", "max_unmask_per_step",
                    "train_temperature"});
        get_if(d, "confidence_threshold", c.decode.confidence_threshold);
        get_if(d, "max_unmask_per_step", c.decode.max_unmask_per_step);
        get_if(d, "train_temperature", c.train_temperature);
    }

    if (root.contains("lfpo")) {
        const json& l = root.at("lfpo");
        check_keys(l, "lfpo",
                   {"beta", "mode", "detach_targets", "lambda_anchor",
                    "group_rescale"});
        get_if(l, "beta", c.lfpo.beta);
        std::string mode = objective::to_string(c.lfpo.mode);
        get_if(l, "mode", mode);
        try {
            c.lfpo.mode = objective::mode_from_string(mode);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        get_if(l, "detach_targets", c.lfpo.detach_targets);
        get_if(l, "lambda_anchor", c.lfpo.lambda_anchor);
        get_if(l, "group_rescale", c.lfpo.group_rescale);
    }

    if (root.contains("trainer")) {
        const json& t = root.at("trainer");
        check_keys(t, "trainer",
                   {"batch_prompts", "group_size", "strata", "learning_rate",
                    "ema_decay", "block_size", "accum_mode", "beta1", "beta2",
                    "epsilon", "weight_decay", "total_iterations", "eval_every",
                    "eval_prompts", "checkpoint_every", "deterministic_timing"});
        get_if(t, "batch_prompts", c.batch_prompts);
        get_if(t, "group_size", c.group_size);
        get_if(t, "strata", c.strata);
        get_if(t, "learning_rate", c.opt.learning_rate);
        get_if(t, "ema_decay", c.ema_decay);
        get_if(t, "block_size", c.block_size);
        std::string accum = c.accum_mode == sched::AccumMode::Accumulate
                                ? "accumulate"
                                : "step-per-block";
        get_if(t, "accum_mode", accum);
        if (accum == "accumulate") {
            c.accum_mode = sched::AccumMode::Accumulate;
        } else if (accum == "step-per-block") {
            c.accum_mode = sched::AccumMode::StepPerBlock;
        } else {
            throw ConfigError("unknown accum_mode: " + accum);
        }
        get_if(t, "beta1", c.opt.beta1);
        get_if(t, "beta2", c.opt.beta2);
        get_if(t, "epsilon", c.opt.epsilon);
        get_if(t, "weight_decay", c.opt.weight_decay);
        get_if(t, "total_iterations", c.total_iterations);
        get_if(t, "eval_every", c.eval_every);
        get_if(t, "eval_prompts", c.eval_prompts);
        get_if(t, "checkpoint_every", c.checkpoint_every);
        get_if(t, "deterministic_timing", c.deterministic_timing);
    }

    // Derived model dimensions.
    c.model.vocab = c.task.vocab_data + 2;
    c.model.seq_len = c.task.prompt_len + c.task.completion_len;
    if (c.model.embed_dim == 0) c.model.embed_dim = 32;
    if (c.model.hidden_dim == 0) c.model.hidden_dim = 2 * c.model.embed_dim;

    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return c;
}

train::TrainConfig load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

std::string serialize(const train::TrainConfig& c) {
    json root;
    root["task"] = {{"kind", env::to_string(c.task.kind)},
                    {"vocab_data", c.task.vocab_data},
                    {"prompt_len", c.task.prompt_len},
                    {"completion_len", c.task.completion_len},
                    {"train_reward", reward_mode_to(c.train_reward)}};
    root["model"] = {{"embed_dim", c.model.embed_dim},
                     {"hidden_dim", c.model.hidden_dim},
                     {"seed", c.model.seed}};
    root["decode"] = {{"confidence_threshold", c.decode.confidence_threshold},
                      {"max_unmask_per_step", c.decode.max_unmask_per_step},
                      {"train_temperature", c.train_temperature}};
    root["lfpo"] = {{"beta", c.lfpo.beta},
                    {"mode", objective::to_string(c.lfpo.mode)},
                    {"detach_targets", c.lfpo.detach_targets},
                    {"lambda_anchor", c.lfpo.lambda_anchor},
                    {"group_rescale", c.lfpo.group_rescale}};
    root["trainer"] = {
        {"batch_prompts", c.batch_prompts},
        {"group_size", c.group_size},
        {"strata", c.strata},
        {"learning_rate", c.opt.learning_rate},
        {"ema_decay", c.ema_decay},
        {"block_size", c.block_size},
        {"accum_mode", c.accum_mode == sched::AccumMode::Accumulate
                           ? "accumulate"
                           : "step-per-block"},
        {"beta1", c.opt.beta1},
        {"beta2", c.opt.beta2},
        {"epsilon", c.opt.epsilon},
        {"weight_decay", c.opt.weight_decay},
        {"total_iterations", c.total_iterations},
        {"eval_every", c.eval_every},
        {"eval_prompts", c.eval_prompts},
        {"checkpoint_every", c.checkpoint_every},
        {"deterministic_timing", c.deterministic_timing}};
    return root.dump(2);
}

}  // namespace lfpo::config
