#include "lfpo/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lfpo/checkpoint.hpp"
#include "lfpo/config.hpp"
#include "lfpo/metrics.hpp"
#include "lfpo/verify.hpp"

namespace lfpo::cli {

namespace {

namespace fs = std::filesystem;

std::string resolve_out_dir(const std::string& out_dir) {
    if (const char* env = std::getenv("LFPO_OUT_DIR")) {
        if (*env != '\0') return env;
    }
    return out_dir;
}

std::string checkpoint_name(std::size_t iteration) {
    std::ostringstream name;
    name << "checkpoint_" << std::setw(6) << std::setfill('0') << iteration
         << ".bin";
    return name.str();
}

}  // namespace

int run_train(const std::string& config_path, std::uint64_t seed,
              const std::string& out_dir, const std::string& algo_name) {
    train::TrainConfig config;
    train::Algo algo;
    try {
        config = config::load_file(config_path);
        algo = train::algo_from_string(algo_name);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }

    const fs::path dir = resolve_out_dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    const std::string config_text = config::serialize(config);

    try {
        metrics::JsonlWriter writer((dir / "metrics.jsonl").string());
        auto sink = [&](const train::MetricsRow& row) { writer.write(row); };
        auto checkpoints = [&](std::size_t iteration,
                               const denoiser::ParamVector& params,
                               const train::OptimizerState& opt) {
            ckpt::write_file((dir / checkpoint_name(iteration)).string(),
                             ckpt::Checkpoint{config_text, params, opt});
        };
        const train::TrainResult result =
            train::train(config, seed, algo, sink, checkpoints);
        writer.flush();
        ckpt::write_file(
            (dir / (result.diverged ? "checkpoint_diverged.bin"
                                    : "checkpoint_final.bin"))
                .string(),
            ckpt::Checkpoint{config_text, result.theta, result.opt_state});
        if (result.diverged) {
            std::cerr << "training aborted: " << result.divergence_reason
                      << " (diagnostic checkpoint written)\n";
            return kExitRuntime;
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int run_verify(std::uint64_t seed, bool inject_fault) {
    verify::Options options;
    options.seed = seed;
    options.corrupt_ce_gradient = inject_fault;
    const std::vector<verify::CheckResult> results = verify::run_all(options);
    verify::print_table(std::cout, results);
    if (verify::all_pass(results)) {
        std::cout << "all checks passed\n";
        return kExitOk;
    }
    std::cout << "failed checks:";
    for (const auto& r : results) {
        if (!r.pass) std::cout << " [" << r.name << "]";
    }
    std::cout << "\n";
    return kExitRuntime;
}

int run_eval(const std::string& checkpoint_path,
             const std::string& task_override, std::size_t n_prompts,
             std::uint64_t seed) {
    if (n_prompts == 0) {
        std::cerr << "usage error: n_prompts must be >= 1\n";
        return kExitUsage;
    }
    ckpt::Checkpoint checkpoint;
    try {
        checkpoint = ckpt::read_file(checkpoint_path);
    } catch (const ckpt::CorruptCheckpoint& e) {
        std::cerr << "corrupt checkpoint: " << e.what() << "\n";
        return kExitCorrupt;
    } catch (const std::exception& e) {
        std::cerr << "cannot read checkpoint: " << e.what() << "\n";
        return kExitCorrupt;
    }

    train::TrainConfig config;
    try {
        config = config::parse(checkpoint.config_text);
        if (!task_override.empty()) {
            config.task.kind = env::task_from_string(task_override);
            config.task.validate();
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (checkpoint.params.size() != config.model.param_count()) {
        std::cerr << "corrupt checkpoint: parameter count "
                  << checkpoint.params.size() << " does not match config ("
                  << config.model.param_count() << ")\n";
        return kExitCorrupt;
    }

    try {
        Rng eval_rng(derive_seed(seed, stream::kEvalPrompts));
        const double mean_reward =
            env::evaluate(config.task, config.model, checkpoint.params,
                          config.decode, n_prompts, eval_rng);
        Rng prompt_rng(derive_seed(seed, stream::kEvalPrompts));
        std::vector<denoiser::Tokens> prompts;
        prompts.reserve(n_prompts);
        for (std::size_t i = 0; i < n_prompts; ++i) {
            prompts.push_back(env::sample_prompt(config.task, prompt_rng));
            prompt_rng.next_u64();  // mirror evaluate's per-prompt decode seed
        }
        const double steps = diffusion::mean_decode_steps(
            config.model, checkpoint.params, prompts,
            config.task.completion_len, config.decode);

        nlohmann::json summary;
        summary["task"] = env::to_string(config.task.kind);
        summary["n_prompts"] = n_prompts;
        summary["seed"] = seed;
        summary["mean_exact_reward"] = mean_reward;
        summary["mean_decode_steps"] = steps;
        std::cout << summary.dump() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int run_compare(const std::string& config_path,
                const std::vector<std::string>& algos,
                const std::vector<std::uint64_t>& seeds,
                const std::string& out_dir, double target_reward) {
    if (seeds.empty() || algos.empty()) {
        std::cerr << "usage error: need at least one seed and one algorithm\n";
        return kExitUsage;
    }
    train::TrainConfig config;
    std::vector<train::Algo> parsed_algos;
    try {
        config = config::load_file(config_path);
        for (const std::string& name : algos) {
            parsed_algos.push_back(train::algo_from_string(name));
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }

    const fs::path dir = resolve_out_dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);

    try {
        metrics::JsonlWriter writer((dir / "compare.jsonl").string());
        const std::size_t per_iter = config.batch_prompts * config.group_size;
        for (std::uint64_t seed : seeds) {
            for (std::size_t a = 0; a < parsed_algos.size(); ++a) {
                std::optional<std::size_t> reached_iter;
                auto sink = [&](const train::MetricsRow& row) {
                    writer.write(row);
                    if (!reached_iter && row.eval_exact_reward &&
                        *row.eval_exact_reward >= target_reward) {
                        reached_iter = row.iteration;
                    }
                };
                const train::TrainResult result =
                    train::train(config, seed, parsed_algos[a], sink);
                if (result.diverged) {
                    std::cerr << "run " << algos[a] << " seed " << seed
                              << " diverged: " << result.divergence_reason
                              << "\n";
                    return kExitRuntime;
                }
                std::cout << "algorithm=" << algos[a] << " seed=" << seed
                          << " target_reward=" << target_reward;
                if (reached_iter) {
                    std::cout << " reached_at_iteration=" << *reached_iter
                              << " trajectories=" << *reached_iter * per_iter;
                } else {
                    std::cout << " reached_at_iteration=never";
                }
                std::cout << "\n";
            }
        }
        writer.flush();
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace lfpo::cli
