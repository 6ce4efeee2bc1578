// Command implementations behind the `lfpo` binary. Each returns the
// process exit code: 0 success, 1 runtime failure, 2 usage/config error,
// 3 corrupt artifact.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lfpo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCorrupt = 3;

// Runs training and writes out_dir/metrics.jsonl plus checkpoints. The
// LFPO_OUT_DIR environment variable, when set, overrides out_dir.
int run_train(const std::string& config_path, std::uint64_t seed,
              const std::string& out_dir, const std::string& algo = "lfpo");

// Runs the verification suite and prints its pass/fail table.
int run_verify(std::uint64_t seed, bool inject_fault);

// Greedy evaluation of a checkpoint; prints a JSON summary to stdout.
// task_override, when non-empty, replaces the task kind stored in the
// checkpoint's config.
int run_eval(const std::string& checkpoint_path,
             const std::string& task_override, std::size_t n_prompts,
             std::uint64_t seed);

// Runs the requested algorithms with shared per-seed rollout seeds, merges
// all metric rows into out_dir/compare.jsonl, and reports the first
// iteration at which each run reaches target_reward.
int run_compare(const std::string& config_path,
                const std::vector<std::string>& algos,
                const std::vector<std::uint64_t>& seeds,
                const std::string& out_dir, double target_reward);

}  // namespace lfpo::cli
