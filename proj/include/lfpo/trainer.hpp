// Training orchestration: rollout generation from the reference policy,
// block-wise contrastive updates, EMA reference tracking, an AdamW
// optimizer, and a group-advantage likelihood policy-gradient baseline that
// shares the rollout / environment / optimizer machinery.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lfpo/denoiser.hpp"
#include "lfpo/diffusion.hpp"
#include "lfpo/environments.hpp"
#include "lfpo/objective.hpp"
#include "lfpo/scheduler.hpp"

namespace lfpo::train {

using denoiser::ParamVector;

enum class Algo { Lfpo, PgBaseline };

std::string to_string(Algo algo);
Algo algo_from_string(const std::string& name);

struct OptimizerConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
};

struct OptimizerState {
    std::vector<double> m;  // first moments
    std::vector<double> v;  // second moments
    std::uint64_t step = 0;

    explicit OptimizerState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

struct EmaState {
    ParamVector theta_old;
};

struct TrainConfig {
    env::TaskSpec task;
    env::RewardMode train_reward = env::RewardMode::Dense;
    denoiser::Config model;
    diffusion::DecodeConfig decode;   // eval-time decode settings
    double train_temperature = 1.0;   // rollout exploration temperature
    objective::LfpoConfig lfpo;
    std::size_t batch_prompts = 8;    // B
    std::size_t group_size = 8;       // N trajectories per prompt
    std::size_t strata = 4;           // K stratified timesteps
    double ema_decay = 0.95;
    std::size_t block_size = 16;
    sched::AccumMode accum_mode = sched::AccumMode::Accumulate;
    OptimizerConfig opt;
    std::size_t total_iterations = 0;
    std::size_t eval_every = 10;      // 0 disables periodic eval
    std::size_t eval_prompts = 64;
    std::size_t checkpoint_every = 0;  // 0 = final checkpoint only
    bool deterministic_timing = true;  // report 0.0 wall seconds

    void validate() const;
};

struct MetricsRow {
    std::size_t iteration = 0;
    double wall_seconds = 0.0;
    double mean_reward = 0.0;
    double loss = 0.0;
    double grad_norm = 0.0;
    std::optional<double> eval_exact_reward;
    std::optional<double> mean_decode_steps;
    std::string algorithm;
    std::uint64_t seed = 0;
};

using MetricsSink = std::function<void(const MetricsRow&)>;
using CheckpointSink = std::function<void(
    std::size_t iteration, const ParamVector&, const OptimizerState&)>;
// Called once per iteration; returning false stops training early.
using Observer = std::function<bool(const MetricsRow&)>;

struct TrainResult {
    ParamVector theta;
    ParamVector theta_old;
    OptimizerState opt_state;
    std::size_t iterations_run = 0;
    std::uint64_t trajectories = 0;
    bool diverged = false;
    std::string divergence_reason;
};

// One bias-corrected AdamW step; weight decay is decoupled from the
// adaptive update (theta -= lr * wd * theta, applied separately).
void adamw_step(ParamVector& theta, const std::vector<double>& grad,
                OptimizerState& state, const OptimizerConfig& opt);

// theta_old += (1 - alpha) * (theta - theta_old), coordinate-wise. The
// incremental form keeps each coordinate inside the closed interval
// [min(theta_old, theta), max(theta_old, theta)].
void ema_update(ParamVector& theta_old, const ParamVector& theta,
                double alpha);

// N trajectories per each of B fresh prompts, sampled at the rollout
// temperature from `params`, rewards attached.
std::vector<diffusion::Trajectory> rollout_phase(
    const TrainConfig& config, const ParamVector& params, std::uint64_t seed,
    std::size_t iteration);

struct UpdateStats {
    double loss = 0.0;
    double grad_norm = 0.0;
};

// Block-wise rectified update: re-noise each work item at its stratified
// timestep, evaluate theta and theta_old, backprop the contrastive
// sequence loss, combine per accum_mode, and apply the optimizer.
UpdateStats lfpo_update_phase(const TrainConfig& config, ParamVector& theta,
                              const ParamVector& theta_old,
                              const std::vector<diffusion::Trajectory>& batch,
                              OptimizerState& opt_state, std::uint64_t seed,
                              std::size_t iteration);

// Likelihood policy-gradient comparator: group-standardized advantages,
// one uniform timestep per trajectory, REINFORCE on masked-position
// log-likelihoods.
UpdateStats baseline_pg_update(const TrainConfig& config, ParamVector& theta,
                               const std::vector<diffusion::Trajectory>& batch,
                               OptimizerState& opt_state, std::uint64_t seed,
                               std::size_t iteration);

// Full training loop. Emits one MetricsRow per iteration (plus an
// iteration-0 row holding the initial evaluation when the run is
// non-empty); deterministic given (config, seed, algo).
TrainResult train(const TrainConfig& config, std::uint64_t seed, Algo algo,
                  const MetricsSink& metrics = {},
                  const CheckpointSink& checkpoints = {},
                  const Observer& observer = {});

}  // namespace lfpo::train
