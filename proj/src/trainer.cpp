#include "lfpo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lfpo/rng.hpp"
#include "lfpo/simplex.hpp"

namespace lfpo::train {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<Tokens> eval_prompts_for(const TrainConfig& config,
                                     std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream::kEvalPrompts));
    std::vector<Tokens> prompts;
    prompts.reserve(config.eval_prompts);
    for (std::size_t i = 0; i < config.eval_prompts; ++i) {
        prompts.push_back(env::sample_prompt(config.task, rng));
    }
    return prompts;
}

// Min-max rescale of rewards within each prompt group; degenerate groups
// map to the neutral value 0.5.
void rescale_groups(std::vector<diffusion::Trajectory>& batch,
                    std::size_t group) {
    for (std::size_t start = 0; start + group <= batch.size(); start += group) {
        double lo = batch[start].reward, hi = batch[start].reward;
        for (std::size_t j = 1; j < group; ++j) {
            lo = std::min(lo, batch[start + j].reward);
            hi = std::max(hi, batch[start + j].reward);
        }
        for (std::size_t j = 0; j < group; ++j) {
            batch[start + j].reward =
                hi > lo ? (batch[start + j].reward - lo) / (hi - lo) : 0.5;
        }
    }
}

std::vector<double> per_item_gradient(const TrainConfig& config,
                                      const ParamVector& theta,
                                      const ParamVector& theta_old,
                                      const diffusion::Trajectory& traj,
                                      const sched::WorkItem& item,
                                      double* loss_out) {
    Rng mask_rng(item.substream);
    auto [tokens, pattern] =
        diffusion::forward_mask(config.model, traj, item.timestep, mask_rng);
    const denoiser::LogitGrid theta_logits =
        denoiser::forward(config.model, theta, tokens);
    const denoiser::LogitGrid ref_logits =
        denoiser::forward(config.model, theta_old, tokens);
    const objective::SequenceLoss sl = objective::sequence_loss(
        traj, pattern, theta_logits, ref_logits, config.lfpo);
    *loss_out = sl.loss;

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < pattern.masked.size(); ++i) {
        if (pattern.masked[i]) active.push_back(traj.prompt.size() + i);
    }
    return denoiser::backward(config.model, theta, tokens, sl.upstream, active);
}

}  // namespace

std::string to_string(Algo algo) {
    return algo == Algo::Lfpo ? "lfpo" : "pg-baseline";
}

Algo algo_from_string(const std::string& name) {
    if (name == "lfpo") return Algo::Lfpo;
    if (name == "pg-baseline") return Algo::PgBaseline;
    throw std::invalid_argument("unknown algorithm: " + name);
}

void TrainConfig::validate() const {
    task.validate();
    model.validate();
    decode.validate();
    lfpo.validate();
    require(batch_prompts >= 1 && group_size >= 1 && strata >= 1,
            "B, N, K must all be >= 1");
    require(strata <= task.completion_len, "more strata than timesteps");
    require(opt.learning_rate > 0.0, "learning rate must be > 0");
    require(ema_decay >= 0.0 && ema_decay < 1.0, "ema decay outside [0, 1)");
    require(block_size >= 1, "block size must be >= 1");
    require(train_temperature >= 0.0, "rollout temperature must be >= 0");
    require(model.seq_len == task.prompt_len + task.completion_len,
            "model seq_len must equal prompt_len + completion_len");
    require(task.vocab_data < model.vocab - 1,
            "data vocab must leave room for the MASK id");
}

void adamw_step(ParamVector& theta, const std::vector<double>& grad,
                OptimizerState& state, const OptimizerConfig& opt) {
    require(theta.size() == grad.size() && theta.size() == state.m.size() &&
                theta.size() == state.v.size(),
            "optimizer shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (opt.weight_decay != 0.0) {
            theta[i] -= opt.learning_rate * opt.weight_decay * theta[i];
        }
        state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * grad[i];
        state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        theta[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
}

void ema_update(ParamVector& theta_old, const ParamVector& theta,
                double alpha) {
    require(theta_old.size() == theta.size(), "shape mismatch");
    require(alpha >= 0.0 && alpha < 1.0, "alpha outside [0, 1)");
    if (alpha == 0.0) {
        theta_old = theta;
        return;
    }
    const double w = 1.0 - alpha;
    for (std::size_t i = 0; i < theta_old.size(); ++i) {
        theta_old[i] += w * (theta[i] - theta_old[i]);
    }
}

std::vector<diffusion::Trajectory> rollout_phase(const TrainConfig& config,
                                                 const ParamVector& params,
                                                 std::uint64_t seed,
                                                 std::size_t iteration) {
    env::TaskSpec reward_spec = config.task;
    reward_spec.mode = config.train_reward;
    diffusion::DecodeConfig rollout_decode = config.decode;
    rollout_decode.temperature = config.train_temperature;

    std::vector<diffusion::Trajectory> batch;
    batch.reserve(config.batch_prompts * config.group_size);
    for (std::size_t b = 0; b < config.batch_prompts; ++b) {
        Rng prompt_rng(derive_seed(seed, stream::kPrompt, iteration, b));
        const Tokens prompt = env::sample_prompt(config.task, prompt_rng);
        for (std::size_t n = 0; n < config.group_size; ++n) {
            Rng decode_rng(derive_seed(seed, stream::kRollout, iteration,
                                       b * config.group_size + n));
            diffusion::Trajectory traj = diffusion::decode(
                config.model, params, prompt, config.task.completion_len,
                rollout_decode, decode_rng);
            traj.reward = env::reward(reward_spec, config.model, prompt,
                                      traj.completion)
                              .reward;
            batch.push_back(std::move(traj));
        }
    }
    return batch;
}

UpdateStats lfpo_update_phase(const TrainConfig& config, ParamVector& theta,
                              const ParamVector& theta_old,
                              const std::vector<diffusion::Trajectory>& batch,
                              OptimizerState& opt_state, std::uint64_t seed,
                              std::size_t iteration) {
    require(!batch.empty(), "empty batch");
    std::vector<diffusion::Trajectory> work_batch = batch;
    if (config.lfpo.group_rescale) {
        rescale_groups(work_batch, config.group_size);
    }

    Rng block_rng(derive_seed(seed, stream::kBlockShuffle, iteration));
    const std::vector<sched::Block> blocks =
        sched::build_blocks(work_batch.size(), config.task.completion_len,
                            config.strata, config.block_size, block_rng);
    const std::size_t num_items = work_batch.size() * config.strata;

    UpdateStats stats;
    if (config.accum_mode == sched::AccumMode::Accumulate) {
        auto grad_fn = [&](const sched::Block& block) {
            std::vector<double> block_grad(theta.size(), 0.0);
            for (const sched::WorkItem& item : block.items) {
                double item_loss = 0.0;
                const std::vector<double> g =
                    per_item_gradient(config, theta, theta_old,
                                      work_batch[item.trajectory], item,
                                      &item_loss);
                stats.loss += item_loss;
                for (std::size_t i = 0; i < block_grad.size(); ++i) {
                    block_grad[i] += g[i];
                }
            }
            return block_grad;
        };
        std::vector<double> total = sched::accumulate_gradients(blocks, grad_fn);
        const double scale = 1.0 / static_cast<double>(num_items);
        for (double& g : total) g *= scale;
        stats.grad_norm = l2_norm(total);
        adamw_step(theta, total, opt_state, config.opt);
    } else {
        double norm_sq = 0.0;
        for (const sched::Block& block : blocks) {
            std::vector<double> block_grad(theta.size(), 0.0);
            for (const sched::WorkItem& item : block.items) {
                double item_loss = 0.0;
                const std::vector<double> g =
                    per_item_gradient(config, theta, theta_old,
                                      work_batch[item.trajectory], item,
                                      &item_loss);
                stats.loss += item_loss;
                for (std::size_t i = 0; i < block_grad.size(); ++i) {
                    block_grad[i] += g[i];
                }
            }
            const double scale = 1.0 / static_cast<double>(block.items.size());
            for (double& g : block_grad) g *= scale;
            norm_sq += l2_norm(block_grad) * l2_norm(block_grad);
            adamw_step(theta, block_grad, opt_state, config.opt);
        }
        stats.grad_norm = std::sqrt(norm_sq);
    }
    stats.loss /= static_cast<double>(num_items);
    return stats;
}

UpdateStats baseline_pg_update(const TrainConfig& config, ParamVector& theta,
                               const std::vector<diffusion::Trajectory>& batch,
                               OptimizerState& opt_state, std::uint64_t seed,
                               std::size_t iteration) {
    require(!batch.empty(), "empty batch");
    require(config.group_size >= 2, "baseline needs group size >= 2");
    const std::size_t group = config.group_size;

    // Group-standardized advantages (the critic-free convention).
    std::vector<double> advantage(batch.size(), 0.0);
    for (std::size_t start = 0; start + group <= batch.size(); start += group) {
        double mean = 0.0;
        for (std::size_t j = 0; j < group; ++j) mean += batch[start + j].reward;
        mean /= static_cast<double>(group);
        double var = 0.0;
        for (std::size_t j = 0; j < group; ++j) {
            const double d = batch[start + j].reward - mean;
            var += d * d;
        }
        const double std_dev = std::sqrt(var / static_cast<double>(group));
        for (std::size_t j = 0; j < group; ++j) {
            advantage[start + j] =
                (batch[start + j].reward - mean) / (std_dev + 1e-6);
        }
    }

    UpdateStats stats;
    std::vector<double> total(theta.size(), 0.0);
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const diffusion::Trajectory& traj = batch[j];
        Rng t_rng(derive_seed(seed, stream::kBaselineTimestep, iteration, j));
        const std::size_t t =
            1 + static_cast<std::size_t>(
                    t_rng.uniform_below(config.task.completion_len));
        Rng mask_rng(derive_seed(seed, stream::kMask, iteration, j));
        auto [tokens, pattern] =
            diffusion::forward_mask(config.model, traj, t, mask_rng);
        const denoiser::LogitGrid logits =
            denoiser::forward(config.model, theta, tokens);

        const double a = advantage[j];
        const std::size_t masked = pattern.count();
        const double scale = a / static_cast<double>(masked);
        denoiser::LogitGrid upstream(logits.seq_len, logits.vocab);
        std::vector<std::size_t> active;
        double traj_loss = 0.0;
        for (std::size_t i = 0; i < pattern.masked.size(); ++i) {
            if (!pattern.masked[i]) continue;
            const std::size_t row = traj.prompt.size() + i;
            active.push_back(row);
            simplex::Vec z(logits.row(row), logits.row(row) + logits.vocab);
            const simplex::Vec logp = simplex::log_softmax(simplex::LogitRow{z});
            const simplex::Dist p = simplex::softmax(simplex::LogitRow{z});
            const auto tok = static_cast<std::size_t>(traj.completion[i]);
            traj_loss -= logp[tok] / static_cast<double>(masked);
            double* urow = upstream.row(row);
            for (std::size_t v = 0; v < logits.vocab; ++v) {
                urow[v] = scale * p.probs[v];
            }
            urow[tok] -= scale;
        }
        stats.loss += a * traj_loss;
        const std::vector<double> g =
            denoiser::backward(config.model, theta, tokens, upstream, active);
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += g[i];
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (double& g : total) g *= scale;
    stats.loss *= scale;
    stats.grad_norm = l2_norm(total);
    adamw_step(theta, total, opt_state, config.opt);
    return stats;
}

TrainResult train(const TrainConfig& config, std::uint64_t seed, Algo algo,
                  const MetricsSink& metrics, const CheckpointSink& checkpoints,
                  const Observer& observer) {
    config.validate();
    TrainResult result;
    result.theta = denoiser::init_params(config.model, seed);
    result.theta_old = result.theta;
    result.opt_state = OptimizerState(result.theta.size());

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        if (config.deterministic_timing) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
            .count();
    };
    auto run_eval = [&](MetricsRow& row) {
        if (config.eval_prompts == 0) return;
        Rng eval_rng(derive_seed(seed, stream::kEvalPrompts));
        row.eval_exact_reward =
            env::evaluate(config.task, config.model, result.theta,
                          config.decode, config.eval_prompts, eval_rng);
        row.mean_decode_steps = diffusion::mean_decode_steps(
            config.model, result.theta, eval_prompts_for(config, seed),
            config.task.completion_len, config.decode);
    };

    if (config.total_iterations == 0) return result;

    // Iteration 0: the untrained policy's evaluation, so metric streams
    // start from a common reference point.
    {
        MetricsRow row;
        row.iteration = 0;
        row.algorithm = to_string(algo);
        row.seed = seed;
        run_eval(row);
        row.wall_seconds = elapsed();
        if (metrics) metrics(row);
        if (observer && !observer(row)) return result;
    }

    for (std::size_t iter = 1; iter <= config.total_iterations; ++iter) {
        const ParamVector& rollout_params =
            algo == Algo::Lfpo ? result.theta_old : result.theta;
        const std::vector<diffusion::Trajectory> batch =
            rollout_phase(config, rollout_params, seed, iter);
        result.trajectories += batch.size();

        double mean_reward = 0.0;
        for (const auto& traj : batch) mean_reward += traj.reward;
        mean_reward /= static_cast<double>(batch.size());

        UpdateStats stats;
        if (algo == Algo::Lfpo) {
            stats = lfpo_update_phase(config, result.theta, result.theta_old,
                                      batch, result.opt_state, seed, iter);
            ema_update(result.theta_old, result.theta, config.ema_decay);
        } else {
            stats = baseline_pg_update(config, result.theta, batch,
                                       result.opt_state, seed, iter);
        }
        result.iterations_run = iter;

        if (!std::isfinite(stats.loss) || !std::isfinite(stats.grad_norm)) {
            result.diverged = true;
            result.divergence_reason =
                "non-finite loss or gradient at iteration " +
                std::to_string(iter);
            return result;
        }

        MetricsRow row;
        row.iteration = iter;
        row.mean_reward = mean_reward;
        row.loss = stats.loss;
        row.grad_norm = stats.grad_norm;
        row.algorithm = to_string(algo);
        row.seed = seed;
        const bool eval_now =
            (config.eval_every > 0 && iter % config.eval_every == 0) ||
            iter == config.total_iterations;
        if (eval_now) run_eval(row);
        row.wall_seconds = elapsed();
        if (metrics) metrics(row);

        if (checkpoints && config.checkpoint_every > 0 &&
            iter % config.checkpoint_every == 0) {
            checkpoints(iter, result.theta, result.opt_state);
        }
        if (observer && !observer(row)) break;
    }
    return result;
}

}  // namespace lfpo::train
