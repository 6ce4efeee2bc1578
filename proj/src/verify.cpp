#include "lfpo/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "lfpo/denoiser.hpp"
#include "lfpo/diffusion.hpp"
#include "lfpo/objective.hpp"
#include "lfpo/rng.hpp"
#include "lfpo/scheduler.hpp"
#include "lfpo/simplex.hpp"
#include "lfpo/stats.hpp"
#include "lfpo/trainer.hpp"

namespace lfpo::verify {

namespace {

using simplex::Dist;
using simplex::LogitRow;
using simplex::OneHot;
using simplex::Vec;

Vec random_logits(Rng& rng, std::size_t v, double scale = 4.0) {
    Vec z(v);
    for (double& x : z) x = rng.uniform_real(-scale, scale);
    return z;
}

Dist random_dist(Rng& rng, std::size_t v) {
    Vec p(v);
    double sum = 0.0;
    for (double& x : p) {
        x = -std::log(1.0 - rng.uniform01());  // Exp(1) draws
        sum += x;
    }
    for (double& x : p) x /= sum;
    return Dist{std::move(p)};
}

// Theorem check: the cross-entropy logit gradient equals the residual
// softmax(z) - y, and equals the velocity difference for any shared base.
CheckResult check_gradient_identity(Rng& rng, bool soft_targets,
                                    bool corrupt) {
    CheckResult r;
    r.name = soft_targets ? "ce-gradient soft-target identity"
                          : "ce-gradient residual identity";
    r.bound = 1e-12;
    r.detail = "max abs deviation";
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(63);  // V in {2..64}
        const Vec z = random_logits(rng, v);
        const Dist p = simplex::softmax(LogitRow{z});
        Dist target;
        if (soft_targets) {
            target = random_dist(rng, v);
        } else {
            target = OneHot{rng.uniform_below(v), v}.to_dist();
        }
        Vec grad = simplex::ce_gradient(p, target);
        if (corrupt) {
            for (double& g : grad) g = -g;
        }
        const Dist base = random_dist(rng, v);
        const simplex::Velocity vel_model = simplex::model_velocity(p, base);
        for (std::size_t i = 0; i < v; ++i) {
            worst = std::max(worst,
                             std::abs(grad[i] - (p.probs[i] - target.probs[i])));
            // velocity residual with the shared base point cancelled
            const double vel_target = target.probs[i] - base.probs[i];
            worst = std::max(
                worst, std::abs(grad[i] - (vel_model.components[i] - vel_target)));
        }
    }
    r.observed = worst;
    r.pass = worst <= r.bound;
    return r;
}

CheckResult check_beta_one_identity(Rng& rng) {
    CheckResult r;
    r.name = "beta=1 positive-target identity";
    r.bound = 1e-12;
    r.detail = "max abs deviation";
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(31);
        const Vec zt = random_logits(rng, v);
        const Vec zr = random_logits(rng, v);
        const auto targets = objective::implicit_targets(zt, zr, 1.0);
        const Dist p = simplex::softmax(LogitRow{zt});
        for (std::size_t i = 0; i < v; ++i) {
            worst = std::max(worst,
                             std::abs(targets.pi_plus.probs[i] - p.probs[i]));
        }
    }
    r.observed = worst;
    r.pass = worst <= r.bound;
    return r;
}

CheckResult check_geometric_mean(Rng& rng) {
    CheckResult r;
    r.name = "geometric-mean identity";
    r.bound = 1e-12;
    r.detail = "max abs deviation";
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(31);
        const Vec zt = random_logits(rng, v);
        const Vec zr = random_logits(rng, v);
        const double beta = 0.25 + 4.0 * rng.uniform01();
        const auto targets = objective::implicit_targets(zt, zr, beta);
        Vec mid(v);
        for (std::size_t i = 0; i < v; ++i) {
            mid[i] = 0.5 * (targets.s_plus[i] + targets.s_minus[i]);
        }
        const Dist recon = simplex::softmax(LogitRow{mid});
        const Dist ref = simplex::softmax(LogitRow{zr});
        for (std::size_t i = 0; i < v; ++i) {
            worst = std::max(worst, std::abs(recon.probs[i] - ref.probs[i]));
        }
    }
    r.observed = worst;
    r.pass = worst <= r.bound;
    return r;
}

CheckResult check_cold_start(Rng& rng) {
    CheckResult r;
    r.name = "detached cold-start gradient is zero";
    r.bound = 1e-15;
    r.detail = "max abs gradient";
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(31);
        const Vec z = random_logits(rng, v);
        const double reward = rng.uniform01();
        const Vec grad = objective::lfpo_logit_gradient(
            z, z, 2.0, reward, objective::Mode::All, /*detach=*/true);
        for (double g : grad) worst = std::max(worst, std::abs(g));
    }
    r.observed = worst;
    r.pass = worst <= r.bound;
    return r;
}

double lfpo_loss_frozen_targets(const Vec& z, const objective::ImplicitTargets& t,
                                double reward, objective::Mode mode) {
    const Vec lt = simplex::log_softmax(LogitRow{z});
    double loss = 0.0;
    if (mode != objective::Mode::NegOnly) {
        double ce = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            ce -= t.pi_plus.probs[i] * lt[i];
        }
        loss += reward * ce;
    }
    if (mode != objective::Mode::PosOnly) {
        double ce = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            ce -= t.pi_minus.probs[i] * lt[i];
        }
        loss += (1.0 - reward) * ce;
    }
    return loss;
}

CheckResult check_lfpo_fd(Rng& rng) {
    CheckResult r;
    r.name = "lfpo gradient vs finite differences";
    r.bound = 1e-6;
    r.detail = "max rel error over modes x detach";
    const double h = 1e-6;
    double worst = 0.0;
    const objective::Mode modes[] = {objective::Mode::All,
                                     objective::Mode::PosOnly,
                                     objective::Mode::NegOnly};
    for (objective::Mode mode : modes) {
        for (int detach = 0; detach <= 1; ++detach) {
            for (int trial = 0; trial < 200; ++trial) {
                const std::size_t v = 2 + rng.uniform_below(31);
                const Vec zt = random_logits(rng, v, 2.0);
                const Vec zr = random_logits(rng, v, 2.0);
                const double beta = 0.5 + 3.0 * rng.uniform01();
                const double reward = rng.uniform01();
                const Vec grad = objective::lfpo_logit_gradient(
                    zt, zr, beta, reward, mode, detach != 0);
                const auto frozen =
                    objective::implicit_targets(zt, zr, beta);
                for (std::size_t i = 0; i < v; ++i) {
                    Vec zp = zt, zm = zt;
                    zp[i] += h;
                    zm[i] -= h;
                    double fp, fm;
                    if (detach != 0) {
                        fp = lfpo_loss_frozen_targets(zp, frozen, reward, mode);
                        fm = lfpo_loss_frozen_targets(zm, frozen, reward, mode);
                    } else {
                        fp = objective::lfpo_position_loss(zp, zr, beta, reward,
                                                           mode);
                        fm = objective::lfpo_position_loss(zm, zr, beta, reward,
                                                           mode);
                    }
                    const double fd = (fp - fm) / (2.0 * h);
                    const double an = grad[i];
                    const double denom =
                        std::max({std::abs(an), std::abs(fd), 1e-6});
                    worst = std::max(worst, std::abs(fd - an) / denom);
                }
            }
        }
    }
    r.observed = worst;
    r.pass = worst <= r.bound;
    return r;
}

CheckResult check_denoiser_fd(Rng& rng) {
    CheckResult r;
    r.name = "denoiser backward vs finite differences";
    r.bound = 1e-4;
    r.detail = "max rel error";
    denoiser::Config config;
    config.vocab = 9;
    config.seq_len = 6;
    config.embed_dim = 6;
    config.hidden_dim = 10;
    const denoiser::FdReport report =
        denoiser::fd_check(config, rng.next_u64(), 50);
    r.observed = std::max(report.max_rel_error, report.max_abs_error * 1e4);
    r.pass = report.max_rel_error <= 1e-4 && report.max_abs_error <= 1e-8;
    return r;
}

CheckResult check_block_equivalence(Rng& rng) {
    CheckResult r;
    r.name = "block accumulation equivalence";
    r.bound = 1e-9;
    r.detail = "max rel gradient difference";

    train::TrainConfig cfg;
    cfg.task.kind = env::TaskKind::Copy;
    cfg.task.vocab_data = 6;
    cfg.task.prompt_len = 4;
    cfg.task.completion_len = 4;
    cfg.model.vocab = 8;
    cfg.model.seq_len = 8;
    cfg.model.embed_dim = 6;
    cfg.model.hidden_dim = 8;
    cfg.batch_prompts = 3;
    cfg.group_size = 2;
    cfg.strata = 2;
    cfg.lfpo.lambda_anchor = 1.0;
    cfg.total_iterations = 1;

    const std::uint64_t seed = rng.next_u64();
    const denoiser::ParamVector theta = denoiser::init_params(cfg.model, seed);
    denoiser::ParamVector theta_old =
        denoiser::init_params(cfg.model, seed + 1);
    const std::vector<diffusion::Trajectory> batch =
        train::rollout_phase(cfg, theta_old, seed, 1);

    auto total_gradient = [&](std::size_t block_size) {
        Rng block_rng(derive_seed(seed, stream::kBlockShuffle, 1));
        const auto blocks =
            sched::build_blocks(batch.size(), cfg.task.completion_len,
                                cfg.strata, block_size, block_rng);
        auto grad_fn = [&](const sched::Block& block) {
            std::vector<double> g(theta.size(), 0.0);
            for (const sched::WorkItem& item : block.items) {
                Rng mask_rng(item.substream);
                auto [tokens, pattern] = diffusion::forward_mask(
                    cfg.model, batch[item.trajectory], item.timestep, mask_rng);
                const auto tl = denoiser::forward(cfg.model, theta, tokens);
                const auto rl = denoiser::forward(cfg.model, theta_old, tokens);
                const auto sl = objective::sequence_loss(
                    batch[item.trajectory], pattern, tl, rl, cfg.lfpo);
                std::vector<std::size_t> active;
                for (std::size_t i = 0; i < pattern.masked.size(); ++i) {
                    if (pattern.masked[i]) {
                        active.push_back(cfg.task.prompt_len + i);
                    }
                }
                const auto ig = denoiser::backward(cfg.model, theta, tokens,
                                                   sl.upstream, active);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += ig[i];
            }
            return g;
        };
        return sched::accumulate_gradients(blocks, grad_fn);
    };

    const std::vector<double> g1 = total_gradient(1);
    const std::vector<double> g4 = total_gradient(4);
    const std::vector<double> gall = total_gradient(batch.size() * cfg.strata);

    double norm = 0.0;
    for (double g : g1) norm = std::max(norm, std::abs(g));
    double worst = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        worst = std::max(worst, std::abs(g1[i] - g4[i]));
        worst = std::max(worst, std::abs(g1[i] - gall[i]));
    }
    r.observed = worst / std::max(norm, 1e-30);
    r.pass = r.observed <= r.bound;
    return r;
}

CheckResult check_stratified_coverage(Rng& rng) {
    CheckResult r;
    r.name = "stratified draws cover their segments";
    r.bound = 0.001;
    r.detail = "min per-segment chi-square p-value";
    const std::size_t range = 16, k = 4;
    std::vector<std::vector<std::size_t>> counts(
        k, std::vector<std::size_t>(range / k, 0));
    bool in_segment = true;
    for (int rep = 0; rep < 10000; ++rep) {
        const auto ts = sched::stratified_timesteps(range, k, rng);
        for (std::size_t seg = 0; seg < k; ++seg) {
            const std::size_t value = ts[seg] - 1;  // back to {0..range-1}
            const std::size_t lo = seg * range / k;
            const std::size_t hi = (seg + 1) * range / k - 1;
            if (value < lo || value > hi) {
                in_segment = false;
            } else {
                counts[seg][value - lo]++;
            }
        }
    }
    double min_p = 1.0;
    for (const auto& seg_counts : counts) {
        min_p = std::min(min_p, stats::uniform_chi_square_pvalue(seg_counts));
    }
    r.observed = min_p;
    r.pass = in_segment && min_p > r.bound;
    if (!in_segment) r.detail += " (segment violation!)";
    return r;
}

CheckResult check_mask_pattern_uniformity(Rng& rng) {
    CheckResult r;
    r.name = "forward-mask patterns are uniform";
    r.bound = 0.001;
    r.detail = "chi-square p-value over C(4,2) patterns";
    denoiser::Config model;
    model.vocab = 6;
    model.seq_len = 6;
    model.embed_dim = 2;
    model.hidden_dim = 2;
    diffusion::Trajectory traj;
    traj.prompt = {0, 1};
    traj.completion = {0, 1, 2, 3};

    std::vector<std::size_t> counts(6, 0);  // C(4,2) patterns
    for (int rep = 0; rep < 10000; ++rep) {
        const auto [tokens, pattern] = diffusion::forward_mask(model, traj, 2, rng);
        std::size_t code = 0, idx = 0;
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = a + 1; b < 4; ++b) {
                if (pattern.masked[a] && pattern.masked[b]) code = idx;
                ++idx;
            }
        }
        counts[code]++;
    }
    r.observed = stats::uniform_chi_square_pvalue(counts);
    r.pass = r.observed > r.bound;
    return r;
}

CheckResult check_stratified_variance(Rng& rng) {
    CheckResult r;
    r.name = "stratified sampling reduces gradient variance";
    r.bound = -1.6449;  // one-sided z critical value at p < 0.05
    r.detail = "welch z (stratified - uniform)";

    train::TrainConfig cfg;
    cfg.task.kind = env::TaskKind::Copy;
    cfg.task.vocab_data = 6;
    cfg.task.prompt_len = 4;
    cfg.task.completion_len = 4;
    cfg.model.vocab = 8;
    cfg.model.seq_len = 8;
    cfg.model.embed_dim = 4;
    cfg.model.hidden_dim = 6;
    cfg.lfpo.lambda_anchor = 1.0;

    const std::uint64_t seed = rng.next_u64();
    const denoiser::ParamVector theta = denoiser::init_params(cfg.model, seed);
    const denoiser::ParamVector theta_old =
        denoiser::init_params(cfg.model, seed + 7);
    Rng prompt_rng(seed + 13);
    diffusion::Trajectory traj;
    traj.prompt = env::sample_prompt(cfg.task, prompt_rng);
    diffusion::DecodeConfig rollout;
    rollout.temperature = 1.0;
    Rng decode_rng(seed + 17);
    traj = diffusion::decode(cfg.model, theta_old, traj.prompt,
                             cfg.task.completion_len, rollout, decode_rng);
    env::TaskSpec dense = cfg.task;
    dense.mode = env::RewardMode::Dense;
    traj.reward = env::reward(dense, cfg.model, traj.prompt, traj.completion)
                      .reward;

    const std::size_t k = 2, reps = 200;
    auto mean_gradient = [&](const std::vector<std::size_t>& timesteps,
                             Rng& mask_rng) {
        std::vector<double> g(theta.size(), 0.0);
        for (std::size_t t : timesteps) {
            auto [tokens, pattern] =
                diffusion::forward_mask(cfg.model, traj, t, mask_rng);
            const auto tl = denoiser::forward(cfg.model, theta, tokens);
            const auto rl = denoiser::forward(cfg.model, theta_old, tokens);
            const auto sl = objective::sequence_loss(traj, pattern, tl, rl,
                                                     cfg.lfpo);
            std::vector<std::size_t> active;
            for (std::size_t i = 0; i < pattern.masked.size(); ++i) {
                if (pattern.masked[i]) active.push_back(cfg.task.prompt_len + i);
            }
            const auto ig = denoiser::backward(cfg.model, theta, tokens,
                                               sl.upstream, active);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += ig[i] / static_cast<double>(timesteps.size());
            }
        }
        return g;
    };

    auto covariance_trace_samples = [&](bool stratified) {
        std::vector<std::vector<double>> grads;
        grads.reserve(reps);
        for (std::size_t rep = 0; rep < reps; ++rep) {
            std::vector<std::size_t> ts;
            if (stratified) {
                ts = sched::stratified_timesteps(cfg.task.completion_len, k, rng);
            } else {
                for (std::size_t i = 0; i < k; ++i) {
                    ts.push_back(1 + static_cast<std::size_t>(rng.uniform_below(
                                         cfg.task.completion_len)));
                }
            }
            grads.push_back(mean_gradient(ts, rng));
        }
        std::vector<double> mean(theta.size(), 0.0);
        for (const auto& g : grads) {
            for (std::size_t i = 0; i < mean.size(); ++i) {
                mean[i] += g[i] / static_cast<double>(reps);
            }
        }
        std::vector<double> sq_dev(reps, 0.0);
        for (std::size_t rep = 0; rep < reps; ++rep) {
            double s = 0.0;
            for (std::size_t i = 0; i < mean.size(); ++i) {
                const double d = grads[rep][i] - mean[i];
                s += d * d;
            }
            sq_dev[rep] = s;
        }
        return sq_dev;
    };

    const std::vector<double> strat = covariance_trace_samples(true);
    const std::vector<double> unif = covariance_trace_samples(false);
    r.observed = stats::welch_one_sided_z(strat, unif);
    r.pass = r.observed < r.bound;
    return r;
}

CheckResult check_ema(Rng& rng) {
    CheckResult r;
    r.name = "ema update exactness and betweenness";
    r.bound = 1e-15;
    r.detail = "max abs deviation from identity";
    double worst = 0.0;
    bool between = true;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.uniform_below(64);
        const double alpha = rng.uniform01() * 0.999;
        std::vector<double> old_v(n), theta(n);
        for (std::size_t i = 0; i < n; ++i) {
            old_v[i] = rng.uniform_real(-2.0, 2.0);
            theta[i] = rng.uniform_real(-2.0, 2.0);
        }
        std::vector<double> updated = old_v;
        train::ema_update(updated, theta, alpha);
        for (std::size_t i = 0; i < n; ++i) {
            const double expected = alpha * old_v[i] + (1.0 - alpha) * theta[i];
            worst = std::max(worst, std::abs(updated[i] - expected));
            const double lo = std::min(old_v[i], theta[i]);
            const double hi = std::max(old_v[i], theta[i]);
            if (updated[i] < lo || updated[i] > hi) between = false;
        }
    }
    r.observed = worst;
    r.pass = worst <= r.bound && between;
    if (!between) r.detail += " (betweenness violation!)";
    return r;
}

}  // namespace

std::vector<CheckResult> run_all(const Options& options) {
    Rng rng(derive_seed(options.seed, 0x5eedf00d));
    std::vector<CheckResult> results;
    results.push_back(
        check_gradient_identity(rng, false, options.corrupt_ce_gradient));
    results.push_back(
        check_gradient_identity(rng, true, options.corrupt_ce_gradient));
    results.push_back(check_beta_one_identity(rng));
    results.push_back(check_geometric_mean(rng));
    results.push_back(check_cold_start(rng));
    results.push_back(check_lfpo_fd(rng));
    results.push_back(check_denoiser_fd(rng));
    results.push_back(check_block_equivalence(rng));
    results.push_back(check_stratified_coverage(rng));
    results.push_back(check_mask_pattern_uniformity(rng));
    results.push_back(check_stratified_variance(rng));
    results.push_back(check_ema(rng));
    return results;
}

bool all_pass(const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        if (!r.pass) return false;
    }
    return true;
}

void print_table(std::ostream& out, const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        out << (r.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(46)
            << r.name << " " << r.detail << " = " << std::scientific
            << std::setprecision(3) << r.observed << " (bound "
            << r.bound << ")\n"
            << std::defaultfloat;
    }
}

}  // namespace lfpo::verify
