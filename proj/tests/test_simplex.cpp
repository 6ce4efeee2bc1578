#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lfpo/rng.hpp"
#include "lfpo/simplex.hpp"

using namespace lfpo;
using simplex::Dist;
using simplex::LogitRow;
using simplex::OneHot;
using simplex::Vec;

namespace {

Vec random_logits(Rng& rng, std::size_t v, double scale) {
    Vec z(v);
    for (double& x : z) x = rng.uniform_real(-scale, scale);
    return z;
}

Dist random_dist(Rng& rng, std::size_t v) {
    Vec p(v);
    double sum = 0.0;
    for (double& x : p) {
        x = -std::log(1.0 - rng.uniform01());
        sum += x;
    }
    for (double& x : p) x /= sum;
    return Dist{p};
}

// Independent long-double softmax-log for the overflow oracle.
std::vector<long double> log_softmax_ld(const Vec& z) {
    long double zmax = z[0];
    for (double v : z) zmax = std::max<long double>(zmax, v);
    long double sum = 0.0L;
    for (double v : z) sum += std::exp(static_cast<long double>(v) - zmax);
    const long double log_norm = zmax + std::log(sum);
    std::vector<long double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - log_norm;
    return out;
}

double entropy(const Dist& d) {
    double h = 0.0;
    for (double p : d.probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

}  // namespace

TEST_CASE("softmax basics") {
    CHECK(simplex::softmax(LogitRow{{0.0, 0.0, 0.0}}).probs[0] ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const Dist d = simplex::softmax(LogitRow{{std::log(2.0), 0.0, 0.0}});
    CHECK(d.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.probs[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(d.probs[2] == doctest::Approx(0.25).epsilon(1e-12));

    CHECK_THROWS_AS(simplex::softmax(LogitRow{{1.0, std::nan("")}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(simplex::softmax(LogitRow{{1.0}}), std::invalid_argument);
}

TEST_CASE("softmax shift invariance and validity at large magnitudes") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(32);
        Vec z = random_logits(rng, v, 1e3);
        const double shift = rng.uniform_real(-100.0, 100.0);
        Vec zs = z;
        for (double& x : zs) x += shift;
        const Dist a = simplex::softmax(LogitRow{z});
        const Dist b = simplex::softmax(LogitRow{zs});
        CHECK(simplex::is_valid_dist(a.probs));
        for (std::size_t i = 0; i < v; ++i) {
            CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("log_softmax normalization and softmax agreement") {
    const Vec two = simplex::log_softmax(LogitRow{{0.0, 0.0}});
    CHECK(two[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
    CHECK(two[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));

    Rng rng(102);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(16);
        const Vec z = random_logits(rng, v, 20.0);
        const Vec ls = simplex::log_softmax(LogitRow{z});
        const Dist sm = simplex::softmax(LogitRow{z});
        double sum = 0.0;
        for (std::size_t i = 0; i < v; ++i) {
            sum += std::exp(ls[i]);
            CHECK(std::exp(ls[i]) == doctest::Approx(sm.probs[i]).epsilon(1e-12));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("log_softmax survives extreme logits (extended-precision oracle)") {
    const Vec z = {1000.0, 0.0};
    const Vec ls = simplex::log_softmax(LogitRow{z});
    const auto oracle = log_softmax_ld(z);
    CHECK(std::isfinite(ls[0]));
    CHECK(std::isfinite(ls[1]));
    CHECK(ls[0] == doctest::Approx(static_cast<double>(oracle[0])).epsilon(1e-12));
    CHECK(ls[1] ==
          doctest::Approx(static_cast<double>(oracle[1])).epsilon(1e-12));
    CHECK(ls[1] == doctest::Approx(-1000.0).epsilon(1e-12));
}

TEST_CASE("mask prior") {
    const Dist m3 = simplex::mask_prior(3);
    CHECK(m3.probs[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const Dist m2 = simplex::mask_prior(2);
    CHECK(m2.probs[0] == doctest::Approx(0.5).epsilon(1e-15));
    for (std::size_t v = 2; v <= 1024; v A= v) break;  // placeholder
    for (std::size_t v = 2; v <= 1024; ++v) {
        double sum = 0.0;
        for (double p : simplex::mask_prior(v).probs) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(simplex::mask_prior(1), std::invalid_argument);
}

TEST_CASE("interpolate_state endpoints and midpoint") {
    const Dist m = simplex::mask_prior(3);
    const OneHot x1{1, 3};
    const Dist at0 = simplex::interpolate_state(x1, m, 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(at0.probs[i] == doctest::Approx(m.probs[i]).epsilon(1e-15));
    }
    const Dist at1 = simplex::interpolate_state(x1, m, 1.0);
    CHECK(at1.probs[1] == doctest::Approx(1.0).epsilon(1e-15));
    const Dist mid = simplex::interpolate_state(x1, m, 0.5);
    CHECK(mid.probs[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(mid.probs[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(mid.probs[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK_THROWS_AS(simplex::interpolate_state(x1, m, 1.5),
                    std::invalid_argument);
}

TEST_CASE("velocities: zero at coincidence, closure, base cancellation") {
    const Dist u = simplex::mask_prior(3);
    const Dist p{{0.5, 0.25, 0.25}};
    const auto vel = simplex::model_velocity(p, u);
    CHECK(vel.components[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(vel.components[1] == doctest::Approx(-1.0 / 12.0).epsilon(1e-15));

    const auto zero = simplex::model_velocity(p, p);
    for (double c : zero.components) CHECK(c == 0.0);

    const OneHot x1{1, 3};
    const auto tv = simplex::target_velocity(x1, u);
    CHECK(tv.components[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK(tv.components[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    Rng rng(103);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(16);
        const Dist a = random_dist(rng, v);
        const Dist base = random_dist(rng, v);
        const OneHot y{rng.uniform_below(v), v};

        double sum = 0.0;
        for (double c : simplex::model_velocity(a, base).components) sum += c;
        CHECK(std::abs(sum) <= 1e-9);

        // base point cancels in the velocity residual
        const auto mv = simplex::model_velocity(a, base);
        const auto uv = simplex::target_velocity(y, base);
        for (std::size_t i = 0; i < v; ++i) {
            const double residual = mv.components[i] - uv.components[i];
            const double direct = a.probs[i] - (i == y.index ? 1.0 : 0.0);
            CHECK(residual == doctest::Approx(direct).epsilon(1e-12));
        }
    }

    CHECK_THROWS_AS(simplex::model_velocity(p, Dist{{0.5, 0.5}}),
                    std::invalid_argument);
}

TEST_CASE("fm_loss values and simplex diameter bound") {
    const OneHot y{0, 3};
    const Dist exact = y.to_dist();
    CHECK(simplex::fm_loss(exact, y) == 0.0);
    CHECK(simplex::fm_loss(simplex::mask_prior(3), y) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    // brute-force the bound over random simplex pairs
    Rng rng(104);
    double worst = 0.0;
    for (int trial = 0; trial < 5000; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(16);
        const Dist p = random_dist(rng, v);
        const OneHot target{rng.uniform_below(v), v};
        worst = std::max(worst, simplex::fm_loss(p, target));
    }
    CHECK(worst <= 2.0);
}

TEST_CASE("ce_loss identities and zero handling") {
    const Dist p{{0.2, 0.5, 0.3}};
    CHECK(simplex::ce_loss(p, p) == doctest::Approx(entropy(p)).epsilon(1e-12));

    const OneHot k{1, 3};
    CHECK(simplex::ce_loss(k.to_dist(), p) ==
          doctest::Approx(-std::log(0.5)).epsilon(1e-12));

    Rng rng(105);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(16);
        const Dist target = random_dist(rng, v);
        const Dist pred = random_dist(rng, v);
        CHECK(simplex::ce_loss(target, pred) - entropy(target) >= -1e-12);
    }

    const Dist degenerate{{1.0, 0.0}};
    const Dist onehot0{{0.0, 1.0}};
    bool clamped = false;
    const double loss = simplex::ce_loss(degenerate, onehot0,
                                         simplex::CeZeroPolicy::Clamp, &clamped);
    CHECK(clamped);
    CHECK(loss == doctest::Approx(-std::log(1e-300)));
    CHECK_THROWS_AS(simplex::ce_loss(degenerate, onehot0,
                                     simplex::CeZeroPolicy::Error),
                    std::invalid_argument);
}

TEST_CASE("ce_gradient formula and finite-difference oracle") {
    const Dist p{{0.2, 0.5, 0.3}};
    const OneHot y{1, 3};
    const Vec g = simplex::ce_gradient(p, y.to_dist());
    CHECK(g[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(g[2] == doctest::Approx(0.3).epsilon(1e-15));

    const Vec zero = simplex::ce_gradient(p, p);
    for (double x : zero) CHECK(x == 0.0);

    // central differences of ce_loss(target, softmax(z)), h = 1e-6
    Rng rng(106);
    const double h = 1e-6;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(63);
        const Vec z = random_logits(rng, v, 3.0);
        const bool soft = trial % 2 == 0;
        const Dist target =
            soft ? random_dist(rng, v) : Dist{OneHot{rng.uniform_below(v), v}.to_dist()};
        const Vec analytic =
            simplex::ce_gradient(simplex::softmax(LogitRow{z}), target);
        for (int probe = 0; probe < 4; ++probe) {
            const std::size_t i = rng.uniform_below(v);
            Vec zp = z, zm = z;
            zp[i] += h;
            zm[i] -= h;
            const double fp =
                simplex::ce_loss(target, simplex::softmax(LogitRow{zp}));
            const double fm =
                simplex::ce_loss(target, simplex::softmax(LogitRow{zm}));
            const double fd = (fp - fm) / (2.0 * h);
            const double denom =
                std::max({std::abs(analytic[i]), std::abs(fd), 1e-4});
            worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
        }
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("theorem identity: ce gradient equals velocity residual") {
    Rng rng(107);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t v = 2 + rng.uniform_below(63);
        const Vec z = random_logits(rng, v, 4.0);
        const Dist p = simplex::softmax(LogitRow{z});
        const OneHot y{rng.uniform_below(v), v};
        const Dist base = random_dist(rng, v);
        const Vec grad = simplex::ce_gradient(p, y.to_dist());
        const auto mv = simplex::model_velocity(p, base);
        const auto uv = simplex::target_velocity(y, base);
        for (std::size_t i = 0; i < v; ++i) {
            worst = std::max(worst, std::abs(grad[i] - (p.probs[i] -
                                                        y.to_dist().probs[i])));
            worst = std::max(
                worst,
                std::abs(grad[i] - (mv.components[i] - uv.components[i])));
        }
    }
    CHECK(worst <= 1e-12);
}
