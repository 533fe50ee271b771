#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ecodyn/integrate.hpp"

using namespace ecodyn;

namespace {
const RkTableau rk4 = RkTableau::classic_rk4();
}

TEST_CASE("rk_step on a zero field is the identity") {
    VectorField f = [](const StateVector& y) { return StateVector(y.size(), 0.0); };
    const StateVector y{1.0, -2.0, 3.5};
    CHECK(rk_step(f, y, 0.37, rk4) == y);
}

TEST_CASE("rk_step reproduces the truncated exponential on y' = y") {
    VectorField f = [](const StateVector& y) { return y; };
    const double h = 0.1;
    const auto out = rk_step(f, {1.0}, h, rk4);
    const double expected = 1.0 + h + h * h / 2 + h * h * h / 6 + h * h * h * h / 24;
    CHECK(out[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("rk_step agrees with forward Euler to O(tau^2)") {
    const ModelSpec lv = default_model(ModelKind::Lv);
    VectorField f = [&lv](const StateVector& y) { return rhs(lv, y); };
    const StateVector y{0.5, 0.5};
    const auto f0 = f(y);
    for (double tau : {1e-3, 1e-4}) {
        const auto out = rk_step(f, y, tau, rk4);
        for (std::size_t c = 0; c < y.size(); ++c)
            CHECK(std::abs(out[c] - (y[c] + tau * f0[c])) < 2.0 * tau * tau);
    }
}

TEST_CASE("rk_step reports the blowing-up stage") {
    int calls = 0;
    VectorField f = [&calls](const StateVector& y) {
        ++calls;
        if (calls >= 3) return StateVector{std::nan("")};
        return y;
    };
    try {
        rk_step(f, {1.0}, 0.1, rk4);
        FAIL("expected NumericalBlowup");
    } catch (const NumericalBlowup& e) {
        CHECK(e.stage == 2);
    }
}

TEST_CASE("simulate keeps the sir total at one and u_s nonincreasing") {
    const Trajectory traj = simulate(default_model(ModelKind::Sir), TimeGrid(0, 60, 300));
    REQUIRE(traj.states.size() == 300);
    for (int n = 0; n < 300; ++n) {
        const auto& y = traj.states[n];
        CHECK(std::abs(y[0] + y[1] + y[2] - 1.0) < 1e-12);
        if (n > 0) CHECK(y[0] <= traj.states[n - 1][0]);
    }
}

TEST_CASE("simulate lv stays oscillatory and bounded") {
    const Trajectory traj = simulate(default_model(ModelKind::Lv), TimeGrid(0, 180, 300));
    double umin = 1e9, umax = -1e9;
    for (const auto& y : traj.states) {
        CHECK(y[0] > 0.0);
        CHECK(y[1] > 0.0);
        CHECK(y[0] < 1.2);
        CHECK(y[1] < 1.2);
        umin = std::min(umin, y[0]);
        umax = std::max(umax, y[0]);
    }
    CHECK(umax - umin > 0.2);  // genuinely oscillating, not settling
}

TEST_CASE("two-point grid takes exactly one step") {
    const ModelSpec lv = default_model(ModelKind::Lv);
    const Trajectory traj = simulate(lv, TimeGrid(0, 0.5, 2));
    REQUIRE(traj.states.size() == 2);
    VectorField f = [&lv](const StateVector& y) { return rhs(lv, y); };
    CHECK(traj.states[1] == rk_step(f, lv.initial_state, 0.5, rk4));
}

TEST_CASE("rk4 error at fixed horizon decays like tau^4") {
    const ModelSpec lv = default_model(ModelKind::Lv);
    const double t_end = 20.0;
    auto solve = [&](int n_steps) {
        return simulate(lv, TimeGrid(0, t_end, n_steps)).states.back();
    };
    std::vector<double> errors;
    for (int halving = 0; halving < 4; ++halving) {
        const int n = 16 * (1 << halving);  // tau = 20/n
        const auto coarse = solve(n + 1);
        const auto fine = solve(64 * n + 1);
        double err = 0.0;
        for (std::size_t c = 0; c < coarse.size(); ++c)
            err = std::max(err, std::abs(coarse[c] - fine[c]));
        errors.push_back(err);
    }
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const double factor = errors[i] / errors[i + 1];
        CHECK(factor > 12.0);
        CHECK(factor < 20.0);
    }
}

TEST_CASE("one step forward then one step backward cancels to O(tau^5)") {
    const ModelSpec lv = default_model(ModelKind::Lv);
    VectorField f = [&lv](const StateVector& y) { return rhs(lv, y); };
    VectorField fneg = [&f](const StateVector& y) {
        auto v = f(y);
        for (auto& x : v) x = -x;
        return v;
    };
    const StateVector y{0.5, 0.5};
    for (double tau : {0.2, 0.1, 0.05}) {
        const auto there = rk_step(f, y, tau, rk4);
        const auto back = rk_step(fneg, there, tau, rk4);
        for (std::size_t c = 0; c < y.size(); ++c)
            CHECK(std::abs(back[c] - y[c]) < 0.05 * std::pow(tau, 5));
    }
}

TEST_CASE("add_noise is deterministic and unbiased at scale") {
    const Trajectory clean = simulate(default_model(ModelKind::Lv), TimeGrid(0, 180, 300));
    const Trajectory a = add_noise(clean, 0.01, 42);
    const Trajectory b = add_noise(clean, 0.01, 42);
    const Trajectory c = add_noise(clean, 0.0, 42);
    double mean = 0.0;
    int count = 0;
    for (int n = 0; n < 300; ++n)
        for (std::size_t i = 0; i < clean.states[n].size(); ++i) {
            CHECK(a.states[n][i] == b.states[n][i]);
            CHECK(c.states[n][i] == clean.states[n][i]);
            mean += a.states[n][i] - clean.states[n][i];
            ++count;
        }
    mean /= count;
    CHECK(std::abs(mean) < 3.0 * 0.01 / std::sqrt(static_cast<double>(count)));
    CHECK(a.provenance.noised);
    CHECK_FALSE(c.provenance.noised);
}

TEST_CASE("split keeps the benchmark point counts") {
    const Trajectory traj = simulate(default_model(ModelKind::Sir), TimeGrid(0, 60, 300));
    {
        auto [train, full] = split(traj, 1.0 / 3.0);
        CHECK(train.grid.n_steps == 100);
        CHECK(full.grid.n_steps == 300);
    }
    {
        auto [train, full] = split(traj, 0.5);
        CHECK(train.grid.n_steps == 150);
    }
    {
        auto [train, full] = split(traj, 2.0 / 3.0);
        CHECK(train.grid.n_steps == 200);
        CHECK(train.states.back() == traj.states[199]);
        CHECK(train.grid.tau() == doctest::Approx(traj.grid.tau()).epsilon(1e-15));
    }
    {
        auto [train, full] = split(traj, 1.0);
        CHECK(train.states == full.states);
    }
    CHECK_THROWS_AS(split(traj, 0.0), ConfigError);
    CHECK_THROWS_AS(split(traj, 1.5), ConfigError);
}

TEST_CASE("trajectory csv round-trips") {
    const Trajectory traj =
        add_noise(simulate(default_model(ModelKind::Lv), TimeGrid(0, 18, 40)), 0.01, 5);
    const std::string path = "test_traj_roundtrip.csv";
    write_trajectory_csv(traj, path);
    const Trajectory back = read_trajectory_csv(path);
    CHECK(back.labels == traj.labels);
    CHECK(back.grid.n_steps == traj.grid.n_steps);
    CHECK(back.grid.t_max == doctest::Approx(traj.grid.t_max).epsilon(1e-15));
    for (int n = 0; n < 40; ++n)
        for (int c = 0; c < 2; ++c)
            CHECK(back.states[n][c] == traj.states[n][c]);  // 17 digits are lossless
    CHECK(back.provenance.seed == 5);
    CHECK(back.provenance.noised);
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".meta.json");
}

TEST_CASE("time grid validation") {
    CHECK_THROWS_AS(TimeGrid(0, 1, 1), ConfigError);
    CHECK_THROWS_AS(TimeGrid(1, 1, 10), ConfigError);
    CHECK(TimeGrid(0, 60, 300).tau() == doctest::Approx(60.0 / 299.0).epsilon(1e-15));
}
