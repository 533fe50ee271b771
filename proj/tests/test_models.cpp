#include <doctest.h>

#include <cmath>
#include <random>

#include "ecodyn/models.hpp"

using namespace ecodyn;

TEST_CASE("sir rhs matches direct substitution") {
    const ModelSpec m = default_model(ModelKind::Sir);
    const auto f = rhs(m, {0.99, 0.01, 0.0});
    CHECK(f[0] == doctest::Approx(-0.00495).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(0.00395).epsilon(1e-12));
    CHECK(f[2] == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("lv rhs matches direct substitution") {
    const ModelSpec m = default_model(ModelKind::Lv);
    const auto f = rhs(m, {0.5, 0.5});
    CHECK(f[0] == doctest::Approx(0.0375).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(-0.05).epsilon(1e-12));
}

TEST_CASE("zero state is an equilibrium of every model") {
    for (ModelKind kind :
         {ModelKind::Sir, ModelKind::Sis, ModelKind::Lv, ModelKind::Lvsis}) {
        const ModelSpec m = default_model(kind);
        const StateVector zero(m.dimension(), 0.0);
        for (double v : rhs(m, zero)) CHECK(v == 0.0);
    }
}

TEST_CASE("rhs rejects dimension mismatch") {
    const ModelSpec m = default_model(ModelKind::Lv);
    CHECK_THROWS_AS(rhs(m, {1.0, 2.0, 3.0}), DimensionError);
}

TEST_CASE("sir and sis conserve the total population") {
    std::mt19937_64 eng(7);
    auto u = [&eng] { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
    for (int trial = 0; trial < 200; ++trial) {
        ModelSpec m = default_model(trial % 2 == 0 ? ModelKind::Sir : ModelKind::Sis);
        if (trial % 2 == 0)
            m.params = SirParams{u(), u()};
        else
            m.params = SisParams{u(), u()};
        StateVector y(m.dimension());
        for (auto& v : y) v = u();
        const auto f = rhs(m, y);
        double sum = 0.0, mag = 0.0;
        for (double v : f) {
            sum += v;
            mag += std::abs(v);
        }
        // One rounded subtraction's residual is the only slack.
        CHECK(std::abs(sum) <= 4.0 * 1e-16 * (mag + 1e-300));
    }
}

TEST_CASE("lvsis infection and recovery only exchange compartment pairs") {
    std::mt19937_64 eng(11);
    auto u = [&eng] { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
    for (int trial = 0; trial < 200; ++trial) {
        LvsisParams p{};
        p.alpha_s = p.alpha_i = 0.0;
        p.beta_ss = p.beta_si = p.beta_is = p.beta_ii = 0.0;
        p.gamma_us = p.gamma_ui = p.gamma_vs = p.gamma_vi = 0.0;
        p.delta_ss = p.delta_si = p.delta_is = p.delta_ii = 0.0;
        p.sigma_s_i = u();
        p.sigma_s_vi = u();
        p.sigma_vs_i = u();
        p.sigma_vs_vi = u();
        p.omega_i = u();
        p.omega_vi = u();
        ModelSpec m = default_model(ModelKind::Lvsis);
        m.params = p;
        StateVector y{u(), u(), u(), u()};
        const auto f = rhs(m, y);
        CHECK(f[0] + f[1] == 0.0);
        CHECK(f[2] + f[3] == 0.0);
    }
}

TEST_CASE("rhs is deterministic") {
    const ModelSpec m = default_model(ModelKind::Lvsis);
    const StateVector y{0.7, 0.3, 0.6, 0.4};
    const auto a = rhs(m, y);
    const auto b = rhs(m, y);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("default models carry the benchmark parameterizations") {
    const ModelSpec sir = default_model(ModelKind::Sir);
    const auto& sp = std::get<SirParams>(sir.params);
    CHECK(sp.sigma == 0.5);
    CHECK(sp.omega == 0.1);
    CHECK(sir.initial_state == StateVector{0.99, 0.01, 0.0});

    const ModelSpec lv = default_model(ModelKind::Lv);
    const auto& lp = std::get<LvParams>(lv.params);
    CHECK(lp.alpha == 0.5);
    CHECK(lp.beta == 0.8);
    CHECK(lp.delta == 0.4);
    CHECK(lp.gamma == 0.3);
    CHECK(lp.eta == 0.05);
    CHECK(lv.initial_state == StateVector{0.5, 0.5});

    const ModelSpec lvsis = default_model(ModelKind::Lvsis);
    CHECK(lvsis.initial_state == StateVector{0.7, 0.3, 0.6, 0.4});
}

TEST_CASE("lvsis defaults expand to the reference equation coefficients") {
    // The displayed reference equations pin the monomial coefficients; the
    // structural rates must reproduce them on expansion.
    const auto p = std::get<LvsisParams>(default_model(ModelKind::Lvsis).params);
    CHECK(p.alpha_i + p.omega_i == doctest::Approx(0.03).epsilon(1e-15));   // u_i in u_s'
    CHECK(p.gamma_us == 0.01);                                              // u_s^2
    CHECK(p.beta_si + p.sigma_s_vi == doctest::Approx(0.03).epsilon(1e-15));  // u_s v_i
    CHECK(p.gamma_vi + p.omega_vi == doctest::Approx(0.02).epsilon(1e-15));   // v_i in v_i'
    CHECK(p.delta_si - p.sigma_vs_i == doctest::Approx(0.03).epsilon(1e-15)); // u_i v_s
    CHECK(p.delta_ii == 0.041);                                             // u_i v_i in v_i'

    // The narrated variant differs only in the prey mortality and one
    // reproduction rate.
    const LvsisParams n = lvsis_params_narrative();
    CHECK(n.gamma_us == 0.02);
    CHECK(n.gamma_ui == 0.02);
    CHECK(n.delta_ii == 0.04);
    CHECK(n.alpha_i == p.alpha_i);
}

TEST_CASE("component labels are unique and sized to the model") {
    for (ModelKind kind :
         {ModelKind::Sir, ModelKind::Sis, ModelKind::Lv, ModelKind::Lvsis}) {
        const auto labels = component_labels(kind);
        CHECK(static_cast<int>(labels.size()) == ModelSpec::model_dimension(kind));
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = i + 1; j < labels.size(); ++j)
                CHECK(labels[i] != labels[j]);
    }
}

TEST_CASE("kind names round-trip") {
    for (ModelKind kind :
         {ModelKind::Sir, ModelKind::Sis, ModelKind::Lv, ModelKind::Lvsis})
        CHECK(parse_kind(kind_name(kind)) == kind);
    CHECK_THROWS_AS(parse_kind("seir"), ConfigError);
}
