#include "ecodyn/models.hpp"

namespace ecodyn {

int ModelSpec::model_dimension(ModelKind k) {
    switch (k) {
        case ModelKind::Sir:   return 3;
        case ModelKind::Sis:   return 2;
        case ModelKind::Lv:    return 2;
        case ModelKind::Lvsis: return 4;
    }
    throw ConfigError("unknown model kind");
}

namespace {

StateVector rhs_sir(const SirParams& p, const StateVector& y) {
    const double infection = p.sigma * y[0] * y[1];
    const double recovery  = p.omega * y[1];
    return {-infection, infection - recovery, recovery};
}

StateVector rhs_sis(const SisParams& p, const StateVector& y) {
    const double infection = p.sigma * y[0] * y[1];
    const double recovery  = p.omega * y[1];
    return {recovery - infection, infection - recovery};
}

StateVector rhs_lv(const LvParams& p, const StateVector& y) {
    const double u = y[0], v = y[1];
    return {p.alpha * u - p.beta * u * v - p.eta * u * u,
            p.delta * u * v - p.gamma * v};
}

StateVector rhs_lvsis(const LvsisParams& p, const StateVector& y) {
    const double us = y[0], ui = y[1], vs = y[2], vi = y[3];
    // Infection/recovery exchanges are shared between the compartment pair so
    // that with all ecological rates zero the pair sums cancel bitwise.
    const double xch_u = p.sigma_s_i * us * ui + p.sigma_s_vi * us * vi - p.omega_i * ui;
    const double xch_v = p.sigma_vs_i * vs * ui + p.sigma_vs_vi * vs * vi - p.omega_vi * vi;
    const double dus = p.alpha_s * us + p.alpha_i * ui
                     - p.beta_ss * us * vs - p.beta_si * us * vi
                     - p.gamma_us * us * us - xch_u;
    const double dui = -p.beta_is * ui * vs - p.beta_ii * ui * vi
                     - p.gamma_ui * ui * ui + xch_u;
    const double dvs = -p.gamma_vs * vs + p.delta_ss * vs * us + p.delta_si * vs * ui - xch_v;
    const double dvi = -p.gamma_vi * vi + p.delta_is * vi * us + p.delta_ii * vi * ui + xch_v;
    return {dus, dui, dvs, dvi};
}

}  // namespace

StateVector rhs(const ModelSpec& model, const StateVector& y) {
    if (static_cast<int>(y.size()) != model.dimension())
        throw DimensionError("rhs: state has dimension " + std::to_string(y.size()) +
                             ", model " + kind_name(model.kind) + " expects " +
                             std::to_string(model.dimension()));
    switch (model.kind) {
        case ModelKind::Sir:   return rhs_sir(std::get<SirParams>(model.params), y);
        case ModelKind::Sis:   return rhs_sis(std::get<SisParams>(model.params), y);
        case ModelKind::Lv:    return rhs_lv(std::get<LvParams>(model.params), y);
        case ModelKind::Lvsis: return rhs_lvsis(std::get<LvsisParams>(model.params), y);
    }
    throw ConfigError("unknown model kind");
}

ModelSpec default_model(ModelKind kind) {
    ModelSpec m;
    m.kind = kind;
    switch (kind) {
        case ModelKind::Sir:
            m.params = SirParams{0.5, 0.1};
            m.initial_state = {0.99, 0.01, 0.0};
            break;
        case ModelKind::Sis:
            // No canonical experiment; mirrors the SIR rates.
            m.params = SisParams{0.5, 0.1};
            m.initial_state = {0.99, 0.01};
            break;
        case ModelKind::Lv:
            m.params = LvParams{0.5, 0.8, 0.4, 0.3, 0.05};
            m.initial_state = {0.5, 0.5};
            break;
        case ModelKind::Lvsis:
            m.params = LvsisParams{};
            m.initial_state = {0.7, 0.3, 0.6, 0.4};
            break;
    }
    return m;
}

LvsisParams lvsis_params_narrative() {
    LvsisParams p;
    p.gamma_us = 0.02;
    p.gamma_ui = 0.02;
    p.delta_ii = 0.04;
    return p;
}

std::vector<std::string> component_labels(ModelKind kind) {
    switch (kind) {
        case ModelKind::Sir:   return {"u_s", "u_i", "u_r"};
        case ModelKind::Sis:   return {"u_s", "u_i"};
        case ModelKind::Lv:    return {"u", "v"};
        case ModelKind::Lvsis: return {"u_s", "u_i", "v_s", "v_i"};
    }
    throw ConfigError("unknown model kind");
}

std::string kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Sir:   return "sir";
        case ModelKind::Sis:   return "sis";
        case ModelKind::Lv:    return "lv";
        case ModelKind::Lvsis: return "lvsis";
    }
    throw ConfigError("unknown model kind");
}

ModelKind parse_kind(const std::string& name) {
    if (name == "sir")   return ModelKind::Sir;
    if (name == "sis")   return ModelKind::Sis;
    if (name == "lv")    return ModelKind::Lv;
    if (name == "lvsis") return ModelKind::Lvsis;
    throw ConfigError("unknown model kind: " + name);
}

}  // namespace ecodyn
