#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ecodyn/errors.hpp"

namespace ecodyn {

using StateVector = std::vector<double>;

enum class ModelKind { Sir, Sis, Lv, Lvsis };

/// SIR: u_s' = -sigma u_s u_i, u_i' = sigma u_s u_i - omega u_i, u_r' = omega u_i.
struct SirParams {
    double sigma = 0.5;  // infection rate
    double omega = 0.1;  // recovery rate
};

/// SIS: like SIR but recovered individuals return to the susceptible pool.
struct SisParams {
    double sigma = 0.5;
    double omega = 0.1;
};

/// Predator-prey with quadratic prey mortality:
///   u' = alpha u - beta u v - eta u^2
///   v' = delta u v - gamma v
struct LvParams {
    double alpha = 0.5;   // prey birth rate
    double beta  = 0.8;   // predation rate
    double delta = 0.4;   // predator reproduction rate
    double gamma = 0.3;   // predator death rate
    double eta   = 0.05;  // quadratic prey mortality
};

/// Coupled predator-prey / SIS model over (u_s, u_i, v_s, v_i):
/// susceptible and infected prey and predators, 20 rate constants.
/// Naming: beta_xy = predation on prey class x by predator class y,
/// delta_xy = reproduction of predator class x from prey class y,
/// sigma_*  = disease transmission, omega_* = recovery.
struct LvsisParams {
    double alpha_s = 0.04, alpha_i = 0.02;                  // prey growth
    double beta_ss = 0.02, beta_si = 0.02;                  // predation on u_s
    double beta_is = 0.02, beta_ii = 0.02;                  // predation on u_i
    double gamma_us = 0.01, gamma_ui = 0.01;                // prey quadratic mortality
    double gamma_vs = 0.01, gamma_vi = 0.01;                // predator linear mortality
    double delta_ss = 0.04, delta_si = 0.04;                // v_s reproduction
    double delta_is = 0.04, delta_ii = 0.041;               // v_i reproduction
    double sigma_s_i = 0.01, sigma_s_vi = 0.01;             // prey infection
    double sigma_vs_i = 0.01, sigma_vs_vi = 0.01;           // predator infection
    double omega_i = 0.01, omega_vi = 0.01;                 // recovery
};

struct ModelSpec {
    ModelKind kind = ModelKind::Sir;
    std::variant<SirParams, SisParams, LvParams, LvsisParams> params;
    StateVector initial_state;

    int dimension() const { return model_dimension(kind); }

    static int model_dimension(ModelKind k);
};

/// Evaluates f(y) for the model. Pure; throws DimensionError on size mismatch.
StateVector rhs(const ModelSpec& model, const StateVector& y);

/// Canonical parameterization and initial condition for each model.
/// The LVSIS defaults are the coefficients displayed with the reference
/// equations (gamma_us = gamma_ui = 0.01, delta_ii = 0.041); the narrated
/// variant with gamma_us = gamma_ui = 0.02 and delta_ii = 0.04 is available
/// via lvsis_params_narrative().
ModelSpec default_model(ModelKind kind);

/// Alternative LVSIS rates as narrated in prose (see default_model note).
LvsisParams lvsis_params_narrative();

std::vector<std::string> component_labels(ModelKind kind);

std::string kind_name(ModelKind kind);
ModelKind parse_kind(const std::string& name);

}  // namespace ecodyn
