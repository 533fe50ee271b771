#pragma once

#include <span>
#include <string>
#include <vector>

#include "ecodyn/integrate.hpp"

namespace ecodyn {

/// Monomial candidate library over the state components, graded
/// lexicographic order: 1, then linear terms, then quadratic products, ...
struct FunctionLibrary {
    std::vector<std::string> labels;             // component names
    int degree = 2;
    std::vector<std::vector<int>> exponents;     // per term, one exponent per component
    std::vector<std::string> names;              // printable forms

    int terms() const { return static_cast<int>(exponents.size()); }
    double eval_term(int term, std::span<const double> y) const;
    std::vector<double> eval_row(std::span<const double> y) const;
};

FunctionLibrary build_library(const std::vector<std::string>& labels, int degree);

/// dy/dt estimates on the trajectory grid: second-order central differences
/// inside, second-order one-sided at the endpoints. Needs >= 3 points.
std::vector<std::vector<double>> estimate_derivatives(const Trajectory& traj);

/// 1D Rudin-Osher-Fatemi minimizer of 0.5||x - series||^2 + weight TV(x),
/// solved by accelerated projected gradient on the dual to duality gap 1e-8.
std::vector<double> tv_denoise(std::span<const double> series, double weight);

struct SparseModel {
    FunctionLibrary library;
    std::vector<std::vector<double>> xi;  // [term][component]
    double threshold = 0.001;
    double ridge_lambda = 0.0;
};

/// Sequential thresholded least squares: alternate a (ridge) least-squares
/// solve on the active set with hard thresholding |coef| < threshold, until
/// the active set is stable (at most 20 sweeps). Component fits are
/// independent. With ridge_lambda = 0 a rank-deficient active set raises
/// SolveError naming the component.
SparseModel stlsq(const std::vector<std::vector<double>>& theta_rows,
                  const std::vector<std::vector<double>>& dy, const FunctionLibrary& lib,
                  double threshold, double ridge_lambda);

/// Convenience pipeline: evaluates the library on the trajectory states and
/// regresses finite-difference derivatives (optionally TV-denoised first).
SparseModel fit_sindy(const Trajectory& data, int degree, double threshold,
                      double ridge_lambda, double tv_weight = 0.0);

/// RK4 rollout of the identified polynomial field.
Trajectory simulate_identified(const SparseModel& model, const StateVector& y0,
                               const TimeGrid& grid);

/// One line per component, coefficients to 3 decimals, zero terms omitted.
std::string render(const SparseModel& model);

std::string sparse_model_to_json(const SparseModel& model);
SparseModel sparse_model_from_json(const std::string& text);

}  // namespace ecodyn
