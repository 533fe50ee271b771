#pragma once

#include <span>
#include <string>
#include <vector>

#include "ecodyn/integrate.hpp"
#include "ecodyn/spatial.hpp"

namespace ecodyn {

/// ||pred - ref||_2 / ||ref||_2 * 100.  Throws MetricError when ||ref|| = 0.
double pointwise_error(std::span<const double> pred, std::span<const double> ref);

/// Stacked relative l2 error in percent over states [0, upto):
///   (sum_n ||pred_n - ref_n||^2)^(1/2) / (sum_n ||ref_n||^2)^(1/2) * 100.
/// upto < 0 means the full length.
double aggregate_error(const std::vector<StateVector>& pred,
                       const std::vector<StateVector>& ref, int upto = -1);

double aggregate_error(const Trajectory& pred, const Trajectory& ref, int upto = -1);

/// Spatio-temporal variant: the component x node values at each time step
/// are stacked into one vector per n.
double aggregate_error(const std::vector<Field>& pred, const std::vector<Field>& ref,
                       int upto = -1);

struct ErrorReport {
    std::string run_id;
    std::string model;
    std::string method;
    double proportion = 1.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    double e_train = 0.0;
    double e_full = 0.0;
    std::vector<std::pair<int, double>> pointwise;  // (time index, e^n)
    std::string error_tag;                          // empty on success
};

std::string results_csv_header();
std::string results_csv_row(const ErrorReport& report);
void append_results_csv(const std::string& path, const ErrorReport& report);

}  // namespace ecodyn
