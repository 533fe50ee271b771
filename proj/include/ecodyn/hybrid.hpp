#pragma once

#include "ecodyn/neural_ode.hpp"
#include "ecodyn/spatial.hpp"

namespace ecodyn {

/// Known, frozen diffusion plus a learned nodewise reaction network:
///   dy/dt = L y + out_scale . net((y_node - mean)/std).
/// One network is shared by every node. Training minimizes the mean squared
/// error over short rollout windows started from observed fields.
struct HybridSpec {
    DiffusionOperator diffusion;
    MlpSpec reaction;
    Normalization norm;
    int window_length = 10;
    int stride = 5;

    int components() const { return diffusion.components; }
};

/// Global per-component mean/std pooled over all time steps and nodes
/// (population convention, std floored at 1e-8).
Normalization compute_normalization(const std::vector<Field>& fields);

/// apply(diffusion, field) + the nodewise network output.
Field hybrid_rhs(const HybridSpec& spec, const ParamVector& theta, const Field& field);

/// Window-averaged rollout loss over [n, n+W) starting at every stride-th
/// observed field; Adam; returns the best parameters seen. tau is the data
/// sampling step.
TrainResult train_hybrid(const std::vector<Field>& data, double tau, const HybridSpec& spec,
                         const TrainConfig& cfg);

/// RK4 rollout of the hybrid field from ic over the grid.
std::vector<Field> predict_hybrid(const HybridSpec& spec, const ParamVector& theta,
                                  const Field& ic, const TimeGrid& grid);

}  // namespace ecodyn
