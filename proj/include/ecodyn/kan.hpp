#pragma once

#include "ecodyn/neural_ode.hpp"
#include "ecodyn/spline.hpp"

namespace ecodyn {

/// Kolmogorov-Arnold network: every edge carries a learnable cubic-spline
/// univariate function (plus an optional tanh residual with trainable
/// scale), node values are sums over incoming edges. Inputs live in
/// normalized coordinates; the basis covers [-3, 3] with 6 spans by default.
struct KanSpec {
    std::vector<int> widths;
    SplineBasis basis;
    bool base_tanh = true;

    int layers() const { return static_cast<int>(widths.size()) - 1; }
    int per_edge() const { return basis.n_ctrl() + (base_tanh ? 1 : 0); }
    int param_count() const;
    ad::KanLayerDesc layer_desc(int l) const;
};

/// M-5-M, the shape used for every dataset.
KanSpec kanode_spec(int m);

/// Spline curve value plus the tanh residual; inputs outside the grid clamp
/// to the boundary span.
double spline_eval(const SplineBasis& basis, std::span<const double> ctrl,
                   double base_scale, double x);

/// Control points: small seeded uniform noise; residual scales: Glorot
/// uniform so the initial field behaves like a shallow tanh network.
ParamVector init_kan_params(const KanSpec& spec, std::uint64_t seed);

std::vector<double> kan_forward(const KanSpec& spec, const ParamVector& theta,
                                std::span<const double> y);

ad::Var kan_forward_tape(ad::Tape& t, const KanSpec& spec,
                         const std::vector<ad::KanLayerDesc>& descs, ad::Var theta,
                         ad::Var x, int ncols);

/// Same contract as train_node with the KAN as the vector field; data is
/// always normalized before entering the splines.
TrainResult train_kan(const Trajectory& data, const KanSpec& spec, const TrainConfig& cfg);

Trajectory predict_kan(const KanSpec& spec, const ParamVector& theta,
                       const Normalization& norm, const StateVector& y0,
                       const TimeGrid& grid, std::vector<std::string> labels = {});

}  // namespace ecodyn
