#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ecodyn/integrate.hpp"
#include "ecodyn/tape.hpp"

namespace ecodyn {

/// Per-component affine change of coordinates used by the learned vector
/// fields: inputs enter the network as (y - mean) / std and raw-space
/// derivatives are recovered by scaling outputs with std.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;
    bool enabled = false;

    static Normalization identity(int m);

    std::vector<double> in_scale() const;   // 1/std   (1 when disabled)
    std::vector<double> in_shift() const;   // -mean/std (0 when disabled)
    std::vector<double> out_scale() const;  // std     (1 when disabled)
};

/// Population mean/std per component, std floored at 1e-8.
Normalization fit_normalization(const std::vector<StateVector>& states);

/// Fully connected tanh network, linear output layer. widths.front() and
/// widths.back() must equal the model dimension.
struct MlpSpec {
    std::vector<int> widths;

    int layers() const { return static_cast<int>(widths.size()) - 1; }
    int param_count() const;
};

/// NODE_1: M-64-M.  NODE_2: M-64-128-128-64-M.
MlpSpec node1_spec(int m);
MlpSpec node2_spec(int m);

/// Zero biases, Glorot-uniform weights, seeded.
ParamVector init_mlp_params(const MlpSpec& spec, std::uint64_t seed);

/// W^(L) tanh(... tanh(W^(1) y + b^(1)) ...) + b^(L); pure.
std::vector<double> mlp_forward(const MlpSpec& spec, const ParamVector& theta,
                                std::span<const double> y);

/// Same map recorded on a tape; `x` holds ncols stacked input columns.
ad::Var mlp_forward_tape(ad::Tape& t, const MlpSpec& spec, ad::Var theta, ad::Var x,
                         int ncols);

struct TrainConfig {
    int iterations = 500;
    double lr = 0.01;
    std::uint64_t seed = 0;
    bool normalize = false;
};

struct TrainResult {
    ParamVector params;  // best-loss parameters seen
    double best_loss = 0.0;
    Normalization norm;
    std::vector<std::array<double, 3>> log;  // iteration, loss, grad norm
};

void write_training_log(const TrainResult& result, const std::string& path);

/// Vector field recorded on a tape: maps the current state columns to their
/// time derivative.
using TapeField = std::function<ad::Var(ad::Tape&, ad::Var)>;

/// One classic-RK4 step of `f` recorded on the tape. The update is combined
/// exactly like rk_step, so plain and recorded rollouts agree bitwise.
ad::Var rk4_tape_step(ad::Tape& t, const TapeField& f, ad::Var y, double tau);

/// Evaluates loss (and, when grad_out is non-null, its gradient) at params;
/// throws NumericalBlowup on non-finite values.
using LossGradFn = std::function<double(const ParamVector& params, std::vector<double>* grad_out)>;

/// Adam over an arbitrary loss evaluator. A non-finite loss (or gradient)
/// rejects the iterate, restores the previous parameters and halves the
/// learning rate for the remainder of the run. Returns the best-loss
/// parameters seen (the final update included).
TrainResult run_adam_raw(const LossGradFn& fn, ParamVector init, const TrainConfig& cfg);

/// Same, with the loss given as a tape program re-recorded each iteration.
TrainResult run_adam(const std::function<ad::Var(ad::Tape&, ad::Var)>& loss_program,
                     ParamVector init, const TrainConfig& cfg);

/// Full-trajectory rollout loss (mean squared error against the training
/// points), Adam for cfg.iterations.
TrainResult train_node(const Trajectory& data, const MlpSpec& spec, const TrainConfig& cfg);

/// RK4 rollout of the learned field from y0 over the grid.
Trajectory predict(const MlpSpec& spec, const ParamVector& theta, const Normalization& norm,
                   const StateVector& y0, const TimeGrid& grid,
                   std::vector<std::string> labels = {});

}  // namespace ecodyn
