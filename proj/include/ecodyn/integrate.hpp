#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ecodyn/models.hpp"

namespace ecodyn {

/// Explicit Runge-Kutta scheme, a strictly lower triangular.
struct RkTableau {
    std::vector<std::vector<double>> a;
    std::vector<double> b;

    int stages() const { return static_cast<int>(b.size()); }

    /// The classic 4th-order scheme (a21 = a32 = 1/2, a43 = 1,
    /// b = 1/6, 1/3, 1/3, 1/6).
    static RkTableau classic_rk4();
};

/// Uniform grid over [t0, t_max] including both endpoints, so
/// tau = (t_max - t0) / (n_steps - 1).
struct TimeGrid {
    double t0 = 0.0;
    double t_max = 1.0;
    int n_steps = 2;

    TimeGrid() = default;
    TimeGrid(double t0_, double t_max_, int n_steps_);

    double tau() const { return (t_max - t0) / (n_steps - 1); }
    double time(int n) const { return t0 + tau() * n; }
};

struct Provenance {
    std::string model;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    bool noised = false;
};

struct Trajectory {
    TimeGrid grid;
    std::vector<StateVector> states;
    std::vector<std::string> labels;
    Provenance provenance;

    int dimension() const { return states.empty() ? 0 : static_cast<int>(states[0].size()); }
};

using VectorField = std::function<StateVector(const StateVector&)>;

/// One explicit RK step y + tau * sum_i b_i k_i,
/// k_i = f(y + tau * sum_{j<i} a_ij k_j).
/// Throws NumericalBlowup (with the stage index) on non-finite values.
StateVector rk_step(const VectorField& f, const StateVector& y, double tau,
                    const RkTableau& tableau);

/// Integrates an arbitrary vector field over the grid with classic RK4.
Trajectory integrate(const VectorField& f, const StateVector& y0, const TimeGrid& grid,
                     std::vector<std::string> labels = {});

/// Integrates the model from its initial state.
Trajectory simulate(const ModelSpec& model, const TimeGrid& grid);

/// Adds i.i.d. N(0, sigma^2) to every component at every time point.
/// Deterministic for a fixed seed.
Trajectory add_noise(const Trajectory& traj, double noise_sigma, std::uint64_t seed);

/// (train, full): train holds the first round(p * n_steps) points.
std::pair<Trajectory, Trajectory> split(const Trajectory& traj, double proportion);

/// CSV with header `t,<label1>,...`, 17 significant digits, plus a sibling
/// <path>.meta.json carrying the provenance.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

/// Deterministic stream of standard normals: Box-Muller over mt19937_64.
/// std::normal_distribution is implementation-defined, this is not.
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
    double next();

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ecodyn
