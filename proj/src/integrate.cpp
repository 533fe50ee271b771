#include "ecodyn/integrate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ecodyn {

RkTableau RkTableau::classic_rk4() {
    RkTableau t;
    t.a = {{0.0, 0.0, 0.0, 0.0},
           {0.5, 0.0, 0.0, 0.0},
           {0.0, 0.5, 0.0, 0.0},
           {0.0, 0.0, 1.0, 0.0}};
    t.b = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    return t;
}

TimeGrid::TimeGrid(double t0_, double t_max_, int n_steps_)
    : t0(t0_), t_max(t_max_), n_steps(n_steps_) {
    if (n_steps < 2) throw ConfigError("TimeGrid: n_steps must be >= 2");
    if (!(t_max > t0)) throw ConfigError("TimeGrid: t_max must exceed t0");
}

namespace {

bool all_finite(const StateVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

StateVector rk_step(const VectorField& f, const StateVector& y, double tau,
                    const RkTableau& tableau) {
    if (!(tau > 0.0)) throw ConfigError("rk_step: tau must be positive");
    const int s = tableau.stages();
    const std::size_t m = y.size();
    std::vector<StateVector> k(s);
    StateVector arg(m);
    for (int i = 0; i < s; ++i) {
        arg = y;
        for (int j = 0; j < i; ++j) {
            const double aij = tableau.a[i][j];
            if (aij == 0.0) continue;
            for (std::size_t c = 0; c < m; ++c) arg[c] += tau * aij * k[j][c];
        }
        k[i] = f(arg);
        if (k[i].size() != m)
            throw DimensionError("rk_step: vector field changed dimension");
        if (!all_finite(k[i]))
            throw NumericalBlowup("rk_step: non-finite value at stage " + std::to_string(i),
                                  -1, i);
    }
    StateVector out = y;
    for (std::size_t c = 0; c < m; ++c) {
        double acc = 0.0;
        for (int i = 0; i < s; ++i) acc += tableau.b[i] * k[i][c];
        out[c] += tau * acc;
    }
    return out;
}

Trajectory integrate(const VectorField& f, const StateVector& y0, const TimeGrid& grid,
                     std::vector<std::string> labels) {
    const RkTableau rk4 = RkTableau::classic_rk4();
    Trajectory traj;
    traj.grid = grid;
    traj.labels = std::move(labels);
    traj.states.reserve(grid.n_steps);
    traj.states.push_back(y0);
    for (int n = 0; n + 1 < grid.n_steps; ++n) {
        try {
            traj.states.push_back(rk_step(f, traj.states.back(), grid.tau(), rk4));
        } catch (const NumericalBlowup& e) {
            throw NumericalBlowup("integration blew up at step " + std::to_string(n) +
                                      ": " + e.what(),
                                  n, e.stage);
        }
    }
    return traj;
}

Trajectory simulate(const ModelSpec& model, const TimeGrid& grid) {
    Trajectory traj = integrate([&model](const StateVector& y) { return rhs(model, y); },
                                model.initial_state, grid, component_labels(model.kind));
    traj.provenance.model = kind_name(model.kind);
    return traj;
}

double GaussianStream::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // 53-bit uniforms; u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

Trajectory add_noise(const Trajectory& traj, double noise_sigma, std::uint64_t seed) {
    if (noise_sigma < 0.0) throw ConfigError("add_noise: noise_sigma must be >= 0");
    Trajectory out = traj;
    out.provenance.noise_sigma = noise_sigma;
    out.provenance.seed = seed;
    out.provenance.noised = noise_sigma > 0.0;
    if (noise_sigma == 0.0) return out;
    GaussianStream g(seed);
    for (auto& state : out.states)
        for (auto& x : state) x += noise_sigma * g.next();
    return out;
}

std::pair<Trajectory, Trajectory> split(const Trajectory& traj, double proportion) {
    if (!(proportion > 0.0) || proportion > 1.0)
        throw ConfigError("split: proportion must lie in (0, 1]");
    const int n_train =
        static_cast<int>(std::llround(proportion * static_cast<double>(traj.grid.n_steps)));
    if (n_train < 2)
        throw ConfigError("split: proportion keeps fewer than 2 points");
    Trajectory train = traj;
    if (n_train < traj.grid.n_steps) {
        train.states.assign(traj.states.begin(), traj.states.begin() + n_train);
        train.grid = TimeGrid(traj.grid.t0, traj.grid.time(n_train - 1), n_train);
    }
    return {std::move(train), traj};
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "t";
    for (const auto& label : traj.labels) out << "," << label;
    out << "\n";
    char buf[32];
    for (int n = 0; n < traj.grid.n_steps; ++n) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.grid.time(n));
        out << buf;
        for (double x : traj.states[n]) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << "," << buf;
        }
        out << "\n";
    }
    nlohmann::json meta{{"model", traj.provenance.model},
                        {"noise_sigma", traj.provenance.noise_sigma},
                        {"seed", traj.provenance.seed},
                        {"noised", traj.provenance.noised},
                        {"t0", traj.grid.t0},
                        {"t_max", traj.grid.t_max},
                        {"n_steps", traj.grid.n_steps},
                        {"labels", traj.labels}};
    std::ofstream mout(path + ".meta.json");
    mout << meta.dump(2) << "\n";
}

Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    Trajectory traj;
    {
        std::stringstream header(line);
        std::string cell;
        bool first = true;
        while (std::getline(header, cell, ',')) {
            if (first) {
                if (cell != "t") throw DataError(path + ": first column must be t");
                first = false;
            } else {
                traj.labels.push_back(cell);
            }
        }
    }
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        StateVector state;
        bool first = true;
        while (std::getline(row, cell, ',')) {
            const double v = std::stod(cell);
            if (first) {
                times.push_back(v);
                first = false;
            } else {
                state.push_back(v);
            }
        }
        if (state.size() != traj.labels.size())
            throw DataError(path + ": ragged row");
        traj.states.push_back(std::move(state));
    }
    if (times.size() < 2) throw DataError(path + ": need at least 2 points");
    traj.grid = TimeGrid(times.front(), times.back(), static_cast<int>(times.size()));

    const std::string meta_path = path + ".meta.json";
    if (std::filesystem::exists(meta_path)) {
        std::ifstream min(meta_path);
        nlohmann::json meta = nlohmann::json::parse(min);
        traj.provenance.model = meta.value("model", std::string{});
        traj.provenance.noise_sigma = meta.value("noise_sigma", 0.0);
        traj.provenance.seed = meta.value("seed", std::uint64_t{0});
        traj.provenance.noised = meta.value("noised", false);
    }
    return traj;
}

}  // namespace ecodyn
