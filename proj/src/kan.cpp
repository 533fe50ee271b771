#include "ecodyn/kan.hpp"

#include <cmath>
#include <random>

namespace ecodyn {

int KanSpec::param_count() const {
    int count = 0;
    for (int l = 0; l < layers(); ++l) count += widths[l] * widths[l + 1] * per_edge();
    return count;
}

ad::KanLayerDesc KanSpec::layer_desc(int l) const {
    return {basis, widths[l], widths[l + 1], base_tanh};
}

KanSpec kanode_spec(int m) {
    KanSpec spec;
    spec.widths = {m, 5, m};
    return spec;
}

double spline_eval(const SplineBasis& basis, std::span<const double> ctrl,
                   double base_scale, double x) {
    if (static_cast<int>(ctrl.size()) != basis.n_ctrl())
        throw DimensionError("spline_eval: control point count mismatch");
    const auto e = basis.eval(x);
    const double* c = ctrl.data() + e.first;
    return c[0] * e.b[0] + c[1] * e.b[1] + c[2] * e.b[2] + c[3] * e.b[3] +
           base_scale * std::tanh(x);
}

ParamVector init_kan_params(const KanSpec& spec, std::uint64_t seed) {
    if (spec.layers() < 1) throw ConfigError("KanSpec: need at least one layer");
    std::mt19937_64 eng(seed);
    auto uniform = [&eng](double a) {
        const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
        return a * (2.0 * u - 1.0);
    };
    ParamVector p;
    p.theta.reserve(spec.param_count());
    const int nc = spec.basis.n_ctrl();
    for (int l = 0; l < spec.layers(); ++l) {
        const int fan_in = spec.widths[l], fan_out = spec.widths[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        const int off = static_cast<int>(p.theta.size());
        for (int e = 0; e < fan_in * fan_out; ++e) {
            for (int k = 0; k < nc; ++k) p.theta.push_back(uniform(0.1 * bound));
            if (spec.base_tanh) p.theta.push_back(uniform(bound));
        }
        p.layout.push_back({"L" + std::to_string(l + 1), off,
                            static_cast<int>(p.theta.size()) - off});
    }
    return p;
}

std::vector<double> kan_forward(const KanSpec& spec, const ParamVector& theta,
                                std::span<const double> y) {
    if (theta.size() != spec.param_count())
        throw ConfigError("kan_forward: parameter layout does not match spec");
    if (static_cast<int>(y.size()) != spec.widths.front())
        throw DimensionError("kan_forward: input dimension mismatch");
    std::vector<double> x(y.begin(), y.end());
    const int nc = spec.basis.n_ctrl();
    const int pe = spec.per_edge();
    int off = 0;
    for (int l = 0; l < spec.layers(); ++l) {
        const int n_in = spec.widths[l], n_out = spec.widths[l + 1];
        std::vector<SplineBasis::Eval> evals(n_in);
        std::vector<double> th(n_in);
        for (int i = 0; i < n_in; ++i) {
            evals[i] = spec.basis.eval(x[i]);
            th[i] = std::tanh(x[i]);
        }
        std::vector<double> z(n_out, 0.0);
        for (int j = 0; j < n_out; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n_in; ++i) {
                const double* edge = theta.theta.data() + off + (j * n_in + i) * pe;
                const double* c = edge + evals[i].first;
                double term = c[0] * evals[i].b[0] + c[1] * evals[i].b[1] +
                              c[2] * evals[i].b[2] + c[3] * evals[i].b[3];
                if (spec.base_tanh) term += edge[nc] * th[i];
                acc += term;
            }
            z[j] = acc;
        }
        off += n_in * n_out * pe;
        x = z;
    }
    return x;
}

ad::Var kan_forward_tape(ad::Tape& t, const KanSpec& spec,
                         const std::vector<ad::KanLayerDesc>& descs, ad::Var theta,
                         ad::Var x, int ncols) {
    int off = 0;
    ad::Var h = x;
    for (int l = 0; l < spec.layers(); ++l) {
        const auto& desc = descs[l];
        ad::Var params = t.segment(theta, off, desc.n_params());
        off += desc.n_params();
        h = t.kan_layer(params, h, desc, ncols);
    }
    return h;
}

TrainResult train_kan(const Trajectory& data, const KanSpec& spec, const TrainConfig& cfg) {
    if (data.grid.n_steps < 2) throw DataError("train_kan: need at least 2 points");
    if (spec.widths.front() != data.dimension() || spec.widths.back() != data.dimension())
        throw ConfigError("train_kan: network width does not match data dimension");

    const Normalization norm = fit_normalization(data.states);
    const double tau = data.grid.tau();
    const int n = data.grid.n_steps;
    std::vector<ad::KanLayerDesc> descs;
    for (int l = 0; l < spec.layers(); ++l) descs.push_back(spec.layer_desc(l));
    const std::vector<double> zero(norm.mean.size(), 0.0);

    auto loss_program = [&](ad::Tape& t, ad::Var th) {
        TapeField field = [&](ad::Tape& tt, ad::Var y) {
            ad::Var h = tt.cw_scale_shift(y, norm.in_scale(), norm.in_shift());
            h = kan_forward_tape(tt, spec, descs, th, h, 1);
            return tt.cw_scale_shift(h, norm.out_scale(), zero);
        };
        ad::Var y = t.leaf(data.states[0]);
        ad::Var loss = t.sum(t.square(t.sub(y, t.leaf(data.states[0]))));
        for (int step = 1; step < n; ++step) {
            y = rk4_tape_step(t, field, y, tau);
            loss = t.add(loss, t.sum(t.square(t.sub(y, t.leaf(data.states[step])))));
        }
        return t.scale(loss, 1.0 / n);
    };

    TrainResult result = run_adam(loss_program, init_kan_params(spec, cfg.seed), cfg);
    result.norm = norm;
    return result;
}

Trajectory predict_kan(const KanSpec& spec, const ParamVector& theta,
                       const Normalization& norm, const StateVector& y0,
                       const TimeGrid& grid, std::vector<std::string> labels) {
    if (static_cast<int>(y0.size()) != spec.widths.front())
        throw DimensionError("predict_kan: initial state dimension mismatch");
    const auto in_scale = norm.in_scale();
    const auto in_shift = norm.in_shift();
    const auto out_scale = norm.out_scale();
    VectorField f = [&](const StateVector& y) {
        std::vector<double> x(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] * in_scale[i] + in_shift[i];
        std::vector<double> out = kan_forward(spec, theta, x);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * out_scale[i] + 0.0;
        return out;
    };
    Trajectory traj = integrate(f, y0, grid, std::move(labels));
    traj.provenance.model = "kan";
    return traj;
}

}  // namespace ecodyn
