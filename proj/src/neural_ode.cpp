#include "ecodyn/neural_ode.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <random>

namespace ecodyn {

Normalization Normalization::identity(int m) {
    Normalization n;
    n.mean.assign(m, 0.0);
    n.stddev.assign(m, 1.0);
    n.enabled = false;
    return n;
}

std::vector<double> Normalization::in_scale() const {
    std::vector<double> s(mean.size(), 1.0);
    if (enabled)
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0 / stddev[i];
    return s;
}

std::vector<double> Normalization::in_shift() const {
    std::vector<double> s(mean.size(), 0.0);
    if (enabled)
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = -mean[i] / stddev[i];
    return s;
}

std::vector<double> Normalization::out_scale() const {
    std::vector<double> s(mean.size(), 1.0);
    if (enabled)
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = stddev[i];
    return s;
}

Normalization fit_normalization(const std::vector<StateVector>& states) {
    if (states.empty()) throw DataError("fit_normalization: no data");
    const std::size_t m = states[0].size();
    Normalization n;
    n.mean.assign(m, 0.0);
    n.stddev.assign(m, 0.0);
    n.enabled = true;
    for (const auto& s : states)
        for (std::size_t i = 0; i < m; ++i) n.mean[i] += s[i];
    for (auto& v : n.mean) v /= static_cast<double>(states.size());
    for (const auto& s : states)
        for (std::size_t i = 0; i < m; ++i) {
            const double d = s[i] - n.mean[i];
            n.stddev[i] += d * d;
        }
    for (auto& v : n.stddev)
        v = std::max(std::sqrt(v / static_cast<double>(states.size())), 1e-8);
    return n;
}

int MlpSpec::param_count() const {
    int count = 0;
    for (int l = 0; l < layers(); ++l) count += widths[l] * widths[l + 1] + widths[l + 1];
    return count;
}

MlpSpec node1_spec(int m) { return {{m, 64, m}}; }
MlpSpec node2_spec(int m) { return {{m, 64, 128, 128, 64, m}}; }

ParamVector init_mlp_params(const MlpSpec& spec, std::uint64_t seed) {
    if (spec.layers() < 2) throw ConfigError("MlpSpec: need at least one hidden layer");
    std::mt19937_64 eng(seed);
    auto uniform = [&eng](double a) {
        const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0,1)
        return a * (2.0 * u - 1.0);
    };
    ParamVector p;
    p.theta.reserve(spec.param_count());
    for (int l = 0; l < spec.layers(); ++l) {
        const int fan_in = spec.widths[l], fan_out = spec.widths[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        const int w0 = static_cast<int>(p.theta.size());
        for (int i = 0; i < fan_in * fan_out; ++i) p.theta.push_back(uniform(bound));
        p.layout.push_back({"W" + std::to_string(l + 1), w0, fan_in * fan_out});
        const int b0 = static_cast<int>(p.theta.size());
        for (int i = 0; i < fan_out; ++i) p.theta.push_back(0.0);
        p.layout.push_back({"b" + std::to_string(l + 1), b0, fan_out});
    }
    return p;
}

std::vector<double> mlp_forward(const MlpSpec& spec, const ParamVector& theta,
                                std::span<const double> y) {
    if (theta.size() != spec.param_count())
        throw ConfigError("mlp_forward: parameter layout does not match spec");
    if (static_cast<int>(y.size()) != spec.widths.front())
        throw DimensionError("mlp_forward: input dimension mismatch");
    std::vector<double> x(y.begin(), y.end());
    std::vector<double> z;
    int off = 0;
    for (int l = 0; l < spec.layers(); ++l) {
        const int n_in = spec.widths[l], n_out = spec.widths[l + 1];
        const double* w = theta.theta.data() + off;
        const double* b = w + n_in * n_out;
        z.assign(n_out, 0.0);
        for (int j = 0; j < n_out; ++j) {
            const double* wr = w + j * n_in;
            double acc = b[j];
            for (int i = 0; i < n_in; ++i) acc += wr[i] * x[i];
            z[j] = acc;
        }
        off += n_in * n_out + n_out;
        if (l + 1 < spec.layers())
            for (auto& v : z) v = std::tanh(v);
        x = z;
    }
    return x;
}

ad::Var mlp_forward_tape(ad::Tape& t, const MlpSpec& spec, ad::Var theta, ad::Var x,
                         int ncols) {
    int off = 0;
    ad::Var h = x;
    for (int l = 0; l < spec.layers(); ++l) {
        const int n_in = spec.widths[l], n_out = spec.widths[l + 1];
        ad::Var w = t.segment(theta, off, n_in * n_out);
        ad::Var b = t.segment(theta, off + n_in * n_out, n_out);
        off += n_in * n_out + n_out;
        h = t.affine(w, b, h, n_out, n_in, ncols);
        if (l + 1 < spec.layers()) h = t.tanh(h);
    }
    return h;
}

ad::Var rk4_tape_step(ad::Tape& t, const TapeField& f, ad::Var y, double tau) {
    ad::Var k1 = f(t, y);
    ad::Var k2 = f(t, t.add(y, t.scale(k1, tau * 0.5)));
    ad::Var k3 = f(t, t.add(y, t.scale(k2, tau * 0.5)));
    ad::Var k4 = f(t, t.add(y, t.scale(k3, tau * 1.0)));
    ad::Var acc = t.add(t.scale(k1, 1.0 / 6.0), t.scale(k2, 1.0 / 3.0));
    acc = t.add(acc, t.scale(k3, 1.0 / 3.0));
    acc = t.add(acc, t.scale(k4, 1.0 / 6.0));
    return t.add(y, t.scale(acc, tau));
}

void write_training_log(const TrainResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path);
    out << "iteration,loss,grad_norm\n";
    char buf[96];
    for (const auto& row : result.log) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g", static_cast<int>(row[0]), row[1],
                      row[2]);
        out << buf << "\n";
    }
}

TrainResult run_adam_raw(const LossGradFn& fn, ParamVector init, const TrainConfig& cfg) {
    if (cfg.iterations < 1) throw ConfigError("TrainConfig: iterations must be >= 1");
    const double inf = std::numeric_limits<double>::infinity();

    ParamVector params = std::move(init);
    ParamVector prev = params;
    TrainResult result;
    result.params = params;
    result.best_loss = inf;

    ad::AdamState adam;
    ad::AdamOptions opt;
    opt.lr = cfg.lr;

    std::vector<double> grad;
    for (int it = 0; it < cfg.iterations; ++it) {
        double loss;
        try {
            loss = fn(params, &grad);
            for (double g : grad)
                if (!std::isfinite(g)) throw NumericalBlowup("non-finite gradient");
        } catch (const NumericalBlowup&) {
            params = prev;
            opt.lr *= 0.5;
            result.log.push_back({static_cast<double>(it), inf, inf});
            continue;
        }
        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        result.log.push_back({static_cast<double>(it), loss, gnorm});
        if (loss < result.best_loss) {
            result.best_loss = loss;
            result.params = params;
        }
        prev = params;
        ad::adam_step(params.theta, grad, adam, opt);
    }
    // The final update is worth one more look.
    try {
        const double loss = fn(params, nullptr);
        if (std::isfinite(loss) && loss < result.best_loss) {
            result.best_loss = loss;
            result.params = params;
        }
    } catch (const NumericalBlowup&) {
    }
    return result;
}

TrainResult run_adam(const std::function<ad::Var(ad::Tape&, ad::Var)>& loss_program,
                     ParamVector init, const TrainConfig& cfg) {
    auto tape = std::make_shared<ad::Tape>();
    LossGradFn fn = [tape, &loss_program](const ParamVector& params,
                                          std::vector<double>* grad_out) {
        tape->reset();
        ad::Var th = tape->leaf(params.theta);
        ad::Var loss = loss_program(*tape, th);
        const double value = tape->scalar(loss);
        if (grad_out == nullptr) {
            if (!std::isfinite(value)) throw NumericalBlowup("non-finite loss");
            return value;
        }
        tape->backward(loss);  // throws on non-finite loss
        auto a = tape->adjoint(th);
        grad_out->assign(a.begin(), a.end());
        return value;
    };
    return run_adam_raw(fn, std::move(init), cfg);
}

namespace {

// f(y) = out_scale . net((y - mean)/std); the change of coordinates is a
// no-op when normalization is disabled.
ad::Var normalized_mlp_field(ad::Tape& t, const MlpSpec& spec, ad::Var theta, ad::Var y,
                             int ncols, const Normalization& norm) {
    ad::Var h = t.cw_scale_shift(y, norm.in_scale(), norm.in_shift());
    h = mlp_forward_tape(t, spec, theta, h, ncols);
    const std::vector<double> zero(norm.mean.size(), 0.0);
    return t.cw_scale_shift(h, norm.out_scale(), zero);
}

}  // namespace

TrainResult train_node(const Trajectory& data, const MlpSpec& spec, const TrainConfig& cfg) {
    if (data.grid.n_steps < 2) throw DataError("train_node: need at least 2 points");
    if (spec.widths.front() != data.dimension() || spec.widths.back() != data.dimension())
        throw ConfigError("train_node: network width does not match data dimension");

    const Normalization norm =
        cfg.normalize ? fit_normalization(data.states) : Normalization::identity(data.dimension());
    const double tau = data.grid.tau();
    const int n = data.grid.n_steps;

    auto loss_program = [&](ad::Tape& t, ad::Var th) {
        TapeField field = [&](ad::Tape& tt, ad::Var y) {
            return normalized_mlp_field(tt, spec, th, y, 1, norm);
        };
        ad::Var y = t.leaf(data.states[0]);
        ad::Var loss = t.sum(t.square(t.sub(y, t.leaf(data.states[0]))));
        for (int step = 1; step < n; ++step) {
            y = rk4_tape_step(t, field, y, tau);
            loss = t.add(loss, t.sum(t.square(t.sub(y, t.leaf(data.states[step])))));
        }
        return t.scale(loss, 1.0 / n);
    };

    TrainResult result = run_adam(loss_program, init_mlp_params(spec, cfg.seed), cfg);
    result.norm = norm;
    return result;
}

Trajectory predict(const MlpSpec& spec, const ParamVector& theta, const Normalization& norm,
                   const StateVector& y0, const TimeGrid& grid,
                   std::vector<std::string> labels) {
    if (static_cast<int>(y0.size()) != spec.widths.front())
        throw DimensionError("predict: initial state dimension mismatch");
    const auto in_scale = norm.in_scale();
    const auto in_shift = norm.in_shift();
    const auto out_scale = norm.out_scale();
    VectorField f = [&](const StateVector& y) {
        std::vector<double> x(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] * in_scale[i] + in_shift[i];
        std::vector<double> out = mlp_forward(spec, theta, x);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * out_scale[i] + 0.0;
        return out;
    };
    Trajectory traj = integrate(f, y0, grid, std::move(labels));
    traj.provenance.model = "mlp";
    return traj;
}

}  // namespace ecodyn
