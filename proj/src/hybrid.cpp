#include "ecodyn/hybrid.hpp"

#include <algorithm>
#include <cmath>

namespace ecodyn {

Normalization compute_normalization(const std::vector<Field>& fields) {
    if (fields.empty()) throw DataError("compute_normalization: no data");
    const int m = fields[0].components;
    const int nodes = fields[0].grid.nodes();
    Normalization norm;
    norm.mean.assign(m, 0.0);
    norm.stddev.assign(m, 0.0);
    norm.enabled = true;
    const double count = static_cast<double>(fields.size()) * nodes;
    for (const auto& f : fields)
        for (int c = 0; c < m; ++c)
            for (int n = 0; n < nodes; ++n) norm.mean[c] += f.at(c, n);
    for (auto& v : norm.mean) v /= count;
    for (const auto& f : fields)
        for (int c = 0; c < m; ++c)
            for (int n = 0; n < nodes; ++n) {
                const double d = f.at(c, n) - norm.mean[c];
                norm.stddev[c] += d * d;
            }
    for (auto& v : norm.stddev) v = std::max(std::sqrt(v / count), 1e-8);
    return norm;
}

Field hybrid_rhs(const HybridSpec& spec, const ParamVector& theta, const Field& field) {
    if (field.components != spec.components())
        throw DimensionError("hybrid_rhs: component mismatch");
    Field out = apply(spec.diffusion, field);
    const int nodes = field.grid.nodes();
    const int m = field.components;
    const auto in_scale = spec.norm.in_scale();
    const auto in_shift = spec.norm.in_shift();
    const auto out_scale = spec.norm.out_scale();
    std::vector<double> x(m);
    for (int n = 0; n < nodes; ++n) {
        for (int c = 0; c < m; ++c) x[c] = field.at(c, n) * in_scale[c] + in_shift[c];
        const auto f = mlp_forward(spec.reaction, theta, x);
        for (int c = 0; c < m; ++c) out.at(c, n) += f[c] * out_scale[c] + 0.0;
    }
    return out;
}

namespace {

// Columns are (window, node) pairs; each column holds one node's M values.
void pack_fields(const std::vector<Field>& data, const std::vector<int>& starts,
                 int offset, std::vector<double>& out) {
    const int m = data[0].components;
    const int nodes = data[0].grid.nodes();
    out.resize(static_cast<std::size_t>(starts.size()) * nodes * m);
    std::size_t k = 0;
    for (int s : starts) {
        const Field& f = data[s + offset];
        for (int n = 0; n < nodes; ++n)
            for (int c = 0; c < m; ++c) out[k++] = f.at(c, n);
    }
}

}  // namespace

TrainResult train_hybrid(const std::vector<Field>& data, double tau, const HybridSpec& spec,
                         const TrainConfig& cfg) {
    const int w = spec.window_length;
    if (!(tau > 0.0)) throw ConfigError("train_hybrid: tau must be positive");
    if (w < 2) throw ConfigError("train_hybrid: window_length must be >= 2");
    if (spec.stride < 1) throw ConfigError("train_hybrid: stride must be >= 1");
    if (static_cast<int>(data.size()) < w)
        throw DataError("train_hybrid: training split shorter than one window");
    const int m = spec.components();
    if (data[0].components != m)
        throw DimensionError("train_hybrid: field components != operator components");
    if (spec.reaction.widths.front() != m || spec.reaction.widths.back() != m)
        throw ConfigError("train_hybrid: reaction network width != component count");

    const Normalization norm =
        spec.norm.enabled ? spec.norm : compute_normalization(data);
    const int nodes = data[0].grid.nodes();

    std::vector<int> starts;
    for (int s = 0; s + w <= static_cast<int>(data.size()); s += spec.stride)
        starts.push_back(s);
    const int n_windows = static_cast<int>(starts.size());

    // Windows are processed in fixed-size chunks: full batching would hold
    // every stage of every window on the tape at once.
    const int max_cols = 256;
    const int windows_per_chunk = std::max(1, max_cols / nodes);
    std::vector<std::vector<int>> chunks;
    for (int i = 0; i < n_windows; i += windows_per_chunk)
        chunks.emplace_back(starts.begin() + i,
                            starts.begin() + std::min(i + windows_per_chunk, n_windows));

    const ad::BlockOperator block_op = ad::BlockOperator::from(spec.diffusion.blocks);
    const auto in_scale = norm.in_scale();
    const auto in_shift = norm.in_shift();
    const auto out_scale = norm.out_scale();
    const std::vector<double> zero(m, 0.0);
    const double inv_count = 1.0 / (static_cast<double>(n_windows) * w);

    ad::Tape tape;
    std::vector<double> packed;

    LossGradFn fn = [&](const ParamVector& params, std::vector<double>* grad_out) {
        double total = 0.0;
        if (grad_out) grad_out->assign(params.theta.size(), 0.0);
        for (const auto& chunk : chunks) {
            const int cols = static_cast<int>(chunk.size()) * nodes;
            tape.reset();
            ad::Var th = tape.leaf(params.theta);
            TapeField field = [&](ad::Tape& t, ad::Var y) {
                ad::Var diff = t.block_sparse_mv(block_op, y,
                                                 static_cast<int>(chunk.size()));
                ad::Var h = t.cw_scale_shift(y, in_scale, in_shift);
                h = mlp_forward_tape(t, spec.reaction, th, h, cols);
                h = t.cw_scale_shift(h, out_scale, zero);
                return t.add(diff, h);
            };
            pack_fields(data, chunk, 0, packed);
            ad::Var y = tape.leaf(packed);
            ad::Var loss = tape.sum(tape.square(tape.sub(y, tape.leaf(packed))));
            for (int step = 1; step < w; ++step) {
                y = rk4_tape_step(tape, field, y, tau);
                pack_fields(data, chunk, step, packed);
                loss = tape.add(loss, tape.sum(tape.square(tape.sub(y, tape.leaf(packed)))));
            }
            const double value = tape.scalar(loss);
            if (!std::isfinite(value)) throw NumericalBlowup("train_hybrid: non-finite loss");
            total += value;
            if (grad_out) {
                tape.backward(loss);
                auto a = tape.adjoint(th);
                for (std::size_t i = 0; i < a.size(); ++i) (*grad_out)[i] += a[i];
            }
        }
        if (grad_out)
            for (auto& g : *grad_out) g *= inv_count;
        return total * inv_count;
    };

    TrainResult result = run_adam_raw(fn, init_mlp_params(spec.reaction, cfg.seed), cfg);
    result.norm = norm;
    return result;
}

std::vector<Field> predict_hybrid(const HybridSpec& spec, const ParamVector& theta,
                                  const Field& ic, const TimeGrid& grid) {
    if (ic.components != spec.components())
        throw DimensionError("predict_hybrid: component mismatch");
    const int nodes = ic.grid.nodes();
    const int m = ic.components;
    const auto in_scale = spec.norm.in_scale();
    const auto in_shift = spec.norm.in_shift();
    const auto out_scale = spec.norm.out_scale();

    VectorField g = [&](const StateVector& flat) {
        StateVector out(flat.size());
        for (int c = 0; c < m; ++c)
            spec.diffusion.blocks[c].matvec(flat.data() + c * nodes,
                                            out.data() + c * nodes);
        std::vector<double> x(m);
        for (int node = 0; node < nodes; ++node) {
            for (int c = 0; c < m; ++c)
                x[c] = flat[c * nodes + node] * in_scale[c] + in_shift[c];
            const auto f = mlp_forward(spec.reaction, theta, x);
            for (int c = 0; c < m; ++c) out[c * nodes + node] += f[c] * out_scale[c] + 0.0;
        }
        return out;
    };

    Trajectory flat = integrate(g, ic.values, grid);
    std::vector<Field> out;
    out.reserve(grid.n_steps);
    for (const auto& state : flat.states) {
        Field f(ic.grid, m);
        f.values = state;
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace ecodyn
