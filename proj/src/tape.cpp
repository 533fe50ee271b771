#include "ecodyn/tape.hpp"

#include <cmath>
#include <cstring>

namespace ecodyn::ad {

BlockOperator BlockOperator::from(const std::vector<Csr>& blocks) {
    BlockOperator op;
    op.blocks = blocks;
    op.blocks_t.reserve(blocks.size());
    for (const auto& b : blocks) op.blocks_t.push_back(b.transposed());
    return op;
}

Var Tape::push(OpKind op, int len) {
    Node n;
    n.op = op;
    n.off = val_.size();
    n.len = len;
    val_.resize(val_.size() + len);
    nodes_.push_back(n);
    return {static_cast<int>(nodes_.size()) - 1, len};
}

int Tape::new_payload_f(std::size_t size) {
    if (used_payload_f_ == payload_f_.size()) payload_f_.emplace_back();
    auto& buf = payload_f_[used_payload_f_];
    buf.resize(size);
    return static_cast<int>(used_payload_f_++);
}

int Tape::new_payload_i(std::size_t size) {
    if (used_payload_i_ == payload_i_.size()) payload_i_.emplace_back();
    auto& buf = payload_i_[used_payload_i_];
    buf.resize(size);
    return static_cast<int>(used_payload_i_++);
}

void Tape::reset() {
    nodes_.clear();
    val_.clear();
    adj_.clear();
    used_payload_f_ = 0;
    used_payload_i_ = 0;
    kan_descs_.clear();
    block_ops_.clear();
}

Var Tape::leaf(std::span<const double> v) {
    Var out = push(OpKind::Leaf, static_cast<int>(v.size()));
    std::memcpy(data(out.id), v.data(), v.size() * sizeof(double));
    return out;
}

Var Tape::leaf_zeros(int len) {
    Var out = push(OpKind::Leaf, len);
    std::memset(data(out.id), 0, len * sizeof(double));
    return out;
}

Var Tape::segment(Var a, int offset, int len) {
    if (offset < 0 || offset + len > a.len)
        throw DimensionError("tape segment out of range");
    Var out = push(OpKind::Segment, len);
    auto& n = nodes_.back();
    n.a = a.id;
    n.i0 = offset;
    std::memcpy(data(out.id), data(a.id) + offset, len * sizeof(double));
    return out;
}

Var Tape::add(Var a, Var b) {
    if (a.len != b.len) throw DimensionError("tape add: length mismatch");
    Var out = push(OpKind::Add, a.len);
    auto& n = nodes_.back();
    n.a = a.id;
    n.b = b.id;
    const double* pa = data(a.id);
    const double* pb = data(b.id);
    double* po = data(out.id);
    for (int i = 0; i < a.len; ++i) po[i] = pa[i] + pb[i];
    return out;
}

Var Tape::sub(Var a, Var b) {
    if (a.len != b.len) throw DimensionError("tape sub: length mismatch");
    Var out = push(OpKind::Sub, a.len);
    auto& n = nodes_.back();
    n.a = a.id;
    n.b = b.id;
    const double* pa = data(a.id);
    const double* pb = data(b.id);
    double* po = data(out.id);
    for (int i = 0; i < a.len; ++i) po[i] = pa[i] - pb[i];
    return out;
}

Var Tape::mul(Var a, Var b) {
    if (a.len != b.len) throw DimensionError("tape mul: length mismatch");
    Var out = push(OpKind::Mul, a.len);
    auto& n = nodes_.back();
    n.a = a.id;
    n.b = b.id;
    const double* pa = data(a.id);
    const double* pb = data(b.id);
    double* po = data(out.id);
    for (int i = 0; i < a.len; ++i) po[i] = pa[i] * pb[i];
    return out;
}

Var Tape::scale(Var a, double c) {
    Var out = push(OpKind::Scale, a.len);
    auto& n = nodes_.back();
    n.a = a.id;
    n.k = c;
    const double* pa = data(a.id);
    double* po = data(out.id);
    for (int i = 0; i < a.len; ++i) po[i] = c * pa[i];
    return out;
}

Var Tape::tanh(Var a) {
    Var out = push(OpKind::Tanh, a.len);
    nodes_.back().a = a.id;
    const double* pa = data(a.id);
    double* po = data(out.id);
    for (int i = 0; i < a.len; ++i) po[i] = std::tanh(pa[i]);
    return out;
}

Var Tape::square(Var a) {
    Var out = push(OpKind::Square, a.len);
    nodes_.back().a = a.id;
    const double* pa = data(a.id);
    double* po = data(out.id);
    for (int i = 0; i < a.len; ++i) po[i] = pa[i] * pa[i];
    return out;
}

Var Tape::sum(Var a) {
    Var out = push(OpKind::Sum, 1);
    nodes_.back().a = a.id;
    const double* pa = data(a.id);
    double acc = 0.0;
    for (int i = 0; i < a.len; ++i) acc += pa[i];
    *data(out.id) = acc;
    return out;
}

Var Tape::affine(Var w, Var bias, Var x, int n_out, int n_in, int ncols) {
    if (w.len != n_out * n_in || bias.len != n_out || x.len != n_in * ncols)
        throw DimensionError("tape affine: shape mismatch");
    Var out = push(OpKind::Affine, n_out * ncols);
    auto& n = nodes_.back();
    n.a = w.id;
    n.b = bias.id;
    n.c = x.id;
    n.i0 = n_out;
    n.i1 = n_in;
    n.i2 = ncols;
    const double* pw = data(w.id);
    const double* pb = data(bias.id);
    const double* px = data(x.id);
    double* po = data(out.id);
    for (int col = 0; col < ncols; ++col) {
        const double* xc = px + col * n_in;
        double* yc = po + col * n_out;
        for (int j = 0; j < n_out; ++j) {
            const double* wr = pw + j * n_in;
            double acc = pb[j];
            for (int i = 0; i < n_in; ++i) acc += wr[i] * xc[i];
            yc[j] = acc;
        }
    }
    return out;
}

Var Tape::cw_scale_shift(Var x, std::span<const double> scale,
                         std::span<const double> shift) {
    const int period = static_cast<int>(scale.size());
    if (shift.size() != scale.size() || x.len % period != 0)
        throw DimensionError("tape cw_scale_shift: shape mismatch");
    Var out = push(OpKind::CwScaleShift, x.len);
    auto& n = nodes_.back();
    n.a = x.id;
    n.i0 = period;
    n.aux = new_payload_f(2 * period);
    auto& consts = payload_f_[n.aux];
    std::memcpy(consts.data(), scale.data(), period * sizeof(double));
    std::memcpy(consts.data() + period, shift.data(), period * sizeof(double));
    const double* px = data(x.id);
    double* po = data(out.id);
    for (int i = 0; i < x.len; ++i) {
        const int c = i % period;
        po[i] = px[i] * consts[c] + consts[period + c];
    }
    return out;
}

Var Tape::kan_layer(Var params, Var x, const KanLayerDesc& desc, int ncols) {
    if (params.len != desc.n_params() || x.len != desc.n_in * ncols)
        throw DimensionError("tape kan_layer: shape mismatch");
    Var out = push(OpKind::KanLayer, desc.n_out * ncols);
    auto& n = nodes_.back();
    n.a = params.id;
    n.c = x.id;
    n.i2 = ncols;
    n.aux = new_payload_f(static_cast<std::size_t>(ncols) * desc.n_in * 10);
    const int spans_slot = new_payload_i(static_cast<std::size_t>(ncols) * desc.n_in);
    n.i0 = spans_slot;
    kan_descs_.resize(nodes_.size(), nullptr);
    kan_descs_.back() = &desc;

    auto& cache = payload_f_[n.aux];
    auto& spans = payload_i_[spans_slot];
    const double* pp = data(params.id);
    const double* px = data(x.id);
    double* po = data(out.id);
    const int pe = desc.per_edge();
    const int nc = desc.basis.n_ctrl();
    for (int col = 0; col < ncols; ++col) {
        const double* xc = px + col * desc.n_in;
        double* cc = cache.data() + static_cast<std::size_t>(col) * desc.n_in * 10;
        for (int i = 0; i < desc.n_in; ++i) {
            const auto e = desc.basis.eval(xc[i]);
            const double th = std::tanh(xc[i]);
            double* slot = cc + i * 10;
            slot[0] = e.b[0]; slot[1] = e.b[1]; slot[2] = e.b[2]; slot[3] = e.b[3];
            slot[4] = e.db[0]; slot[5] = e.db[1]; slot[6] = e.db[2]; slot[7] = e.db[3];
            slot[8] = th;
            slot[9] = 1.0 - th * th;
            spans[col * desc.n_in + i] = e.first;
        }
        double* yc = po + col * desc.n_out;
        for (int j = 0; j < desc.n_out; ++j) {
            double acc = 0.0;
            for (int i = 0; i < desc.n_in; ++i) {
                const double* edge = pp + (j * desc.n_in + i) * pe;
                const double* ctrl = edge + spans[col * desc.n_in + i];
                const double* slot = cc + i * 10;
                double term = ctrl[0] * slot[0] + ctrl[1] * slot[1] + ctrl[2] * slot[2] +
                              ctrl[3] * slot[3];
                if (desc.base_tanh) term += edge[nc] * slot[8];
                acc += term;
            }
            yc[j] = acc;
        }
    }
    return out;
}

Var Tape::block_sparse_mv(const BlockOperator& op, Var x, int groups) {
    const int m = static_cast<int>(op.blocks.size());
    const int nodes_per_group = op.blocks.empty() ? 0 : op.blocks[0].n;
    if (x.len != groups * nodes_per_group * m)
        throw DimensionError("tape block_sparse_mv: shape mismatch");
    Var out = push(OpKind::BlockSparseMv, x.len);
    auto& n = nodes_.back();
    n.a = x.id;
    n.i0 = groups;
    block_ops_.resize(nodes_.size(), nullptr);
    block_ops_.back() = &op;
    const double* px = data(x.id);
    double* po = data(out.id);
    const int group_len = nodes_per_group * m;
    for (int g = 0; g < groups; ++g)
        for (int c = 0; c < m; ++c)
            op.blocks[c].matvec(px + g * group_len + c, po + g * group_len + c, m);
    return out;
}

std::span<const double> Tape::value(Var v) const {
    return {data(v.id), static_cast<std::size_t>(v.len)};
}

double Tape::scalar(Var v) const {
    if (v.len != 1) throw DimensionError("tape scalar: not a scalar");
    return *data(v.id);
}

std::span<const double> Tape::adjoint(Var v) const {
    return {adj_.data() + nodes_[v.id].off, static_cast<std::size_t>(v.len)};
}

void Tape::backward(Var loss) {
    if (loss.len != 1) throw DimensionError("tape backward: loss must be scalar");
    const double value = *data(loss.id);
    if (!std::isfinite(value))
        throw NumericalBlowup("tape backward: non-finite loss value");
    adj_.assign(val_.size(), 0.0);
    adj_[nodes_[loss.id].off] = 1.0;

    for (int id = loss.id; id >= 0; --id) {
        const Node& n = nodes_[id];
        const double* d = adj_.data() + n.off;
        switch (n.op) {
            case OpKind::Leaf:
                break;
            case OpKind::Segment: {
                double* da = adj(n.a) + n.i0;
                for (int i = 0; i < n.len; ++i) da[i] += d[i];
                break;
            }
            case OpKind::Add: {
                double* da = adj(n.a);
                double* db = adj(n.b);
                for (int i = 0; i < n.len; ++i) da[i] += d[i];
                for (int i = 0; i < n.len; ++i) db[i] += d[i];
                break;
            }
            case OpKind::Sub: {
                double* da = adj(n.a);
                double* db = adj(n.b);
                for (int i = 0; i < n.len; ++i) da[i] += d[i];
                for (int i = 0; i < n.len; ++i) db[i] -= d[i];
                break;
            }
            case OpKind::Mul: {
                double* da = adj(n.a);
                double* db = adj(n.b);
                const double* va = data(n.a);
                const double* vb = data(n.b);
                for (int i = 0; i < n.len; ++i) da[i] += d[i] * vb[i];
                for (int i = 0; i < n.len; ++i) db[i] += d[i] * va[i];
                break;
            }
            case OpKind::Scale: {
                double* da = adj(n.a);
                for (int i = 0; i < n.len; ++i) da[i] += n.k * d[i];
                break;
            }
            case OpKind::Tanh: {
                double* da = adj(n.a);
                const double* vo = data(id);
                for (int i = 0; i < n.len; ++i) da[i] += d[i] * (1.0 - vo[i] * vo[i]);
                break;
            }
            case OpKind::Square: {
                double* da = adj(n.a);
                const double* va = data(n.a);
                for (int i = 0; i < n.len; ++i) da[i] += 2.0 * d[i] * va[i];
                break;
            }
            case OpKind::Sum: {
                double* da = adj(n.a);
                const double dv = d[0];
                const int alen = nodes_[n.a].len;
                for (int i = 0; i < alen; ++i) da[i] += dv;
                break;
            }
            case OpKind::Affine: {
                const int n_out = n.i0, n_in = n.i1, ncols = n.i2;
                double* dw = adj(n.a);
                double* db = adj(n.b);
                double* dx = adj(n.c);
                const double* vw = data(n.a);
                const double* vx = data(n.c);
                for (int col = 0; col < ncols; ++col) {
                    const double* dy = d + col * n_out;
                    const double* xc = vx + col * n_in;
                    double* dxc = dx + col * n_in;
                    for (int j = 0; j < n_out; ++j) {
                        const double dyj = dy[j];
                        db[j] += dyj;
                        double* dwr = dw + j * n_in;
                        const double* wr = vw + j * n_in;
                        for (int i = 0; i < n_in; ++i) {
                            dwr[i] += dyj * xc[i];
                            dxc[i] += dyj * wr[i];
                        }
                    }
                }
                break;
            }
            case OpKind::CwScaleShift: {
                const int period = n.i0;
                const auto& consts = payload_f_[n.aux];
                double* dx = adj(n.a);
                for (int i = 0; i < n.len; ++i) dx[i] += d[i] * consts[i % period];
                break;
            }
            case OpKind::KanLayer: {
                const KanLayerDesc& desc = *kan_descs_[id];
                const int ncols = n.i2;
                const int pe = desc.per_edge();
                const int nc = desc.basis.n_ctrl();
                const auto& cache = payload_f_[n.aux];
                const auto& spans = payload_i_[n.i0];
                double* dp = adj(n.a);
                double* dx = adj(n.c);
                const double* vp = data(n.a);
                for (int col = 0; col < ncols; ++col) {
                    const double* dy = d + col * desc.n_out;
                    const double* cc =
                        cache.data() + static_cast<std::size_t>(col) * desc.n_in * 10;
                    double* dxc = dx + col * desc.n_in;
                    for (int j = 0; j < desc.n_out; ++j) {
                        const double dyj = dy[j];
                        if (dyj == 0.0) continue;
                        for (int i = 0; i < desc.n_in; ++i) {
                            const int edge_off = (j * desc.n_in + i) * pe;
                            const int span = spans[col * desc.n_in + i];
                            const double* slot = cc + i * 10;
                            double* dctrl = dp + edge_off + span;
                            dctrl[0] += dyj * slot[0];
                            dctrl[1] += dyj * slot[1];
                            dctrl[2] += dyj * slot[2];
                            dctrl[3] += dyj * slot[3];
                            const double* ctrl = vp + edge_off + span;
                            double dx_term = ctrl[0] * slot[4] + ctrl[1] * slot[5] +
                                             ctrl[2] * slot[6] + ctrl[3] * slot[7];
                            if (desc.base_tanh) {
                                dp[edge_off + nc] += dyj * slot[8];
                                dx_term += vp[edge_off + nc] * slot[9];
                            }
                            dxc[i] += dyj * dx_term;
                        }
                    }
                }
                break;
            }
            case OpKind::BlockSparseMv: {
                const BlockOperator& op = *block_ops_[id];
                const int m = static_cast<int>(op.blocks.size());
                const int group_len = op.blocks[0].n * m;
                double* dx = adj(n.a);
                for (int g = 0; g < n.i0; ++g)
                    for (int c = 0; c < m; ++c)
                        op.blocks_t[c].matvec_add(d + g * group_len + c,
                                                  dx + g * group_len + c, m);
                break;
            }
        }
    }
}

ParamVector grad(const std::function<Var(Tape&, Var)>& program, const ParamVector& theta) {
    Tape tape;
    Var th = tape.leaf(theta.theta);
    Var loss = program(tape, th);
    tape.backward(loss);
    ParamVector g;
    g.layout = theta.layout;
    auto a = tape.adjoint(th);
    g.theta.assign(a.begin(), a.end());
    return g;
}

void adam_step(std::vector<double>& theta, std::span<const double> grad, AdamState& state,
               const AdamOptions& opt) {
    if (theta.size() != grad.size()) throw DimensionError("adam_step: size mismatch");
    if (state.m.empty()) {
        state.m.assign(theta.size(), 0.0);
        state.v.assign(theta.size(), 0.0);
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * grad[i];
        state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        theta[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
}

}  // namespace ecodyn::ad
