#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecodyn/csr.hpp"
#include "ecodyn/errors.hpp"
#include "ecodyn/spline.hpp"

namespace ecodyn {

struct ParamSegment {
    std::string name;
    int offset = 0;
    int length = 0;
};

/// Flat trainable parameter vector with a named-segment layout.
struct ParamVector {
    std::vector<double> theta;
    std::vector<ParamSegment> layout;

    int size() const { return static_cast<int>(theta.size()); }
    const ParamSegment& segment(const std::string& name) const;

    /// <base>.bin (raw little-endian doubles) + <base>.json (layout).
    void save(const std::string& path_base) const;
    static ParamVector load(const std::string& path_base);
};

namespace ad {

struct Var {
    int id = -1;
    int len = 0;
};

/// Spline-edge layer description for kan_layer: per edge (input i feeding
/// output j) the parameters are n_ctrl control points, followed by one tanh
/// residual scale when base_tanh is set; edges are laid out input-major
/// within each output.
struct KanLayerDesc {
    SplineBasis basis;
    int n_in = 0;
    int n_out = 0;
    bool base_tanh = true;
    int per_edge() const { return basis.n_ctrl() + (base_tanh ? 1 : 0); }
    int n_params() const { return n_in * n_out * per_edge(); }
};

/// Per-component sparse operators applied to interleaved column data;
/// used to run a frozen diffusion stencil inside a recorded program.
struct BlockOperator {
    std::vector<Csr> blocks;    // one per component
    std::vector<Csr> blocks_t;  // transposes, for the reverse sweep

    static BlockOperator from(const std::vector<Csr>& blocks);
};

/// Reverse-mode tape over vector-valued primitives. Recording runs the
/// forward computation eagerly; backward() seeds a scalar and sweeps the
/// nodes in reverse. A tape is confined to one thread; reset() keeps the
/// allocated arenas so per-iteration re-recording stays allocation-free.
class Tape {
  public:
    Var leaf(std::span<const double> v);
    Var leaf_zeros(int len);
    Var segment(Var a, int offset, int len);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var tanh(Var a);
    Var square(Var a);
    Var sum(Var a);

    /// y[col, j] = bias[j] + sum_i w[j, i] x[col, i], w row-major.
    Var affine(Var w, Var bias, Var x, int n_out, int n_in, int ncols);

    /// y[k] = x[k] * scale[k % period] + shift[k % period]; the constants are
    /// copied onto the tape and receive no gradient.
    Var cw_scale_shift(Var x, std::span<const double> scale,
                       std::span<const double> shift);

    /// y[col, j] = sum_i spline_ij(x[col, i]) with an optional tanh residual
    /// branch per edge (see KanLayerDesc for the parameter layout).
    Var kan_layer(Var params, Var x, const KanLayerDesc& desc, int ncols);

    /// For each group g and component c, applies op.blocks[c] to the stride-M
    /// slice x[(g*n + node)*M + c]; x holds `groups` independent copies of an
    /// n-node, M-component field. The operator is constant (no gradient).
    Var block_sparse_mv(const BlockOperator& op, Var x, int groups);

    std::span<const double> value(Var v) const;
    double scalar(Var v) const;

    /// Reverse sweep from a scalar loss. Throws NumericalBlowup if the loss
    /// value is not finite.
    void backward(Var loss);
    std::span<const double> adjoint(Var v) const;

    void reset();
    std::size_t nodes() const { return nodes_.size(); }

  private:
    enum class OpKind : std::uint8_t {
        Leaf, Segment, Add, Sub, Mul, Scale, Tanh, Square, Sum,
        Affine, CwScaleShift, KanLayer, BlockSparseMv
    };

    struct Node {
        OpKind op;
        int a = -1, b = -1, c = -1;  // operand node ids
        double k = 0.0;              // scalar constant
        int i0 = 0, i1 = 0, i2 = 0;  // shape info (per op)
        int aux = -1;                // payload slot
        std::size_t off = 0;         // value/adjoint arena offset
        int len = 0;
    };

    Var push(OpKind op, int len);
    double* data(int id) { return val_.data() + nodes_[id].off; }
    const double* data(int id) const { return val_.data() + nodes_[id].off; }
    double* adj(int id) { return adj_.data() + nodes_[id].off; }

    int new_payload_f(std::size_t size);
    int new_payload_i(std::size_t size);

    std::vector<Node> nodes_;
    std::vector<double> val_;
    std::vector<double> adj_;
    std::vector<std::vector<double>> payload_f_;
    std::vector<std::vector<int>> payload_i_;
    std::vector<const KanLayerDesc*> kan_descs_;
    std::vector<const BlockOperator*> block_ops_;
    std::size_t used_payload_f_ = 0, used_payload_i_ = 0;
};

/// dLoss/dtheta for a scalar-valued program, same layout as theta.
ParamVector grad(const std::function<Var(Tape&, Var)>& program, const ParamVector& theta);

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
};

struct AdamOptions {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One bias-corrected Adam update, in place. Deterministic.
void adam_step(std::vector<double>& theta, std::span<const double> grad, AdamState& state,
               const AdamOptions& opt);

}  // namespace ad
}  // namespace ecodyn
