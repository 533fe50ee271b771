#include "ecodyn/spatial.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

namespace ecodyn {

Grid::Grid(double length, int nx) : dim(1), extent{length, 0.0}, shape{nx, 1} {
    if (nx < 3) throw GridError("Grid: need at least 3 nodes per axis");
    if (!(length > 0.0)) throw GridError("Grid: extent must be positive");
}

Grid::Grid(double lx, double ly, int nx, int ny) : dim(2), extent{lx, ly}, shape{nx, ny} {
    if ((nx != 1 && nx < 3) || (ny != 1 && ny < 3))
        throw GridError("Grid: each axis needs 1 (degenerate) or >= 3 nodes");
    if (nx == 1 && ny == 1) throw GridError("Grid: no nodes to diffuse over");
    if (!(lx > 0.0) || (ny > 1 && !(ly > 0.0)))
        throw GridError("Grid: extents must be positive");
}

double Grid::spacing(int axis) const {
    if (shape[axis] <= 1) return 0.0;
    return extent[axis] / (shape[axis] - 1);
}

std::array<double, 2> Grid::coords(int n) const {
    const int i = n % shape[0];
    const int j = n / shape[0];
    return {i * spacing(0), dim == 2 ? j * spacing(1) : 0.0};
}

void Csr::matvec(const double* x, double* y, int stride) const {
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            acc += val[k] * x[col[k] * stride];
        y[r * stride] = acc;
    }
}

void Csr::matvec_add(const double* x, double* y, int stride) const {
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            acc += val[k] * x[col[k] * stride];
        y[r * stride] += acc;
    }
}

Csr Csr::transposed() const {
    Csr t;
    t.n = n;
    t.row_ptr.assign(n + 1, 0);
    for (int c : col) ++t.row_ptr[c + 1];
    for (int r = 0; r < n; ++r) t.row_ptr[r + 1] += t.row_ptr[r];
    t.col.resize(col.size());
    t.val.resize(val.size());
    std::vector<int> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (int r = 0; r < n; ++r)
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            const int pos = cursor[col[k]]++;
            t.col[pos] = r;
            t.val[pos] = val[k];
        }
    return t;
}

std::vector<std::vector<double>> Csr::dense() const {
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (int r = 0; r < n; ++r)
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) d[r][col[k]] = val[k];
    return d;
}

namespace {

// Accumulates stencil entries row by row; the diagonal is set to the negated
// off-diagonal sum at the end, which keeps row sums at exactly zero.
struct StencilBuilder {
    explicit StencilBuilder(int n) : rows(n) {}
    void add(int r, int c, double v) { rows[r][c] += v; }
    Csr finish() {
        Csr m;
        m.n = static_cast<int>(rows.size());
        m.row_ptr.push_back(0);
        for (int r = 0; r < m.n; ++r) {
            double offdiag = 0.0;
            for (const auto& [c, v] : rows[r])
                if (c != r) offdiag += v;
            rows[r][r] = -offdiag;
            for (const auto& [c, v] : rows[r]) {
                m.col.push_back(c);
                m.val.push_back(v);
            }
            m.row_ptr.push_back(static_cast<int>(m.col.size()));
        }
        return m;
    }
    std::vector<std::map<int, double>> rows;
};

// 1D flux stencil along one axis of the (possibly 2D) grid.
// kappa_at(n) returns the nodal coefficient, interface values are means.
template <typename KappaFn>
void add_axis_stencil(StencilBuilder& b, const Grid& g, int axis, KappaFn kappa_at) {
    const int nx = g.shape[0], ny = g.shape[1];
    const int n_axis = g.shape[axis];
    if (n_axis <= 1) return;
    const double inv_h2 = 1.0 / (g.spacing(axis) * g.spacing(axis));
    const int n_other = axis == 0 ? ny : nx;
    for (int other = 0; other < n_other; ++other) {
        auto flat = [&](int along) {
            return axis == 0 ? g.index(along, other) : g.index(other, along);
        };
        for (int i = 0; i < n_axis; ++i) {
            const int r = flat(i);
            const bool lo = i == 0, hi = i == n_axis - 1;
            if (!lo) {
                const double ki = 0.5 * (kappa_at(flat(i - 1)) + kappa_at(r));
                b.add(r, flat(i - 1), (hi ? 2.0 : 1.0) * ki * inv_h2);
            }
            if (!hi) {
                const double ki = 0.5 * (kappa_at(r) + kappa_at(flat(i + 1)));
                b.add(r, flat(i + 1), (lo ? 2.0 : 1.0) * ki * inv_h2);
            }
        }
    }
}

Csr assemble_block(const Grid& grid, const std::vector<double>* nodal, double constant) {
    StencilBuilder b(grid.nodes());
    auto kappa_at = [&](int n) { return nodal ? (*nodal)[n] : constant; };
    add_axis_stencil(b, grid, 0, kappa_at);
    if (grid.dim == 2) add_axis_stencil(b, grid, 1, kappa_at);
    return b.finish();
}

}  // namespace

DiffusionOperator assemble_laplacian(const Grid& grid, const std::vector<double>& kappa) {
    DiffusionOperator op;
    op.grid = grid;
    op.components = static_cast<int>(kappa.size());
    op.kappa = kappa;
    for (double k : kappa) {
        if (k < 0.0) throw ConfigError("assemble_laplacian: kappa must be >= 0");
        op.blocks.push_back(assemble_block(grid, nullptr, k));
    }
    return op;
}

DiffusionOperator assemble_laplacian(const Grid& grid,
                                     const std::vector<std::vector<double>>& kappa_nodal) {
    DiffusionOperator op;
    op.grid = grid;
    op.components = static_cast<int>(kappa_nodal.size());
    op.kappa.assign(op.components, std::numeric_limits<double>::quiet_NaN());
    for (const auto& field : kappa_nodal) {
        if (static_cast<int>(field.size()) != grid.nodes())
            throw DimensionError("assemble_laplacian: nodal kappa size mismatch");
        for (double k : field)
            if (k < 0.0) throw ConfigError("assemble_laplacian: kappa must be >= 0");
        op.blocks.push_back(assemble_block(grid, &field, 0.0));
    }
    return op;
}

StateVector Field::node_state(int n) const {
    StateVector s(components);
    for (int c = 0; c < components; ++c) s[c] = at(c, n);
    return s;
}

Field apply(const DiffusionOperator& op, const Field& field) {
    if (field.components != op.components || field.grid.nodes() != op.grid.nodes())
        throw DimensionError("apply: operator/field shape mismatch");
    Field out(field.grid, field.components);
    const int n = op.grid.nodes();
    for (int c = 0; c < op.components; ++c)
        op.blocks[c].matvec(field.values.data() + c * n, out.values.data() + c * n);
    return out;
}

std::vector<Field> simulate_rd(const ModelSpec& model, const DiffusionOperator& op,
                               const Field& ic, const TimeGrid& grid) {
    if (ic.components != model.dimension())
        throw DimensionError("simulate_rd: field components != model dimension");
    if (ic.components != op.components)
        throw DimensionError("simulate_rd: field components != operator components");
    const int nodes = ic.grid.nodes();
    const int m = ic.components;

    // The flattened system is integrated with the same rk_step used by the
    // ODE path, so kappa = 0 reduces to nodewise ODE solutions bitwise.
    VectorField g = [&](const StateVector& flat) {
        StateVector out(flat.size());
        for (int c = 0; c < m; ++c)
            op.blocks[c].matvec(flat.data() + c * nodes, out.data() + c * nodes);
        StateVector ynode(m);
        for (int node = 0; node < nodes; ++node) {
            for (int c = 0; c < m; ++c) ynode[c] = flat[c * nodes + node];
            const StateVector f = rhs(model, ynode);
            for (int c = 0; c < m; ++c) out[c * nodes + node] += f[c];
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

Field default_initial_field(const ModelSpec& model, const Grid& grid) {
    Field f(grid, model.dimension());
    const double cx = 0.5 * grid.extent[0];
    const double cy = grid.dim == 2 ? 0.5 * grid.extent[1] : 0.0;
    const double wx = 0.25 * grid.extent[0];
    const double wy = grid.dim == 2 ? 0.25 * grid.extent[1] : wx;
    for (int n = 0; n < grid.nodes(); ++n) {
        const auto [x, y] = grid.coords(n);
        double r2 = (x - cx) * (x - cx) / (2.0 * wx * wx);
        if (grid.dim == 2) r2 += (y - cy) * (y - cy) / (2.0 * wy * wy);
        const double bump = 0.2 * std::exp(-r2);
        for (int c = 0; c < model.dimension(); ++c)
            f.at(c, n) = model.initial_state[c] * (1.0 + bump);
    }
    return f;
}

void write_field_csv(const Field& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << (field.grid.dim == 2 ? "x,y" : "x");
    for (int c = 0; c < field.components; ++c) out << ",c" << c;
    out << "\n";
    char buf[32];
    for (int n = 0; n < field.grid.nodes(); ++n) {
        const auto [x, y] = field.grid.coords(n);
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
        if (field.grid.dim == 2) {
            std::snprintf(buf, sizeof buf, "%.17g", y);
            out << "," << buf;
        }
        for (int c = 0; c < field.components; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", field.at(c, n));
            out << "," << buf;
        }
        out << "\n";
    }
}

void write_field_sequence(const std::vector<Field>& fields, const TimeGrid& grid,
                          const std::string& path_base) {
    if (fields.empty()) throw DataError("write_field_sequence: nothing to write");
    const Grid& g = fields[0].grid;
    std::ofstream bin(path_base + ".bin", std::ios::binary);
    if (!bin) throw DataError("cannot open " + path_base + ".bin");
    for (const auto& f : fields)
        bin.write(reinterpret_cast<const char*>(f.values.data()),
                  static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    nlohmann::json shape{{"snapshots", fields.size()},
                         {"components", fields[0].components},
                         {"dim", g.dim},
                         {"shape", {g.shape[0], g.shape[1]}},
                         {"extent", {g.extent[0], g.extent[1]}},
                         {"t0", grid.t0},
                         {"t_max", grid.t_max},
                         {"n_steps", grid.n_steps},
                         {"layout", "snapshot-major, component-major, x1 fastest"}};
    std::ofstream js(path_base + ".json");
    js << shape.dump(2) << "\n";
}

std::vector<Field> read_field_sequence(const std::string& path_base, Grid& grid_out,
                                       TimeGrid& tgrid_out) {
    std::ifstream js(path_base + ".json");
    if (!js) throw DataError("cannot open " + path_base + ".json");
    nlohmann::json shape = nlohmann::json::parse(js);
    const int dim = shape.at("dim");
    const int nx = shape.at("shape")[0], ny = shape.at("shape")[1];
    const double lx = shape.at("extent")[0], ly = shape.at("extent")[1];
    grid_out = dim == 2 ? Grid(lx, ly, nx, ny) : Grid(lx, nx);
    tgrid_out = TimeGrid(shape.at("t0"), shape.at("t_max"), shape.at("n_steps"));
    const int m = shape.at("components");
    const std::size_t snapshots = shape.at("snapshots");

    std::ifstream bin(path_base + ".bin", std::ios::binary);
    if (!bin) throw DataError("cannot open " + path_base + ".bin");
    std::vector<Field> fields;
    fields.reserve(snapshots);
    for (std::size_t s = 0; s < snapshots; ++s) {
        Field f(grid_out, m);
        bin.read(reinterpret_cast<char*>(f.values.data()),
                 static_cast<std::streamsize>(f.values.size() * sizeof(double)));
        if (!bin) throw DataError(path_base + ".bin: truncated");
        fields.push_back(std::move(f));
    }
    return fields;
}

}  // namespace ecodyn
