#pragma once

#include <array>
#include <string>
#include <vector>

#include "ecodyn/csr.hpp"
#include "ecodyn/integrate.hpp"
#include "ecodyn/models.hpp"

namespace ecodyn {

/// Uniform 1D or 2D grid. An axis with a single node is degenerate (no
/// diffusion along it); otherwise each axis needs at least 3 nodes.
struct Grid {
    int dim = 1;
    std::array<double, 2> extent = {1.0, 1.0};  // X (and L_y)
    std::array<int, 2> shape = {3, 1};          // N_x (and N_y)

    Grid() = default;
    Grid(double length, int nx);                  // 1D
    Grid(double lx, double ly, int nx, int ny);   // 2D

    int nodes() const { return shape[0] * shape[1]; }
    double spacing(int axis) const;
    /// Flat index with x1 fastest: n = j*N_x + i.
    int index(int i, int j = 0) const { return j * shape[0] + i; }
    std::array<double, 2> coords(int n) const;
};

/// Block-diagonal discrete diffusion operator: one Laplacian per component.
/// Interior rows use the flux form kappa_{i+1/2}(y_{i+1}-y_i) -
/// kappa_{i-1/2}(y_i-y_{i-1}) over dx^2; no-flux boundary rows carry the
/// factor-2 ghost-node stencil. Diagonals are assembled as the negated
/// off-diagonal sum, so every row sums to zero exactly.
struct DiffusionOperator {
    Grid grid;
    int components = 0;
    std::vector<double> kappa;  // constant per component; NaN when nodal
    std::vector<Csr> blocks;    // one per component
};

/// Constant diffusion coefficient per component.
DiffusionOperator assemble_laplacian(const Grid& grid, const std::vector<double>& kappa);

/// Nodal coefficients per component; interface values are arithmetic means
/// of the adjacent nodes.
DiffusionOperator assemble_laplacian(const Grid& grid,
                                     const std::vector<std::vector<double>>& kappa_nodal);

/// M components over N grid nodes, stored component-major:
/// values[c * nodes + n].
struct Field {
    Grid grid;
    int components = 0;
    std::vector<double> values;

    Field() = default;
    Field(const Grid& g, int m) : grid(g), components(m), values(m * g.nodes(), 0.0) {}

    double& at(int c, int n) { return values[c * grid.nodes() + n]; }
    double at(int c, int n) const { return values[c * grid.nodes() + n]; }
    StateVector node_state(int n) const;
};

/// Componentwise sparse product L y.
Field apply(const DiffusionOperator& op, const Field& field);

/// RK4 on dy/dt = L y + f(y) with f applied nodewise.
std::vector<Field> simulate_rd(const ModelSpec& model, const DiffusionOperator& op,
                               const Field& ic, const TimeGrid& grid);

/// Each component's ODE initial value modulated by a Gaussian bump centered
/// mid-domain (amplitude 0.2 x base, width a quarter of the domain), so the
/// field is heterogeneous but positive.
Field default_initial_field(const ModelSpec& model, const Grid& grid);

/// CSV: node coordinates followed by one column per component.
void write_field_csv(const Field& field, const std::string& path);
/// Flat 64-bit floats (all snapshots) plus a JSON shape descriptor.
void write_field_sequence(const std::vector<Field>& fields, const TimeGrid& grid,
                          const std::string& path_base);
std::vector<Field> read_field_sequence(const std::string& path_base, Grid& grid_out,
                                       TimeGrid& tgrid_out);

}  // namespace ecodyn
