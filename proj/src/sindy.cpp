#include "ecodyn/sindy.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace ecodyn {

double FunctionLibrary::eval_term(int term, std::span<const double> y) const {
    double v = 1.0;
    const auto& e = exponents[term];
    for (std::size_t c = 0; c < e.size(); ++c)
        for (int k = 0; k < e[c]; ++k) v *= y[c];
    return v;
}

std::vector<double> FunctionLibrary::eval_row(std::span<const double> y) const {
    if (y.size() != labels.size())
        throw DimensionError("FunctionLibrary: state dimension mismatch");
    std::vector<double> row(terms());
    for (int t = 0; t < terms(); ++t) row[t] = eval_term(t, y);
    return row;
}

namespace {

void enumerate_grade(int m, int grade, std::vector<int>& current,
                     std::vector<std::vector<int>>& out, int pos) {
    if (pos == m - 1) {
        current[pos] = grade;
        out.push_back(current);
        return;
    }
    for (int e = grade; e >= 0; --e) {
        current[pos] = e;
        enumerate_grade(m, grade - e, current, out, pos + 1);
    }
}

std::string term_name(const std::vector<int>& exponents,
                      const std::vector<std::string>& labels) {
    std::string name;
    for (std::size_t c = 0; c < exponents.size(); ++c) {
        if (exponents[c] == 0) continue;
        if (!name.empty()) name += " ";
        name += labels[c];
        if (exponents[c] > 1) name += "^" + std::to_string(exponents[c]);
    }
    return name.empty() ? "1" : name;
}

}  // namespace

FunctionLibrary build_library(const std::vector<std::string>& labels, int degree) {
    if (degree < 1) throw ConfigError("build_library: degree must be >= 1");
    if (labels.empty()) throw ConfigError("build_library: no components");
    FunctionLibrary lib;
    lib.labels = labels;
    lib.degree = degree;
    const int m = static_cast<int>(labels.size());
    std::vector<int> current(m, 0);
    for (int grade = 0; grade <= degree; ++grade)
        enumerate_grade(m, grade, current, lib.exponents, 0);
    for (const auto& e : lib.exponents) lib.names.push_back(term_name(e, labels));
    return lib;
}

std::vector<std::vector<double>> estimate_derivatives(const Trajectory& traj) {
    const int n = traj.grid.n_steps;
    if (n < 3) throw DataError("estimate_derivatives: need at least 3 points");
    const int m = traj.dimension();
    const double tau = traj.grid.tau();
    std::vector<std::vector<double>> dy(n, std::vector<double>(m));
    const auto& s = traj.states;
    for (int c = 0; c < m; ++c) {
        dy[0][c] = (-3.0 * s[0][c] + 4.0 * s[1][c] - s[2][c]) / (2.0 * tau);
        for (int i = 1; i < n - 1; ++i)
            dy[i][c] = (s[i + 1][c] - s[i - 1][c]) / (2.0 * tau);
        dy[n - 1][c] = (3.0 * s[n - 1][c] - 4.0 * s[n - 2][c] + s[n - 3][c]) / (2.0 * tau);
    }
    return dy;
}

std::vector<double> tv_denoise(std::span<const double> series, double weight) {
    if (weight < 0.0) throw ConfigError("tv_denoise: weight must be >= 0");
    const int n = static_cast<int>(series.size());
    std::vector<double> x(series.begin(), series.end());
    if (weight == 0.0 || n < 2) return x;

    // FISTA on the dual: maximize <D^T u, f> - 0.5||D^T u||^2 over |u| <= w,
    // primal recovered as x = f - D^T u, (Du)_i = u_i - u_{i-1} pattern below.
    const int nd = n - 1;
    std::vector<double> u(nd, 0.0), u_prev(nd, 0.0), z(nd, 0.0), dtz(n), grad(nd);
    const double step = 0.25;  // 1 / ||D D^T||
    double t_acc = 1.0;
    const double gap_tol = 1e-8;
    const int max_iter = 500000;

    auto apply_dt = [&](const std::vector<double>& v) {
        // (D^T v)_j = v_{j-1} - v_j with boundary conventions
        dtz[0] = -v[0];
        for (int j = 1; j < n - 1; ++j) dtz[j] = v[j - 1] - v[j];
        dtz[n - 1] = v[nd - 1];
    };

    for (int it = 0; it < max_iter; ++it) {
        apply_dt(z);
        // gradient of the dual objective at z: D(f - D^T z)
        for (int i = 0; i < nd; ++i) {
            const double xi = series[i] - dtz[i];
            const double xi1 = series[i + 1] - dtz[i + 1];
            grad[i] = xi1 - xi;
        }
        u_prev = u;
        for (int i = 0; i < nd; ++i) {
            double v = z[i] + step * grad[i];
            u[i] = std::clamp(v, -weight, weight);
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
        for (int i = 0; i < nd; ++i)
            z[i] = u[i] + (t_acc - 1.0) / t_next * (u[i] - u_prev[i]);
        t_acc = t_next;

        if (it % 16 == 0 || it == max_iter - 1) {
            apply_dt(u);
            double primal = 0.0, dual = 0.0;
            for (int j = 0; j < n; ++j) {
                x[j] = series[j] - dtz[j];
                primal += 0.5 * dtz[j] * dtz[j];
                dual += dtz[j] * series[j] - 0.5 * dtz[j] * dtz[j];
            }
            for (int i = 0; i < nd; ++i) primal += weight * std::abs(x[i + 1] - x[i]);
            if (primal - dual <= gap_tol) return x;
        }
    }
    apply_dt(u);
    for (int j = 0; j < n; ++j) x[j] = series[j] - dtz[j];
    return x;
}

SparseModel stlsq(const std::vector<std::vector<double>>& theta_rows,
                  const std::vector<std::vector<double>>& dy, const FunctionLibrary& lib,
                  double threshold, double ridge_lambda) {
    const int n = static_cast<int>(theta_rows.size());
    const int t = lib.terms();
    if (n == 0 || static_cast<int>(dy.size()) != n)
        throw DataError("stlsq: empty data or row mismatch");
    const int m = static_cast<int>(dy[0].size());
    if (static_cast<int>(theta_rows[0].size()) != t)
        throw DimensionError("stlsq: library row width mismatch");
    if (n < t && ridge_lambda <= 0.0)
        throw DataError("stlsq: underdetermined system needs ridge_lambda > 0");

    Eigen::MatrixXd theta(n, t);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < t; ++j) theta(i, j) = theta_rows[i][j];

    SparseModel model;
    model.library = lib;
    model.threshold = threshold;
    model.ridge_lambda = ridge_lambda;
    model.xi.assign(t, std::vector<double>(m, 0.0));

    const double sqrt_lambda = ridge_lambda > 0.0 ? std::sqrt(ridge_lambda) : 0.0;
    for (int c = 0; c < m; ++c) {
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) b(i) = dy[i][c];

        std::vector<int> active(t);
        std::iota(active.begin(), active.end(), 0);
        std::vector<double> coef;

        for (int sweep = 0; sweep < 20 && !active.empty(); ++sweep) {
            const int k = static_cast<int>(active.size());
            const int rows = ridge_lambda > 0.0 ? n + k : n;
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, k);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
            rhs.head(n) = b;
            for (int j = 0; j < k; ++j) {
                a.col(j).head(n) = theta.col(active[j]);
                if (ridge_lambda > 0.0) a(n + j, j) = sqrt_lambda;
            }
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
            qr.setThreshold(1e-10);
            if (ridge_lambda <= 0.0 && qr.rank() < k)
                throw SolveError("stlsq: rank-deficient active set for component " +
                                 lib.labels[c]);
            Eigen::VectorXd sol = qr.solve(rhs);

            std::vector<int> survivors;
            std::vector<double> kept;
            for (int j = 0; j < k; ++j)
                if (!(std::abs(sol(j)) < threshold)) {
                    survivors.push_back(active[j]);
                    kept.push_back(sol(j));
                }
            const bool stable = survivors.size() == active.size();
            active = std::move(survivors);
            coef = std::move(kept);
            if (stable) break;
        }
        for (std::size_t j = 0; j < active.size(); ++j) model.xi[active[j]][c] = coef[j];
    }
    return model;
}

SparseModel fit_sindy(const Trajectory& data, int degree, double threshold,
                      double ridge_lambda, double tv_weight) {
    FunctionLibrary lib = build_library(data.labels.empty()
                                            ? std::vector<std::string>(data.dimension(), "y")
                                            : data.labels,
                                        degree);
    Trajectory work = data;
    if (tv_weight > 0.0) {
        const int m = data.dimension();
        for (int c = 0; c < m; ++c) {
            std::vector<double> series(data.grid.n_steps);
            for (int i = 0; i < data.grid.n_steps; ++i) series[i] = data.states[i][c];
            const auto smooth = tv_denoise(series, tv_weight);
            for (int i = 0; i < data.grid.n_steps; ++i) work.states[i][c] = smooth[i];
        }
    }
    const auto dy = estimate_derivatives(work);
    std::vector<std::vector<double>> rows(work.grid.n_steps);
    for (int i = 0; i < work.grid.n_steps; ++i) rows[i] = lib.eval_row(work.states[i]);
    return stlsq(rows, dy, lib, threshold, ridge_lambda);
}

Trajectory simulate_identified(const SparseModel& model, const StateVector& y0,
                               const TimeGrid& grid) {
    const int m = static_cast<int>(model.library.labels.size());
    if (static_cast<int>(y0.size()) != m)
        throw DimensionError("simulate_identified: initial state dimension mismatch");
    VectorField f = [&model, m](const StateVector& y) {
        StateVector out(m, 0.0);
        for (int t = 0; t < model.library.terms(); ++t) {
            const double v = model.library.eval_term(t, y);
            for (int c = 0; c < m; ++c) out[c] += model.xi[t][c] * v;
        }
        return out;
    };
    Trajectory traj = integrate(f, y0, grid, model.library.labels);
    traj.provenance.model = "sindy";
    return traj;
}

std::string render(const SparseModel& model) {
    std::ostringstream out;
    const int m = static_cast<int>(model.library.labels.size());
    char buf[64];
    for (int c = 0; c < m; ++c) {
        out << model.library.labels[c] << "' = ";
        bool first = true;
        for (int t = 0; t < model.library.terms(); ++t) {
            const double v = model.xi[t][c];
            if (v == 0.0) continue;
            if (first) {
                std::snprintf(buf, sizeof buf, "%.3f", v);
                out << buf;
            } else {
                std::snprintf(buf, sizeof buf, "%.3f", std::abs(v));
                out << (v < 0.0 ? " - " : " + ") << buf;
            }
            if (model.library.names[t] != "1") out << " " << model.library.names[t];
            first = false;
        }
        if (first) out << "0";
        out << "\n";
    }
    return out.str();
}

std::string sparse_model_to_json(const SparseModel& model) {
    nlohmann::json j{{"labels", model.library.labels},
                     {"degree", model.library.degree},
                     {"terms", model.library.names},
                     {"xi", model.xi},
                     {"threshold", model.threshold},
                     {"ridge_lambda", model.ridge_lambda}};
    return j.dump(2);
}

SparseModel sparse_model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SparseModel model;
    model.library = build_library(j.at("labels").get<std::vector<std::string>>(),
                                  j.at("degree").get<int>());
    model.xi = j.at("xi").get<std::vector<std::vector<double>>>();
    model.threshold = j.at("threshold");
    model.ridge_lambda = j.at("ridge_lambda");
    if (static_cast<int>(model.xi.size()) != model.library.terms())
        throw DataError("sparse model json: coefficient shape mismatch");
    return model;
}

}  // namespace ecodyn
