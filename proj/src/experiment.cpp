#include "ecodyn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ecodyn {

namespace fs = std::filesystem;

ExperimentConfig default_experiment_config(ModelKind kind) {
    ExperimentConfig cfg;
    cfg.model = kind;
    switch (kind) {
        case ModelKind::Sir:
            cfg.t_max = 60.0;
            cfg.sindy_ridge = 0.05;
            break;
        case ModelKind::Sis:
            cfg.t_max = 60.0;
            cfg.sindy_ridge = 0.05;
            break;
        case ModelKind::Lv:
            cfg.t_max = 180.0;
            break;
        case ModelKind::Lvsis:
            cfg.t_max = 1971.0;
            break;
    }
    cfg.methods = {"sindy", "node1", "node2", "kanode"};
    cfg.noise_sigmas = {0.0, 0.01};
    return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j{{"model", kind_name(cfg.model)},
                     {"t_max", cfg.t_max},
                     {"n_steps", cfg.n_steps},
                     {"proportions", cfg.proportions},
                     {"noise_sigmas", cfg.noise_sigmas},
                     {"methods", cfg.methods},
                     {"seeds", cfg.seeds},
                     {"out_dir", cfg.out_dir},
                     {"iterations", cfg.iterations},
                     {"lr", cfg.lr},
                     {"sindy_threshold", cfg.sindy_threshold},
                     {"sindy_ridge", cfg.sindy_ridge},
                     {"sindy_tv_weight", cfg.sindy_tv_weight},
                     {"sindy_on_noise", cfg.sindy_on_noise},
                     {"hybrid_iterations", cfg.hybrid_iterations},
                     {"hybrid_kappa", cfg.hybrid_kappa},
                     {"hybrid_extent", cfg.hybrid_extent},
                     {"hybrid_nx_1d", cfg.hybrid_nx_1d},
                     {"hybrid_nx_2d", cfg.hybrid_nx_2d}};
    return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ExperimentConfig cfg = default_experiment_config(parse_kind(j.at("model")));
    cfg.t_max = j.value("t_max", cfg.t_max);
    cfg.n_steps = j.value("n_steps", cfg.n_steps);
    if (j.contains("proportions"))
        cfg.proportions = j["proportions"].get<std::vector<double>>();
    if (j.contains("noise_sigmas"))
        cfg.noise_sigmas = j["noise_sigmas"].get<std::vector<double>>();
    if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.sindy_threshold = j.value("sindy_threshold", cfg.sindy_threshold);
    cfg.sindy_ridge = j.value("sindy_ridge", cfg.sindy_ridge);
    cfg.sindy_tv_weight = j.value("sindy_tv_weight", cfg.sindy_tv_weight);
    cfg.sindy_on_noise = j.value("sindy_on_noise", cfg.sindy_on_noise);
    cfg.hybrid_iterations = j.value("hybrid_iterations", cfg.hybrid_iterations);
    cfg.hybrid_kappa = j.value("hybrid_kappa", cfg.hybrid_kappa);
    cfg.hybrid_extent = j.value("hybrid_extent", cfg.hybrid_extent);
    cfg.hybrid_nx_1d = j.value("hybrid_nx_1d", cfg.hybrid_nx_1d);
    cfg.hybrid_nx_2d = j.value("hybrid_nx_2d", cfg.hybrid_nx_2d);
    return cfg;
}

HybridDataset make_hybrid_dataset(const ModelSpec& model, int dim, double t_max,
                                  int n_steps, double kappa, double extent, int nx,
                                  int ny) {
    HybridDataset ds;
    ds.grid = dim == 2 ? Grid(extent, extent, nx, ny) : Grid(extent, nx);
    ds.op = assemble_laplacian(ds.grid,
                               std::vector<double>(model.dimension(), kappa));
    ds.ic = default_initial_field(model, ds.grid);
    ds.tgrid = TimeGrid(0.0, t_max, n_steps);
    ds.fields = simulate_rd(model, ds.op, ds.ic, ds.tgrid);
    return ds;
}

namespace {

std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<int> quartile_indices(int n) {
    return {n / 4, n / 2, (3 * n) / 4, n - 1};
}

void write_plot_csv(const std::string& path, const Trajectory& ref, const Trajectory& pred) {
    std::ofstream out(path);
    out << "t";
    for (const auto& l : ref.labels) out << "," << l << "_ref";
    for (const auto& l : ref.labels) out << "," << l << "_pred";
    out << "\n";
    char buf[32];
    for (int n = 0; n < ref.grid.n_steps; ++n) {
        std::snprintf(buf, sizeof buf, "%.17g", ref.grid.time(n));
        out << buf;
        for (double v : ref.states[n]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << "," << buf;
        }
        for (double v : pred.states[n]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << "," << buf;
        }
        out << "\n";
    }
}

void write_field_plot_csv(const std::string& path, const TimeGrid& grid,
                          const std::vector<Field>& ref, const std::vector<Field>& pred,
                          const std::vector<std::string>& labels) {
    // Node-averaged dynamics per component, reference and prediction.
    std::ofstream out(path);
    out << "t";
    for (const auto& l : labels) out << "," << l << "_ref";
    for (const auto& l : labels) out << "," << l << "_pred";
    out << "\n";
    const int m = ref[0].components;
    const int nodes = ref[0].grid.nodes();
    char buf[32];
    for (int n = 0; n < grid.n_steps; ++n) {
        std::snprintf(buf, sizeof buf, "%.17g", grid.time(n));
        out << buf;
        for (const auto* seq : {&ref, &pred}) {
            for (int c = 0; c < m; ++c) {
                double avg = 0.0;
                for (int k = 0; k < nodes; ++k) avg += (*seq)[n].at(c, k);
                std::snprintf(buf, sizeof buf, "%.17g", avg / nodes);
                out << "," << buf;
            }
        }
        out << "\n";
    }
}

struct CellContext {
    const ExperimentConfig& cfg;
    const ModelSpec& model;
    const Trajectory& clean;
    std::string data_dir, model_dir, plot_dir;
};

ErrorReport run_trajectory_cell(const CellContext& ctx, const std::string& method,
                                double proportion, double noise, std::uint64_t seed,
                                const std::string& run_id) {
    ErrorReport report;
    report.run_id = run_id;
    report.model = kind_name(ctx.cfg.model);
    report.method = method;
    report.proportion = proportion;
    report.noise_sigma = noise;
    report.seed = seed;

    if (method == "sindy" && noise > 0.0 && !ctx.cfg.sindy_on_noise) {
        report.error_tag = "skipped: sindy is not run on noised data";
        return report;
    }

    Trajectory dataset = noise > 0.0 ? add_noise(ctx.clean, noise, seed) : ctx.clean;
    if (noise > 0.0) {
        const std::string path = ctx.data_dir + "/" + kind_name(ctx.cfg.model) +
                                 "-noise" + format_g(noise) + "-seed" +
                                 std::to_string(seed) + ".csv";
        if (!fs::exists(path)) write_trajectory_csv(dataset, path);
    }
    auto [train, full] = split(dataset, proportion);
    const int n_train = train.grid.n_steps;

    Trajectory pred;
    if (method == "sindy") {
        SparseModel fit = fit_sindy(train, 2, ctx.cfg.sindy_threshold, ctx.cfg.sindy_ridge,
                                    ctx.cfg.sindy_tv_weight);
        pred = simulate_identified(fit, train.states[0], full.grid);
        std::ofstream(ctx.model_dir + "/" + run_id + ".json") << sparse_model_to_json(fit);
        std::ofstream(ctx.model_dir + "/" + run_id + ".txt") << render(fit);
    } else {
        TrainConfig tc;
        tc.iterations = ctx.cfg.iterations;
        tc.lr = ctx.cfg.lr;
        tc.seed = seed;
        const int m = ctx.model.dimension();
        if (method == "kanode") {
            const KanSpec spec = kanode_spec(m);
            TrainResult result = train_kan(train, spec, tc);
            pred = predict_kan(spec, result.params, result.norm, train.states[0],
                               full.grid, ctx.clean.labels);
            result.params.save(ctx.model_dir + "/" + run_id);
            write_training_log(result, ctx.model_dir + "/" + run_id + ".log.csv");
        } else if (method == "node1" || method == "node2") {
            const MlpSpec spec = method == "node1" ? node1_spec(m) : node2_spec(m);
            TrainResult result = train_node(train, spec, tc);
            pred = predict(spec, result.params, result.norm, train.states[0], full.grid,
                           ctx.clean.labels);
            result.params.save(ctx.model_dir + "/" + run_id);
            write_training_log(result, ctx.model_dir + "/" + run_id + ".log.csv");
        } else {
            throw ConfigError("unknown method: " + method);
        }
    }

    // Errors are always scored against the clean reference.
    report.e_train = aggregate_error(pred, ctx.clean, n_train);
    report.e_full = aggregate_error(pred, ctx.clean);
    for (int idx : quartile_indices(ctx.clean.grid.n_steps))
        report.pointwise.push_back(
            {idx, pointwise_error(pred.states[idx], ctx.clean.states[idx])});
    write_plot_csv(ctx.plot_dir + "/" + run_id + ".csv", ctx.clean, pred);
    return report;
}

ErrorReport run_hybrid_cell(const CellContext& ctx, const HybridDataset& ds,
                            const std::string& method, double proportion, double noise,
                            std::uint64_t seed, const std::string& run_id) {
    ErrorReport report;
    report.run_id = run_id;
    report.model = kind_name(ctx.cfg.model);
    report.method = method;
    report.proportion = proportion;
    report.noise_sigma = noise;
    report.seed = seed;
    if (noise > 0.0) {
        report.error_tag = "skipped: hybrid methods use clean data";
        return report;
    }

    const int n_train = static_cast<int>(
        std::llround(proportion * static_cast<double>(ds.tgrid.n_steps)));
    std::vector<Field> train(ds.fields.begin(), ds.fields.begin() + n_train);

    HybridSpec spec;
    spec.diffusion = ds.op;
    spec.reaction = node2_spec(ctx.model.dimension());
    spec.norm = compute_normalization(train);

    TrainConfig tc;
    tc.iterations = ctx.cfg.hybrid_iterations > 0 ? ctx.cfg.hybrid_iterations
                                                  : ctx.cfg.iterations;
    tc.lr = ctx.cfg.lr;
    tc.seed = seed;

    TrainResult result = train_hybrid(train, ds.tgrid.tau(), spec, tc);
    const std::vector<Field> pred =
        predict_hybrid(spec, result.params, ds.fields[0], ds.tgrid);

    report.e_train = aggregate_error(pred, ds.fields, n_train);
    report.e_full = aggregate_error(pred, ds.fields);
    result.params.save(ctx.model_dir + "/" + run_id);
    write_training_log(result, ctx.model_dir + "/" + run_id + ".log.csv");
    write_field_sequence(pred, ds.tgrid, ctx.plot_dir + "/" + run_id + "-pred");
    write_field_plot_csv(ctx.plot_dir + "/" + run_id + ".csv", ds.tgrid, ds.fields, pred,
                         component_labels(ctx.cfg.model));
    return report;
}

}  // namespace

std::vector<ErrorReport> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.methods.empty()) throw ConfigError("run_experiment: empty methods list");
    if (cfg.n_steps < 2) throw ConfigError("run_experiment: n_steps must be >= 2");
    for (double p : cfg.proportions)
        if (!(p > 0.0) || p > 1.0)
            throw ConfigError("run_experiment: proportions must lie in (0, 1]");
    if (cfg.seeds.empty()) throw ConfigError("run_experiment: need at least one seed");

    const fs::path out(cfg.out_dir);
    fs::create_directories(out / "data");
    fs::create_directories(out / "models");
    fs::create_directories(out / "plots");

    const ModelSpec model = default_model(cfg.model);
    const TimeGrid grid(0.0, cfg.t_max, cfg.n_steps);
    const Trajectory clean = simulate(model, grid);
    write_trajectory_csv(clean, (out / "data" / (kind_name(cfg.model) + "-clean.csv")).string());

    CellContext ctx{cfg, model, clean, (out / "data").string(), (out / "models").string(),
                    (out / "plots").string()};

    std::map<int, HybridDataset> hybrid_cache;
    auto hybrid_dataset = [&](int dim) -> const HybridDataset& {
        auto it = hybrid_cache.find(dim);
        if (it == hybrid_cache.end()) {
            const int nx = dim == 2 ? cfg.hybrid_nx_2d : cfg.hybrid_nx_1d;
            it = hybrid_cache
                     .emplace(dim, make_hybrid_dataset(model, dim, cfg.t_max, cfg.n_steps,
                                                       cfg.hybrid_kappa, cfg.hybrid_extent,
                                                       nx, dim == 2 ? nx : 1))
                     .first;
            write_field_sequence(it->second.fields, it->second.tgrid,
                                 (out / "data" /
                                  (kind_name(cfg.model) + "-rd" + std::to_string(dim) + "d"))
                                     .string());
        }
        return it->second;
    };

    const std::string results_path = (out / "results.csv").string();
    std::ofstream(results_path, std::ios::trunc) << results_csv_header() << "\n";

    std::vector<ErrorReport> reports;
    for (const auto& method : cfg.methods)
        for (double p : cfg.proportions)
            for (double noise : cfg.noise_sigmas)
                for (std::uint64_t seed : cfg.seeds) {
                    const std::string run_id = kind_name(cfg.model) + "-" + method + "-p" +
                                               format_g(p) + "-n" + format_g(noise) +
                                               "-s" + std::to_string(seed);
                    ErrorReport report;
                    try {
                        if (method == "hybrid1d" || method == "hybrid2d") {
                            report = run_hybrid_cell(ctx, hybrid_dataset(method == "hybrid2d" ? 2 : 1),
                                                     method, p, noise, seed, run_id);
                        } else {
                            report = run_trajectory_cell(ctx, method, p, noise, seed, run_id);
                        }
                    } catch (const std::exception& e) {
                        report.run_id = run_id;
                        report.model = kind_name(cfg.model);
                        report.method = method;
                        report.proportion = p;
                        report.noise_sigma = noise;
                        report.seed = seed;
                        report.error_tag = std::string("failed: ") + e.what();
                    }
                    std::ofstream(results_path, std::ios::app)
                        << results_csv_row(report) << "\n";
                    reports.push_back(std::move(report));
                }
    return reports;
}

namespace {

struct ResultRow {
    std::string model, method, tag;
    double proportion = 0, noise = 0, e_train = 0, e_full = 0;
};

std::vector<ResultRow> parse_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 8) continue;
        ResultRow r;
        r.model = cells[1];
        r.method = cells[2];
        r.proportion = std::stod(cells[3]);
        r.noise = std::stod(cells[4]);
        r.e_train = std::stod(cells[6]);
        r.e_full = std::stod(cells[7]);
        r.tag = cells.size() > 8 ? cells[8] : "";
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

std::string table_report(const std::string& results_csv_path) {
    const auto rows = parse_results(results_csv_path);

    std::vector<std::string> models, methods;
    std::vector<double> proportions, noises;
    for (const auto& r : rows) {
        if (std::find(models.begin(), models.end(), r.model) == models.end())
            models.push_back(r.model);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
        if (std::find(proportions.begin(), proportions.end(), r.proportion) ==
            proportions.end())
            proportions.push_back(r.proportion);
        if (std::find(noises.begin(), noises.end(), r.noise) == noises.end())
            noises.push_back(r.noise);
    }
    std::sort(proportions.begin(), proportions.end());
    std::sort(noises.begin(), noises.end());

    // Cell values: mean over seeds of successful runs, "-" otherwise.
    auto cell = [&rows](const std::string& model, const std::string& method, double p,
                        double noise, bool full) -> std::string {
        double acc = 0.0;
        int count = 0;
        for (const auto& r : rows)
            if (r.model == model && r.method == method && r.proportion == p &&
                r.noise == noise && r.tag.empty()) {
                acc += full ? r.e_full : r.e_train;
                ++count;
            }
        if (count == 0) return "-";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", acc / count);
        return buf;
    };

    std::ostringstream out;
    for (const auto& model : models) {
        out << "## " << model << "\n\n| Method |";
        for (double noise : noises)
            for (double p : proportions)
                out << " " << format_g(p) << (noise > 0 ? " (noised)" : "") << " Train | "
                    << format_g(p) << (noise > 0 ? " (noised)" : "") << " Full |";
        out << "\n|---|";
        for (std::size_t i = 0; i < noises.size() * proportions.size(); ++i)
            out << "---|---|";
        out << "\n";
        for (const auto& method : methods) {
            out << "| " << method << " |";
            for (double noise : noises)
                for (double p : proportions)
                    out << " " << cell(model, method, p, noise, false) << " | "
                        << cell(model, method, p, noise, true) << " |";
            out << "\n";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace ecodyn
