// Command line driver: dataset generation, fitting, prediction, reporting
// and the full benchmark grid.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ecodyn/experiment.hpp"

using namespace ecodyn;

namespace {

std::string default_out_root() {
    const char* env = std::getenv("ECODYN_OUT");
    return env != nullptr ? env : "out";
}

double model_t_max(ModelKind kind) {
    switch (kind) {
        case ModelKind::Sir:
        case ModelKind::Sis: return 60.0;
        case ModelKind::Lv: return 180.0;
        case ModelKind::Lvsis: return 1971.0;
    }
    return 60.0;
}

int cmd_generate(const std::string& model_name, double t_max, int n_steps, double noise,
                 std::uint64_t seed, int dim, double kappa, int nx, double extent,
                 const std::string& out) {
    const ModelKind kind = parse_kind(model_name);
    const ModelSpec model = default_model(kind);
    const double t_end = t_max > 0 ? t_max : model_t_max(kind);
    if (dim == 0) {
        Trajectory traj = simulate(model, TimeGrid(0.0, t_end, n_steps));
        if (noise > 0.0) traj = add_noise(traj, noise, seed);
        write_trajectory_csv(traj, out);
        std::cout << "wrote " << out << " (" << n_steps << " points)\n";
    } else {
        const HybridDataset ds = make_hybrid_dataset(model, dim, t_end, n_steps, kappa,
                                                     extent, nx, dim == 2 ? nx : 1);
        write_field_sequence(ds.fields, ds.tgrid, out);
        std::cout << "wrote " << out << ".bin/.json (" << n_steps << " snapshots, "
                  << ds.grid.nodes() << " nodes)\n";
    }
    return 0;
}

int cmd_fit(const std::string& method, const std::string& data_path, double proportion,
            std::uint64_t seed, int iterations, double lr, double threshold, double ridge,
            double tv_weight, const std::string& out_base) {
    TrainConfig tc;
    tc.iterations = iterations;
    tc.lr = lr;
    tc.seed = seed;

    if (method == "hybrid1d" || method == "hybrid2d") {
        Grid grid;
        TimeGrid tgrid;
        const auto fields = read_field_sequence(data_path, grid, tgrid);
        const int m = fields[0].components;
        const int n_train = static_cast<int>(
            std::llround(proportion * static_cast<double>(tgrid.n_steps)));
        std::vector<Field> train(fields.begin(), fields.begin() + n_train);
        HybridSpec spec;
        // The generating coefficient is not recoverable from the snapshots;
        // the CLI assumes the benchmark value unless retrained via `run`.
        spec.diffusion = assemble_laplacian(grid, std::vector<double>(m, 1e-5));
        spec.reaction = node2_spec(m);
        spec.norm = compute_normalization(train);
        TrainResult result = train_hybrid(train, tgrid.tau(), spec, tc);
        result.params.save(out_base);
        write_training_log(result, out_base + ".log.csv");
        std::cout << "best loss " << result.best_loss << ", saved " << out_base
                  << ".bin\n";
        return 0;
    }

    Trajectory data = read_trajectory_csv(data_path);
    auto [train, full] = split(data, proportion);
    if (method == "sindy") {
        const SparseModel model = fit_sindy(train, 2, threshold, ridge, tv_weight);
        std::ofstream(out_base + ".json") << sparse_model_to_json(model);
        std::cout << render(model);
        return 0;
    }
    const int m = train.dimension();
    if (method == "kanode") {
        TrainResult result = train_kan(train, kanode_spec(m), tc);
        result.params.save(out_base);
        write_training_log(result, out_base + ".log.csv");
        std::cout << "best loss " << result.best_loss << ", saved " << out_base << ".bin\n";
        return 0;
    }
    if (method == "node1" || method == "node2") {
        const MlpSpec spec = method == "node1" ? node1_spec(m) : node2_spec(m);
        TrainResult result = train_node(train, spec, tc);
        result.params.save(out_base);
        write_training_log(result, out_base + ".log.csv");
        std::cout << "best loss " << result.best_loss << ", saved " << out_base << ".bin\n";
        return 0;
    }
    throw ConfigError("unknown method: " + method);
}

int cmd_predict(const std::string& method, const std::string& model_path,
                const std::string& data_path, double proportion, const std::string& out) {
    const Trajectory ref = read_trajectory_csv(data_path);
    Trajectory pred;
    if (method == "sindy") {
        std::ifstream in(model_path);
        if (!in) throw DataError("cannot open " + model_path);
        std::stringstream ss;
        ss << in.rdbuf();
        pred = simulate_identified(sparse_model_from_json(ss.str()), ref.states[0],
                                   ref.grid);
    } else {
        const ParamVector params = ParamVector::load(model_path);
        const int m = ref.dimension();
        // Normalization travels with the training run; predictions here use
        // the raw-space identity unless the data was normalized at fit time.
        const Normalization norm = method == "kanode" ? fit_normalization(ref.states)
                                                      : Normalization::identity(m);
        if (method == "kanode")
            pred = predict_kan(kanode_spec(m), params, norm, ref.states[0], ref.grid,
                               ref.labels);
        else if (method == "node1" || method == "node2")
            pred = predict(method == "node1" ? node1_spec(m) : node2_spec(m), params, norm,
                           ref.states[0], ref.grid, ref.labels);
        else
            throw ConfigError("unknown method: " + method);
    }
    write_trajectory_csv(pred, out);
    const int n_train = static_cast<int>(
        std::llround(proportion * static_cast<double>(ref.grid.n_steps)));
    std::cout << "e_train = " << aggregate_error(pred, ref, n_train)
              << " %, e_full = " << aggregate_error(pred, ref) << " %\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& model_override,
            const std::string& method_override, double proportion_override,
            double noise_override, std::int64_t seed_override,
            const std::string& out_override) {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw DataError("cannot open " + config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = experiment_config_from_json(ss.str());
    } else {
        cfg = default_experiment_config(model_override.empty()
                                            ? ModelKind::Sir
                                            : parse_kind(model_override));
    }
    if (!model_override.empty()) {
        const auto base = default_experiment_config(parse_kind(model_override));
        cfg.model = base.model;
        cfg.t_max = base.t_max;
        cfg.sindy_ridge = base.sindy_ridge;
    }
    if (!method_override.empty()) cfg.methods = {method_override};
    if (proportion_override > 0.0) cfg.proportions = {proportion_override};
    if (noise_override >= 0.0) cfg.noise_sigmas = {noise_override};
    if (seed_override >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
    if (!out_override.empty()) cfg.out_dir = out_override;

    const auto reports = run_experiment(cfg);
    int failures = 0;
    for (const auto& r : reports) {
        std::cout << r.run_id << ": ";
        if (r.error_tag.empty())
            std::cout << "e_train = " << r.e_train << " %, e_full = " << r.e_full << " %\n";
        else
            std::cout << r.error_tag << "\n";
        if (!r.error_tag.empty() && r.error_tag.rfind("failed", 0) == 0) ++failures;
    }
    std::cout << "results: " << cfg.out_dir << "/results.csv\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled eco-epidemiological dynamics: simulation and discovery"};
    app.require_subcommand(1);

    // generate
    std::string g_model = "sir", g_out = "data.csv";
    double g_tmax = -1.0, g_noise = 0.0, g_kappa = 1e-5, g_extent = 10.0;
    int g_nsteps = 300, g_dim = 0, g_nx = 10;
    std::uint64_t g_seed = 0;
    auto* gen = app.add_subcommand("generate", "Simulate a dataset and write it to disk");
    gen->add_option("--model", g_model, "sir | sis | lv | lvsis")->capture_default_str();
    gen->add_option("--tmax", g_tmax, "end time (default: the model's benchmark horizon)");
    gen->add_option("--nsteps", g_nsteps, "time points")->capture_default_str();
    gen->add_option("--noise", g_noise, "additive Gaussian noise std")->capture_default_str();
    gen->add_option("--seed", g_seed, "noise seed")->capture_default_str();
    gen->add_option("--dim", g_dim, "0 = ODE, 1/2 = reaction-diffusion")->capture_default_str();
    gen->add_option("--kappa", g_kappa, "diffusion coefficient")->capture_default_str();
    gen->add_option("--nx", g_nx, "nodes per axis")->capture_default_str();
    gen->add_option("--extent", g_extent, "domain length")->capture_default_str();
    gen->add_option("--out", g_out, "output path (csv, or base path for fields)")
        ->capture_default_str();

    // fit
    std::string f_method = "sindy", f_data, f_out = "model";
    double f_prop = 2.0 / 3.0, f_lr = 0.01, f_threshold = 0.001, f_ridge = 0.0, f_tv = 0.0;
    int f_iters = 500;
    std::uint64_t f_seed = 0;
    auto* fit = app.add_subcommand("fit", "Fit a model to a dataset's training split");
    fit->add_option("--method", f_method, "sindy | node1 | node2 | kanode | hybrid1d | hybrid2d")
        ->capture_default_str();
    fit->add_option("--data", f_data, "dataset (csv, or field-sequence base path)")
        ->required();
    fit->add_option("--proportion", f_prop, "training proportion")->capture_default_str();
    fit->add_option("--seed", f_seed, "init seed")->capture_default_str();
    fit->add_option("--iterations", f_iters, "training iterations")->capture_default_str();
    fit->add_option("--lr", f_lr, "learning rate")->capture_default_str();
    fit->add_option("--threshold", f_threshold, "STLSQ threshold")->capture_default_str();
    fit->add_option("--ridge", f_ridge, "STLSQ ridge penalty")->capture_default_str();
    fit->add_option("--tv", f_tv, "TV denoising weight")->capture_default_str();
    fit->add_option("--out", f_out, "output base path")->capture_default_str();

    // predict
    std::string p_method = "sindy", p_model, p_data, p_out = "pred.csv";
    double p_prop = 2.0 / 3.0;
    auto* pre = app.add_subcommand("predict", "Roll a fitted model over a reference grid");
    pre->add_option("--method", p_method)->capture_default_str();
    pre->add_option("--model-file", p_model, "model json or checkpoint base")->required();
    pre->add_option("--data", p_data, "reference csv (grid + initial state)")->required();
    pre->add_option("--proportion", p_prop, "train split for e_train")->capture_default_str();
    pre->add_option("--out", p_out)->capture_default_str();

    // report
    std::string r_results;
    auto* rep = app.add_subcommand("report", "Render a results csv as a markdown table");
    rep->add_option("--results", r_results, "results.csv path")->required();

    // run
    std::string u_config, u_model, u_method, u_out;
    double u_prop = -1.0, u_noise = -1.0;
    std::int64_t u_seed = -1;
    auto* run = app.add_subcommand("run", "Run an experiment grid from a json config");
    run->add_option("--config", u_config, "json config path");
    run->add_option("--model", u_model, "override: dataset");
    run->add_option("--method", u_method, "override: single method");
    run->add_option("--proportion", u_prop, "override: single proportion");
    run->add_option("--noise", u_noise, "override: single noise sigma");
    run->add_option("--seed", u_seed, "override: single seed");
    run->add_option("--out", u_out, "override: output directory");

    // reproduce-paper
    std::string rp_out = default_out_root();
    std::vector<std::string> rp_models = {"sir", "lv", "lvsis"};
    std::vector<std::string> rp_methods;
    bool rp_quick = false;
    auto* rp = app.add_subcommand("reproduce-paper",
                                  "Run the full benchmark grid and print the error table");
    rp->add_option("--out", rp_out, "output root")->capture_default_str();
    rp->add_option("--models", rp_models, "datasets to run")->capture_default_str();
    rp->add_option("--methods", rp_methods, "methods to run (default: per dataset)");
    rp->add_flag("--quick", rp_quick, "few iterations, single seed (smoke run)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(g_model, g_tmax, g_nsteps, g_noise, g_seed, g_dim, g_kappa,
                                g_nx, g_extent, g_out);
        if (fit->parsed())
            return cmd_fit(f_method, f_data, f_prop, f_seed, f_iters, f_lr, f_threshold,
                           f_ridge, f_tv, f_out);
        if (pre->parsed()) return cmd_predict(p_method, p_model, p_data, p_prop, p_out);
        if (rep->parsed()) {
            std::cout << table_report(r_results);
            return 0;
        }
        if (run->parsed())
            return cmd_run(u_config, u_model, u_method, u_prop, u_noise, u_seed, u_out);
        if (rp->parsed()) {
            int rc = 0;
            for (const auto& name : rp_models) {
                ExperimentConfig cfg = default_experiment_config(parse_kind(name));
                cfg.out_dir = rp_out + "/" + name;
                if (!rp_methods.empty())
                    cfg.methods = rp_methods;
                else if (name == "lvsis") {
                    cfg.methods.push_back("hybrid1d");
                    cfg.methods.push_back("hybrid2d");
                }
                if (rp_quick) cfg.iterations = 50;
                std::cout << "== " << name << " ==\n";
                for (const auto& r : run_experiment(cfg)) {
                    std::cout << r.run_id << ": ";
                    if (r.error_tag.empty())
                        std::cout << "e_train = " << r.e_train << " %, e_full = " << r.e_full
                                  << " %\n";
                    else
                        std::cout << r.error_tag << "\n";
                }
                std::cout << table_report(cfg.out_dir + "/results.csv") << "\n";
            }
            return rc;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
