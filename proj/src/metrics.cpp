#include "ecodyn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace ecodyn {

double pointwise_error(std::span<const double> pred, std::span<const double> ref) {
    if (pred.size() != ref.size())
        throw DimensionError("pointwise_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = pred[i] - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    if (den == 0.0) throw MetricError("pointwise_error: zero reference norm");
    return std::sqrt(num) / std::sqrt(den) * 100.0;
}

double aggregate_error(const std::vector<StateVector>& pred,
                       const std::vector<StateVector>& ref, int upto) {
    if (pred.size() != ref.size())
        throw DimensionError("aggregate_error: trajectory length mismatch");
    const int n = upto < 0 ? static_cast<int>(ref.size()) : upto;
    if (n <= 0 || n > static_cast<int>(ref.size()))
        throw MetricError("aggregate_error: bad index range");
    double num = 0.0, den = 0.0;
    for (int t = 0; t < n; ++t) {
        if (pred[t].size() != ref[t].size())
            throw DimensionError("aggregate_error: state size mismatch");
        for (std::size_t i = 0; i < ref[t].size(); ++i) {
            const double d = pred[t][i] - ref[t][i];
            num += d * d;
            den += ref[t][i] * ref[t][i];
        }
    }
    if (den == 0.0) throw MetricError("aggregate_error: zero reference norm");
    return std::sqrt(num) / std::sqrt(den) * 100.0;
}

double aggregate_error(const Trajectory& pred, const Trajectory& ref, int upto) {
    return aggregate_error(pred.states, ref.states, upto);
}

double aggregate_error(const std::vector<Field>& pred, const std::vector<Field>& ref,
                       int upto) {
    std::vector<StateVector> p, r;
    p.reserve(pred.size());
    r.reserve(ref.size());
    for (const auto& f : pred) p.push_back(f.values);
    for (const auto& f : ref) r.push_back(f.values);
    return aggregate_error(p, r, upto);
}

std::string results_csv_header() {
    return "run_id,model,method,proportion,noise_sigma,seed,e_train,e_full,error";
}

std::string results_csv_row(const ErrorReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.17g,%.17g,%llu,%.17g,%.17g,%s",
                  r.run_id.c_str(), r.model.c_str(), r.method.c_str(), r.proportion,
                  r.noise_sigma, static_cast<unsigned long long>(r.seed), r.e_train,
                  r.e_full, r.error_tag.c_str());
    return buf;
}

void append_results_csv(const std::string& path, const ErrorReport& report) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot open " + path + " for appending");
    if (fresh) out << results_csv_header() << "\n";
    out << results_csv_row(report) << "\n";
}

}  // namespace ecodyn
