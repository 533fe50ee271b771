#pragma once

#include <stdexcept>
#include <string>

namespace ecodyn {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct GridError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite value met during integration or a tape forward pass.
/// step/stage are -1 when the corresponding index is not applicable.
struct NumericalBlowup : std::runtime_error {
    int step;
    int stage;
    NumericalBlowup(const std::string& what, int step_ = -1, int stage_ = -1)
        : std::runtime_error(what), step(step_), stage(stage_) {}
};

}  // namespace ecodyn
