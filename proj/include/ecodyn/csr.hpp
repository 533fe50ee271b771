#pragma once

#include <vector>

namespace ecodyn {

/// Compressed sparse row matrix, square. `stride` lets the same matrix act
/// on interleaved component data.
struct Csr {
    int n = 0;
    std::vector<int> row_ptr;  // size n+1
    std::vector<int> col;
    std::vector<double> val;

    void matvec(const double* x, double* y, int stride = 1) const;
    void matvec_add(const double* x, double* y, int stride = 1) const;
    Csr transposed() const;
    std::vector<std::vector<double>> dense() const;
};

}  // namespace ecodyn
