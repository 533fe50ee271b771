#pragma once

#include <algorithm>
#include <array>

namespace ecodyn {

/// Cubic B-spline basis on a uniform extended knot grid covering [lo, hi]
/// with `intervals` spans. The n_ctrl() = intervals + 3 basis functions
/// form a partition of unity on [lo, hi]. Inputs outside [lo, hi] are
/// clamped to the boundary, extending the curve as a constant.
struct SplineBasis {
    double lo = -3.0;
    double hi = 3.0;
    int intervals = 6;
    static constexpr int degree = 3;

    int n_ctrl() const { return intervals + degree; }
    double step() const { return (hi - lo) / intervals; }
    /// Extended knot k = -degree .. intervals + degree, indexed from 0.
    double knot(int k) const { return lo + (k - degree) * step(); }
    /// Abscissa at which control point k reproduces a sampled function
    /// value for linear data.
    double greville(int k) const {
        return (knot(k + 1) + knot(k + 2) + knot(k + 3)) / 3.0;
    }

    struct Eval {
        int first;                     // index of the first active control point
        std::array<double, 4> b;       // basis values
        std::array<double, 4> db;      // d/dx, zero outside [lo, hi]
    };

    /// The four active basis functions at x (after clamping).
    Eval eval(double x) const {
        const bool clamped = x <= lo || x >= hi;
        const double xc = std::clamp(x, lo, hi);
        int span = static_cast<int>((xc - lo) / step());
        span = std::clamp(span, 0, intervals - 1);
        const int m = degree + span;  // xc lies in [knot(m), knot(m+1))

        // Cox-de Boor triangle; the degree-2 row provides the derivatives.
        std::array<double, 4> n{1.0, 0.0, 0.0, 0.0};
        std::array<double, 3> quad{};
        for (int d = 1; d <= degree; ++d) {
            if (d == degree) quad = {n[0], n[1], n[2]};
            double saved = 0.0;
            for (int r = 0; r < d; ++r) {
                const double left = xc - knot(m + 1 - d + r);
                const double right = knot(m + 1 + r) - xc;
                const double temp = n[r] / (right + left);
                n[r] = saved + right * temp;
                saved = left * temp;
            }
            n[d] = saved;
        }

        Eval e;
        e.first = span;
        e.b = n;
        for (int j = 0; j < 4; ++j) {
            if (clamped) {
                e.db[j] = 0.0;
                continue;
            }
            const int k = m - degree + j;
            const double a = j > 0 ? quad[j - 1] / (knot(k + 3) - knot(k)) : 0.0;
            const double c = j < 3 ? quad[j] / (knot(k + 4) - knot(k + 1)) : 0.0;
            e.db[j] = degree * (a - c);
        }
        return e;
    }
};

}  // namespace ecodyn
