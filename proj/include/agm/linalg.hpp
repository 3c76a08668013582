#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "agm/tensor.hpp"

namespace agm {

/// Determinant of a rank-2 tensor via LU with partial pivoting.
inline double determinant(const Tensor& m) {
    if (m.rank() != 2) throw std::invalid_argument("determinant: rank-2 tensor required");
    const int n = m.dim();
    std::vector<double> a(m.data().begin(), m.data().end());
    double det = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
        if (a[piv * n + c] == 0.0) return 0.0;
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(a[piv * n + k], a[c * n + k]);
            det = -det;
        }
        det *= a[c * n + c];
        for (int r = c + 1; r < n; ++r) {
            double f = a[r * n + c] / a[c * n + c];
            for (int k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
        }
    }
    return det;
}

/// Inverse of a rank-2 tensor. The result carries the dual valence
/// (both slots flipped), so the inverse of a metric g_ij is g^ij.
inline Tensor invert(const Tensor& m, double detTol = 0.0) {
    if (m.rank() != 2) throw std::invalid_argument("invert: rank-2 tensor required");
    const int n = m.dim();
    std::vector<double> a(m.data().begin(), m.data().end());
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
        if (std::abs(a[piv * n + c]) <= detTol)
            throw std::runtime_error("invert: matrix is singular or nearly singular");
        if (piv != c)
            for (int k = 0; k < n; ++k) {
                std::swap(a[piv * n + k], a[c * n + k]);
                std::swap(inv[piv * n + k], inv[c * n + k]);
            }
        double d = a[c * n + c];
        for (int k = 0; k < n; ++k) {
            a[c * n + k] /= d;
            inv[c * n + k] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            double f = a[r * n + c];
            if (f == 0.0) continue;
            for (int k = 0; k < n; ++k) {
                a[r * n + k] -= f * a[c * n + k];
                inv[r * n + k] -= f * inv[c * n + k];
            }
        }
    }
    Slot s0 = m.valence()[0] == Slot::Up ? Slot::Lo : Slot::Up;
    Slot s1 = m.valence()[1] == Slot::Up ? Slot::Lo : Slot::Up;
    Tensor r(n, Valence{s0, s1});
    std::copy(inv.begin(), inv.end(), r.data().begin());
    return r;
}

/// Eigen-decomposition of a symmetric 2x2 matrix [[a,b],[b,c]].
/// Returns eigenvalues in decreasing order with orthonormal eigenvectors.
struct Eigen2 {
    double lambda[2];
    double vec[2][2];
};

inline Eigen2 symmetric_eigen2(double a, double b, double c) {
    Eigen2 e{};
    double tr = a + c;
    double d = std::sqrt(std::max(0.0, (a - c) * (a - c) / 4.0 + b * b));
    e.lambda[0] = tr / 2.0 + d;
    e.lambda[1] = tr / 2.0 - d;
    if (std::abs(b) > 1e-300) {
        for (int k = 0; k < 2; ++k) {
            double vx = e.lambda[k] - c, vy = b;
            double nrm = std::hypot(vx, vy);
            e.vec[k][0] = vx / nrm;
            e.vec[k][1] = vy / nrm;
        }
    } else {
        bool swap = a < c;
        e.vec[0][0] = swap ? 0.0 : 1.0;
        e.vec[0][1] = swap ? 1.0 : 0.0;
        e.vec[1][0] = swap ? 1.0 : 0.0;
        e.vec[1][1] = swap ? 0.0 : 1.0;
    }
    return e;
}

} // namespace agm
