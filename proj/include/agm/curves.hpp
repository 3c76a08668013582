#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agm/geometry.hpp"
#include "agm/linalg.hpp"
#include "agm/tensor.hpp"

namespace agm {

struct CurveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A sampled curve with uniform parameter spacing: position and tangent.
struct CurveSample {
    std::vector<double> t;
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> xi;

    std::size_t size() const { return t.size(); }
    double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

/// Integrates the geodesic equation x'' + Gamma(x)(x',x') = 0 in affine
/// parameter with fixed-step RK4. Aborts if the trajectory leaves the chart.
inline CurveSample integrate_geodesic(const Connection& conn, std::span<const double> x0,
                                      std::span<const double> v0, double tEnd, int steps) {
    const int n = conn.chart->dim;
    if (static_cast<int>(x0.size()) != n || static_cast<int>(v0.size()) != n)
        throw std::invalid_argument("integrate_geodesic: point/velocity dimension mismatch");
    double vnorm = 0.0;
    for (double v : v0) vnorm += v * v;
    if (vnorm == 0.0) throw std::invalid_argument("integrate_geodesic: zero initial velocity");
    if (steps < 1) throw std::invalid_argument("integrate_geodesic: need at least one step");
    if (!conn.chart->in_domain(x0)) throw CurveError("integrate_geodesic: start point outside domain");

    const double h = tEnd / steps;
    std::vector<double> x(x0.begin(), x0.end()), v(v0.begin(), v0.end());
    CurveSample out;
    out.t.push_back(0.0);
    out.x.push_back(x);
    out.xi.push_back(v);

    auto accel = [&](const std::vector<double>& xx, const std::vector<double>& vv) {
        Tensor g = conn.gamma.eval(xx);
        std::vector<double> a(static_cast<std::size_t>(n), 0.0);
        for (int hh = 0; hh < n; ++hh) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s += g.at({hh, i, j}) * vv[static_cast<std::size_t>(i)] * vv[static_cast<std::size_t>(j)];
            a[static_cast<std::size_t>(hh)] = -s;
        }
        return a;
    };

    for (int step = 0; step < steps; ++step) {
        auto k1x = v;
        auto k1v = accel(x, v);
        auto mid = [&](const std::vector<double>& base, const std::vector<double>& d, double c) {
            std::vector<double> r(base.size());
            for (std::size_t i = 0; i < base.size(); ++i) r[i] = base[i] + c * d[i];
            return r;
        };
        auto x2 = mid(x, k1x, h / 2), v2 = mid(v, k1v, h / 2);
        auto k2x = v2, k2v = accel(x2, v2);
        auto x3 = mid(x, k2x, h / 2), v3 = mid(v, k2v, h / 2);
        auto k3x = v3, k3v = accel(x3, v3);
        auto x4 = mid(x, k3x, h), v4 = mid(v, k3v, h);
        auto k4x = v4, k4v = accel(x4, v4);
        for (int c = 0; c < n; ++c) {
            std::size_t ci = static_cast<std::size_t>(c);
            x[ci] += h / 6.0 * (k1x[ci] + 2 * k2x[ci] + 2 * k3x[ci] + k4x[ci]);
            v[ci] += h / 6.0 * (k1v[ci] + 2 * k2v[ci] + 2 * k3v[ci] + k4v[ci]);
        }
        if (!conn.chart->in_domain(x))
            throw CurveError("integrate_geodesic: trajectory left the domain box at parameter " +
                             std::to_string((step + 1) * h));
        out.t.push_back((step + 1) * h);
        out.x.push_back(x);
        out.xi.push_back(v);
    }
    return out;
}

/// First and second covariant derivatives of the tangent along a sampled
/// curve with respect to the given connection. Parameter derivatives use
/// centered differences inside and one-sided stencils at the two ends; the
/// boundary entries are flagged lower-accuracy.
struct XiChain {
    std::vector<std::vector<double>> xi, xi1, xi2;
    std::size_t boundary = 2; // entries at each end computed one-sided
};

namespace detail {

inline std::vector<std::vector<double>> param_derivative(const std::vector<std::vector<double>>& f,
                                                         double dt) {
    const std::size_t m = f.size();
    const std::size_t n = f.empty() ? 0 : f[0].size();
    std::vector<std::vector<double>> d(m, std::vector<double>(n, 0.0));
    if (m < 3) throw CurveError("param_derivative: need at least 3 samples");
    for (std::size_t s = 0; s < m; ++s)
        for (std::size_t c = 0; c < n; ++c) {
            if (s == 0)
                d[s][c] = (-3.0 * f[0][c] + 4.0 * f[1][c] - f[2][c]) / (2.0 * dt);
            else if (s + 1 == m)
                d[s][c] = (3.0 * f[m - 1][c] - 4.0 * f[m - 2][c] + f[m - 3][c]) / (2.0 * dt);
            else
                d[s][c] = (f[s + 1][c] - f[s - 1][c]) / (2.0 * dt);
        }
    return d;
}

inline std::vector<double> covariant_along(const Tensor& gamma, const std::vector<double>& xi,
                                           const std::vector<double>& w,
                                           const std::vector<double>& dwdt) {
    const int n = gamma.dim();
    std::vector<double> r(static_cast<std::size_t>(n), 0.0);
    for (int h = 0; h < n; ++h) {
        double s = dwdt[static_cast<std::size_t>(h)];
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                s += gamma.at({h, a, b}) * xi[static_cast<std::size_t>(a)] * w[static_cast<std::size_t>(b)];
        r[static_cast<std::size_t>(h)] = s;
    }
    return r;
}

} // namespace detail

inline XiChain xi_chain(const CurveSample& sample, const Connection& barConn) {
    if (sample.size() < 5) throw CurveError("xi_chain: need at least 5 samples");
    const double dt = sample.dt();
    XiChain out;
    out.xi = sample.xi;
    auto dxi = detail::param_derivative(sample.xi, dt);
    out.xi1.resize(sample.size());
    for (std::size_t s = 0; s < sample.size(); ++s) {
        Tensor gamma = barConn.gamma.eval(sample.x[s]);
        out.xi1[s] = detail::covariant_along(gamma, sample.xi[s], sample.xi[s], dxi[s]);
    }
    auto dxi1 = detail::param_derivative(out.xi1, dt);
    out.xi2.resize(sample.size());
    for (std::size_t s = 0; s < sample.size(); ++s) {
        Tensor gamma = barConn.gamma.eval(sample.x[s]);
        out.xi2[s] = detail::covariant_along(gamma, sample.xi[s], out.xi1[s], dxi1[s]);
    }
    return out;
}

struct SpanTestResult {
    bool pass = false;
    double residual = 0.0;
};

/// Distance of xi2 from span(xi, xi1), normalized by |xi2|. Directions whose
/// singular value falls below 1e-10 times the largest are dropped, so a
/// degenerate pair falls back to span(xi). An xi2 below the numerical-zero
/// floor (relative to the tangent scale) counts as lying in the span: for a
/// sampled geodesic both derivatives are pure discretization noise and the
/// normalized distance would otherwise amplify that noise.
inline SpanTestResult span_test(std::span<const double> xi, std::span<const double> xi1,
                                std::span<const double> xi2, double tol, double zeroFloor = 1e-6) {
    const std::size_t n = xi.size();
    double nxi = 0.0;
    for (double v : xi) nxi += v * v;
    if (nxi == 0.0) throw std::invalid_argument("span_test: zero tangent vector");

    // Gram matrix of the two candidate spanning vectors
    double g00 = 0.0, g01 = 0.0, g11 = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        g00 += xi[c] * xi[c];
        g01 += xi[c] * xi1[c];
        g11 += xi1[c] * xi1[c];
    }
    Eigen2 eig = symmetric_eigen2(g00, g01, g11);

    double n2 = 0.0;
    for (double v : xi2) n2 += v * v;
    n2 = std::sqrt(n2);
    SpanTestResult res;
    if (n2 <= zeroFloor * std::max(1.0, std::sqrt(nxi))) {
        res.residual = 0.0;
        res.pass = true;
        return res;
    }

    // orthonormal basis of the kept directions
    std::vector<double> rem(xi2.begin(), xi2.end());
    double sMax = std::sqrt(std::max(eig.lambda[0], 0.0));
    for (int k = 0; k < 2; ++k) {
        double sv = std::sqrt(std::max(eig.lambda[k], 0.0));
        if (sv <= 1e-10 * sMax) continue;
        std::vector<double> q(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) q[c] = eig.vec[k][0] * xi[c] + eig.vec[k][1] * xi1[c];
        double qn = 0.0;
        for (double v : q) qn += v * v;
        qn = std::sqrt(qn);
        if (qn == 0.0) continue;
        double dot = 0.0;
        for (std::size_t c = 0; c < n; ++c) dot += rem[c] * q[c] / qn;
        for (std::size_t c = 0; c < n; ++c) rem[c] -= dot * q[c] / qn;
    }
    double rn = 0.0;
    for (double v : rem) rn += v * v;
    res.residual = std::sqrt(rn) / n2;
    res.pass = res.residual < tol;
    return res;
}

struct SeedReport {
    std::vector<double> x0, v0;
    double maxResidual = 0.0;
    bool pass = false;
};

struct MappingReport {
    std::vector<SeedReport> seeds;
    double maxResidual = 0.0;
    bool pass = false;
};

/// Integrates base-connection geodesics from each seed and tests whether the
/// image curves are almost geodesic for the target connection: xi2 must stay
/// in span(xi, xi1) at every interior sample.
inline MappingReport verify_mapping(const Connection& conn, const Connection& barConn,
                                    std::span<const std::pair<std::vector<double>, std::vector<double>>> seeds,
                                    double tol, double tEnd = 0.5, int steps = 200) {
    MappingReport rep;
    rep.pass = true;
    for (const auto& [x0, v0] : seeds) {
        CurveSample sample = integrate_geodesic(conn, x0, v0, tEnd, steps);
        XiChain chain = xi_chain(sample, barConn);
        SeedReport sr;
        sr.x0 = x0;
        sr.v0 = v0;
        for (std::size_t s = chain.boundary; s + chain.boundary < sample.size(); ++s) {
            SpanTestResult st = span_test(chain.xi[s], chain.xi1[s], chain.xi2[s], tol);
            sr.maxResidual = std::max(sr.maxResidual, st.residual);
        }
        sr.pass = sr.maxResidual < tol;
        rep.maxResidual = std::max(rep.maxResidual, sr.maxResidual);
        rep.pass = rep.pass && sr.pass;
        rep.seeds.push_back(std::move(sr));
    }
    return rep;
}

} // namespace agm
