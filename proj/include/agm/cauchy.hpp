#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agm/ags_core.hpp"
#include "agm/ags_grs.hpp"
#include "agm/ags_riemann.hpp"
#include "agm/geometry.hpp"

namespace agm {

struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The unknowns flattened into one real vector.
///
/// Canonical packing order, each component row-major (last index fastest):
///   Riemannian: gbar (n^2), P (n^3), a (n^2), aD (n^3), K (1),
///               Rbar (n^4), RbarD (n^5)
///   generalized Ricci-symmetric: P (n^3), a (n^2), Rbar (n^4), RbarD (n^5)
struct PackedState {
    int n = 0;
    TargetKind target = TargetKind::Riemannian;
    std::vector<double> v;
};

inline std::size_t packed_length(int n, TargetKind target) {
    std::size_t n2 = static_cast<std::size_t>(n) * n;
    std::size_t n3 = n2 * n, n4 = n3 * n, n5 = n4 * n;
    if (target == TargetKind::Riemannian) return n2 + n3 + n2 + n3 + 1 + n4 + n5;
    return n3 + n2 + n4 + n5;
}

namespace detail {

inline void append(std::vector<double>& v, const Tensor& t) {
    v.insert(v.end(), t.data().begin(), t.data().end());
}

inline Tensor take(const PackedState& p, std::size_t& pos, std::string_view valence) {
    Tensor t(p.n, valence);
    for (double& d : t.data()) d = p.v[pos++];
    return t;
}

} // namespace detail

inline PackedState pack(const RiemannUnknowns& u) {
    PackedState p{u.P.dim(), TargetKind::Riemannian, {}};
    p.v.reserve(packed_length(p.n, p.target));
    detail::append(p.v, u.gbar);
    detail::append(p.v, u.P);
    detail::append(p.v, u.a);
    detail::append(p.v, u.aD);
    detail::append(p.v, u.K);
    detail::append(p.v, u.Rbar);
    detail::append(p.v, u.RbarD);
    return p;
}

inline PackedState pack(const GrsUnknowns& u) {
    PackedState p{u.P.dim(), TargetKind::GeneralizedRicciSymmetric, {}};
    p.v.reserve(packed_length(p.n, p.target));
    detail::append(p.v, u.P);
    detail::append(p.v, u.a);
    detail::append(p.v, u.Rbar);
    detail::append(p.v, u.RbarD);
    return p;
}

inline RiemannUnknowns unpack_riemann(const PackedState& p) {
    if (p.target != TargetKind::Riemannian || p.v.size() != packed_length(p.n, p.target))
        throw std::invalid_argument("unpack_riemann: wrong target kind or vector length");
    std::size_t pos = 0;
    RiemannUnknowns u;
    u.gbar = detail::take(p, pos, "ll");
    u.P = detail::take(p, pos, "ull");
    u.a = detail::take(p, pos, "ll");
    u.aD = detail::take(p, pos, "lll");
    u.K = detail::take(p, pos, "");
    u.Rbar = detail::take(p, pos, "ulll");
    u.RbarD = detail::take(p, pos, "ullll");
    return u;
}

inline GrsUnknowns unpack_grs(const PackedState& p) {
    if (p.target != TargetKind::GeneralizedRicciSymmetric || p.v.size() != packed_length(p.n, p.target))
        throw std::invalid_argument("unpack_grs: wrong target kind or vector length");
    std::size_t pos = 0;
    GrsUnknowns u;
    u.P = detail::take(p, pos, "ull");
    u.a = detail::take(p, pos, "ll");
    u.Rbar = detail::take(p, pos, "ulll");
    u.RbarD = detail::take(p, pos, "ullll");
    return u;
}

/// Converts a covariant derivative into plain coordinate derivatives:
/// d_k T = T_,k - Gamma^s_ka T(a in upper slot s) + Gamma^a_k(s) T(a in lower slot s).
inline Tensor coordinate_from_covariant(const Tensor& t, const Tensor& covd, const Tensor& gamma) {
    Tensor r = covd;
    const int n = t.dim();
    if (t.rank() == 0) return r;
    std::vector<int> idx(static_cast<std::size_t>(t.rank() + 1), 0);
    std::vector<int> src(static_cast<std::size_t>(t.rank()), 0);
    do {
        int k = idx.back();
        double corr = 0.0;
        for (int s = 0; s < t.rank(); ++s) {
            for (int a = 0; a < n; ++a) {
                for (int q = 0; q < t.rank(); ++q) src[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q)];
                src[static_cast<std::size_t>(s)] = a;
                double tv = t.at(src);
                if (t.valence()[static_cast<std::size_t>(s)] == Slot::Up)
                    corr += gamma.at({idx[static_cast<std::size_t>(s)], k, a}) * tv;
                else
                    corr -= gamma.at({a, k, idx[static_cast<std::size_t>(s)]}) * tv;
            }
        }
        r.at(idx) -= corr;
    } while (detail::odometer(idx, n));
    return r;
}

/// Coordinate derivatives d_k of every packed component, all directions at
/// once: result[k][i] = d_k v[i].
inline std::vector<std::vector<double>> packed_coordinate_derivs(const PackedState& p,
                                                                 std::span<const double> x,
                                                                 const Connection& conn) {
    const int n = p.n;
    Tensor gamma = conn.gamma.eval(x);
    std::vector<Tensor> comps, covds;
    // The integrator runs its own drift guard, so the raw evaluation path is
    // used here: transient RK4 stage states may sit slightly off the
    // constraint set.
    if (p.target == TargetKind::Riemannian) {
        RiemannUnknowns u = unpack_riemann(p);
        RiemannEval d = riemann_evaluate(u, conn, x);
        comps = {u.gbar, u.P, u.a, u.aD, u.K, u.Rbar, u.RbarD};
        covds = {d.dgbar, d.dP, d.da, d.daD, d.dK, d.dRbar, d.dRbarD};
    } else {
        GrsUnknowns u = unpack_grs(p);
        GrsEval d = grs_evaluate(u, conn, x);
        comps = {u.P, u.a, u.Rbar, u.RbarD};
        covds = {d.dP, d.da, d.dRbar, d.dRbarD};
    }
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
    for (auto& row : out) row.reserve(p.v.size());
    for (std::size_t c = 0; c < comps.size(); ++c) {
        Tensor coord = coordinate_from_covariant(comps[c], covds[c], gamma);
        // derivative slot is last: stride 1
        std::size_t baseLen = comps[c].size();
        for (int k = 0; k < n; ++k)
            for (std::size_t i = 0; i < baseLen; ++i)
                out[static_cast<std::size_t>(k)].push_back(coord.data()[i * static_cast<std::size_t>(n) +
                                                                        static_cast<std::size_t>(k)]);
    }
    return out;
}

/// Directional coordinate derivative of the packed state along direction k.
inline PackedState rhs(const PackedState& p, std::span<const double> x, const Connection& conn, int k) {
    auto all = packed_coordinate_derivs(p, x, conn);
    PackedState d = p;
    d.v = all[static_cast<std::size_t>(k)];
    return d;
}

struct PathSpec {
    std::vector<std::vector<double>> waypoints;
    int stepsPerSegment = 64;
};

/// Generic fixed-step fourth-order Runge-Kutta along a parametrized segment
/// chain; f(t, y, x) gives dy/dt at chart point x(t).
inline std::vector<double> rk4_path_integrate(
    const std::function<std::vector<double>(double, const std::vector<double>&, std::span<const double>)>& f,
    const PathSpec& path, std::vector<double> y,
    const std::function<void(std::vector<double>&, std::span<const double>)>& postStep = {}) {
    if (path.waypoints.size() < 2) throw std::invalid_argument("rk4_path_integrate: need at least 2 waypoints");
    if (path.stepsPerSegment < 1) throw std::invalid_argument("rk4_path_integrate: steps must be positive");
    const std::size_t m = y.size();
    auto axpy = [&](const std::vector<double>& base, double c, const std::vector<double>& d) {
        std::vector<double> r(m);
        for (std::size_t i = 0; i < m; ++i) r[i] = base[i] + c * d[i];
        return r;
    };
    for (std::size_t seg = 0; seg + 1 < path.waypoints.size(); ++seg) {
        const auto& A = path.waypoints[seg];
        const auto& B = path.waypoints[seg + 1];
        const std::size_t dim = A.size();
        const double h = 1.0 / path.stepsPerSegment;
        auto at = [&](double t) {
            std::vector<double> x(dim);
            for (std::size_t c = 0; c < dim; ++c) x[c] = A[c] + t * (B[c] - A[c]);
            return x;
        };
        for (int step = 0; step < path.stepsPerSegment; ++step) {
            double t0 = step * h;
            std::vector<double> x0 = at(t0), xh = at(t0 + 0.5 * h), x1 = at(t0 + h);
            std::vector<double> k1 = f(t0, y, x0);
            std::vector<double> k2 = f(t0 + 0.5 * h, axpy(y, 0.5 * h, k1), xh);
            std::vector<double> k3 = f(t0 + 0.5 * h, axpy(y, 0.5 * h, k2), xh);
            std::vector<double> k4 = f(t0 + h, axpy(y, h, k3), x1);
            for (std::size_t i = 0; i < m; ++i)
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (postStep) postStep(y, x1);
        }
    }
    return y;
}

struct IntegrateOptions {
    double constraintTol = 1e-6; // abort threshold for post-projection drift
    double detTol = 1e-9;        // abort threshold for |det gbar|
    bool project = true;
};

struct IntegrateResult {
    PackedState state;
    double maxConstraintDrift = 0.0;
    double minDetGbar = 1.0;
    double finalDetGbar = 1.0;
};

/// Propagates a constraint-satisfying state along a waypoint path with fixed
/// RK4 steps; each step ends with orthogonal projection onto the linear
/// constraint set. Aborts on constraint drift or metric degeneracy.
inline IntegrateResult integrate_along(const PathSpec& path, const PackedState& v0, const Connection& conn,
                                       const IntegrateOptions& opt = {}) {
    for (const auto& w : path.waypoints) {
        if (static_cast<int>(w.size()) != conn.chart->dim)
            throw std::invalid_argument("integrate_along: waypoint dimension mismatch");
        if (!conn.chart->in_domain(w))
            throw IntegrationError("integrate_along: waypoint outside the chart domain box");
    }
    IntegrateResult res;
    res.state = v0;
    {
        double viol = v0.target == TargetKind::Riemannian
                          ? algebraic_constraint_residual(unpack_riemann(v0)).max_violation()
                          : algebraic_constraint_residual(unpack_grs(v0)).max_violation();
        if (viol > opt.constraintTol)
            throw IntegrationError("integrate_along: initial state violates the algebraic constraints by " +
                                   std::to_string(viol));
    }
    if (v0.target == TargetKind::Riemannian) {
        res.minDetGbar = res.finalDetGbar = determinant(unpack_riemann(v0).gbar);
    }

    // direction of the current segment is encoded through the x(t) callback;
    // dy/dt = sum_k (B-A)^k d_k y
    std::size_t segIndex = 0;
    std::vector<double> dir;
    auto updateDir = [&](std::size_t seg) {
        const auto& A = path.waypoints[seg];
        const auto& B = path.waypoints[seg + 1];
        dir.resize(A.size());
        for (std::size_t c = 0; c < A.size(); ++c) dir[c] = B[c] - A[c];
    };

    auto f = [&](double, const std::vector<double>& y, std::span<const double> x) {
        PackedState s{v0.n, v0.target, y};
        auto all = packed_coordinate_derivs(s, x, conn);
        std::vector<double> dy(y.size(), 0.0);
        for (std::size_t k = 0; k < dir.size(); ++k)
            for (std::size_t i = 0; i < y.size(); ++i) dy[i] += dir[k] * all[k][i];
        return dy;
    };

    auto post = [&](std::vector<double>& y, std::span<const double>) {
        PackedState s{v0.n, v0.target, y};
        if (v0.target == TargetKind::Riemannian) {
            RiemannUnknowns u = unpack_riemann(s);
            double drift = algebraic_constraint_residual(u).max_violation();
            res.maxConstraintDrift = std::max(res.maxConstraintDrift, drift);
            if (drift > opt.constraintTol)
                throw IntegrationError("integrate_along: constraint drift " + std::to_string(drift) +
                                       " exceeds tolerance");
            if (opt.project) project_constraints(u);
            double det = determinant(u.gbar);
            res.minDetGbar = std::min(res.minDetGbar, std::abs(det));
            res.finalDetGbar = det;
            if (std::abs(det) <= opt.detTol)
                throw IntegrationError("integrate_along: metric became degenerate (|det| <= tol)");
            y = pack(u).v;
        } else {
            GrsUnknowns u = unpack_grs(s);
            double drift = algebraic_constraint_residual(u).max_violation();
            res.maxConstraintDrift = std::max(res.maxConstraintDrift, drift);
            if (drift > opt.constraintTol)
                throw IntegrationError("integrate_along: constraint drift " + std::to_string(drift) +
                                       " exceeds tolerance");
            if (opt.project) project_constraints(u);
            y = pack(u).v;
        }
    };

    std::vector<double> y = v0.v;
    for (segIndex = 0; segIndex + 1 < path.waypoints.size(); ++segIndex) {
        updateDir(segIndex);
        PathSpec one{{path.waypoints[segIndex], path.waypoints[segIndex + 1]}, path.stepsPerSegment};
        y = rk4_path_integrate(f, one, std::move(y), post);
    }
    res.state = PackedState{v0.n, v0.target, std::move(y)};
    return res;
}

/// Sup-norm change of the state after propagation around a closed path.
inline double loop_defect(const PathSpec& loop, const PackedState& v0, const Connection& conn,
                          const IntegrateOptions& opt = {}) {
    if (loop.waypoints.size() < 2 || loop.waypoints.front() != loop.waypoints.back())
        throw std::invalid_argument("loop_defect: path must close on its start");
    IntegrateResult r = integrate_along(loop, v0, conn, opt);
    double m = 0.0;
    for (std::size_t i = 0; i < v0.v.size(); ++i) m = std::max(m, std::abs(r.state.v[i] - v0.v[i]));
    return m;
}

/// Axis-aligned square loop of the given side centered in the chart's box.
inline PathSpec default_square_loop(const ChartSpec& chart, double side = 0.5, int stepsPerSegment = 64) {
    std::vector<double> c = chart.center();
    if (chart.dim < 2) throw std::invalid_argument("default_square_loop: need dim >= 2");
    double s = side / 2.0;
    auto p = [&](double d0, double d1) {
        std::vector<double> x = c;
        x[0] += d0;
        x[1] += d1;
        return x;
    };
    PathSpec loop;
    loop.waypoints = {p(-s, -s), p(s, -s), p(s, s), p(-s, s), p(-s, -s)};
    loop.stepsPerSegment = stepsPerSegment;
    return loop;
}

namespace detail {

inline Tensor integrability_residual_impl(const Tensor& P, const Tensor& aD, const Tensor& Rbar,
                                          const Tensor& RbarD, const Tensor& theta, int n) {
    Tensor delta = kronecker(n);
    // covariant derivative of Rbar with respect to the target connection
    Tensor v = RbarD;
    v = add(v, einsum("hijkl", {{&P, "hla"}, {&Rbar, "aijk"}}));
    v = sub(v, einsum("hijkl", {{&P, "ali"}, {&Rbar, "hajk"}}));
    v = sub(v, einsum("hijkl", {{&P, "alj"}, {&Rbar, "hiak"}}));
    v = sub(v, einsum("hijkl", {{&P, "alk"}, {&Rbar, "hija"}}));
    Tensor lhs = alternate(cyclic_sym(v, {1, 2}), 3, 4);

    Tensor rhs = einsum("hijkl", {{&delta, "hi"}, {&aD, "jkl"}});
    rhs = add(rhs, einsum("hijkl", {{&delta, "hj"}, {&aD, "kil"}}));
    rhs = add(rhs, einsum("hijkl", {{&delta, "hk"}, {&aD, "ijl"}}));
    rhs = sub(rhs, einsum("hijkl", {{&delta, "hi"}, {&aD, "jlk"}}));
    rhs = sub(rhs, einsum("hijkl", {{&delta, "hj"}, {&aD, "lik"}}));
    rhs = sub(rhs, einsum("hijkl", {{&delta, "hl"}, {&aD, "ijk"}}));
    rhs = add(rhs, theta);
    return sub(lhs, rhs);
}

} // namespace detail

/// Pointwise defect of the integrability conditions of the fundamental
/// system, with derivative occurrences substituted from the closure.
inline Tensor integrability_residual(const RiemannUnknowns& u, const Connection& conn,
                                     std::span<const double> x) {
    RiemannEval ev = riemann_evaluate(u, conn, x);
    return detail::integrability_residual_impl(u.P, u.aD, u.Rbar, u.RbarD, ev.theta, u.P.dim());
}

inline Tensor integrability_residual(const GrsUnknowns& u, const Connection& conn,
                                     std::span<const double> x) {
    GrsEval ev = grs_evaluate(u, conn, x);
    return detail::integrability_residual_impl(u.P, ev.da, u.Rbar, u.RbarD, ev.theta, u.P.dim());
}

} // namespace agm
