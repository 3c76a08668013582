#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agm/geometry.hpp"
#include "agm/jet.hpp"
#include "agm/linalg.hpp"
#include "agm/tensor.hpp"

namespace agm {

/// Pointwise data of a type-pi1 almost geodesic mapping: the deformation
/// tensor P^h_ij, the symmetric bilinear form a_ij, and (for the general
/// class only) the 1-form b, which vanishes for the canonical subclass.
struct Pi1State {
    std::vector<double> x;
    Tensor P; // ^h_ij
    Tensor a; // _ij
    std::optional<Tensor> b; // _i
};

/// Unknowns of the closed system for Riemannian targets.
/// aD holds the covariant derivative of a as an independent unknown; RbarD
/// holds the covariant derivative of Rbar as a (1,4) unknown.
struct RiemannUnknowns {
    Tensor gbar;  // _ij
    Tensor P;     // ^h_ij
    Tensor a;     // _ij
    Tensor aD;    // _ijk
    Tensor K;     // scalar
    Tensor Rbar;  // ^h_ijk
    Tensor RbarD; // ^h_ijkl
};

/// Unknowns of the closed system for generalized Ricci-symmetric targets.
struct GrsUnknowns {
    Tensor P;     // ^h_ij
    Tensor a;     // _ij
    Tensor Rbar;  // ^h_ijk
    Tensor RbarD; // ^h_ijkl
};

enum class TargetKind { Riemannian, GeneralizedRicciSymmetric };

inline RiemannUnknowns zero_riemann_unknowns(int n) {
    RiemannUnknowns u;
    u.gbar = Tensor(n, "ll");
    for (int i = 0; i < n; ++i) u.gbar.at({i, i}) = 1.0;
    u.P = Tensor(n, "ull");
    u.a = Tensor(n, "ll");
    u.aD = Tensor(n, "lll");
    u.K = Tensor::scalar(0.0);
    u.Rbar = Tensor(n, "ulll");
    u.RbarD = Tensor(n, "ullll");
    return u;
}

inline GrsUnknowns zero_grs_unknowns(int n) {
    GrsUnknowns u;
    u.P = Tensor(n, "ull");
    u.a = Tensor(n, "ll");
    u.Rbar = Tensor(n, "ulll");
    u.RbarD = Tensor(n, "ullll");
    return u;
}

/// Difference tensor of two torsion-free connections on the same chart.
inline Tensor deformation(const Connection& bar, const Connection& base, std::span<const double> x) {
    if (bar.chart->dim != base.chart->dim || bar.chart->domain != base.chart->domain)
        throw std::invalid_argument("deformation: connections live on different charts");
    return sub(bar.gamma.eval(x), base.gamma.eval(x));
}

/// Componentwise defect of the canonical almost geodesic condition
///   P^h_(ij,k) = a_(ij delta^h_k) - P^h_a(i P^a_jk),
/// cyclic sums over (i,j,k). Zero iff the state satisfies it at x.
inline Tensor pi1_residual(const Pi1State& s, const Connection& conn, const TensorField& pField) {
    const int n = s.P.dim();
    Tensor dP = covariant_derivative(pField, conn, s.x); // ^h_ij|k
    Tensor lhs = cyclic_sym(dP, {1, 2, 3});
    Tensor delta = kronecker(n);
    Tensor aTerm = cyclic_sym(einsum("hijk", {{&s.a, "ij"}, {&delta, "hk"}}), {1, 2, 3});
    Tensor quad = cyclic_sym(einsum("hijk", {{&s.P, "hai"}, {&s.P, "ajk"}}), {1, 2, 3});
    return add(sub(lhs, aTerm), quad);
}

/// Right side of the fundamental first-order system solved for the covariant
/// derivative of P:
///   P^h_ij,k = (1/3)[R^h_(ij)k - Rbar^h_(ij)k + a_(ij delta^h_k)] - P^h_ka P^a_ij.
inline TJet fundamental_rhs_jet(const TJet& P, const TJet& a, const TJet& Rbar, const TJet& Rc,
                                const Tensor& delta, int ord) {
    TJet d = jet_const(delta, ord);
    TJet rcPart = jet_cyclic(jet_einsum("hijk", {{&Rc, "hijk"}}, ord), {1, 2});
    TJet rbPart = jet_cyclic(jet_einsum("hijk", {{&Rbar, "hijk"}}, ord), {1, 2});
    TJet aPart = jet_cyclic(jet_einsum("hijk", {{&a, "ij"}, {&d, "hk"}}, ord), {1, 2, 3});
    TJet bracket = jet_add(jet_sub(rcPart, rbPart), aPart);
    TJet quad = jet_einsum("hijk", {{&P, "hka"}, {&P, "aij"}}, ord);
    return jet_sub(jet_scale(bracket, 1.0 / 3.0), quad);
}

inline Tensor fundamental_rhs(const Tensor& P, const Tensor& a, const Tensor& Rbar, const Tensor& Rc) {
    TJet pj = jet_const(P, 0), aj = jet_const(a, 0), rj = jet_const(Rbar, 0), cj = jet_const(Rc, 0);
    return fundamental_rhs_jet(pj, aj, rj, cj, kronecker(P.dim()), 0).value();
}

/// Upper bound on the number of parameters the family of target spaces
/// depends on.
inline std::int64_t parameter_bound(int n, TargetKind target) {
    if (n < 2) throw std::invalid_argument("parameter_bound: dimension must be >= 2");
    std::int64_t N = n;
    if (target == TargetKind::Riemannian) return N * N * (N * N - 1) / 2 + N * (N + 1) * (N + 1) + 1;
    return N * (N + 1) * (2 * N * N * N - 4 * N * N + 5 * N + 3) / 6;
}

struct ConstraintReport {
    std::map<std::string, double> residuals;
    std::optional<double> det_gbar;

    double max_violation() const {
        double m = 0.0;
        for (const auto& [k, v] : residuals) m = std::max(m, v);
        return m;
    }
};

namespace detail {

inline double antisym_violation(const Tensor& t, int s1, int s2) {
    std::vector<int> perm(static_cast<std::size_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) perm[static_cast<std::size_t>(i)] = i;
    std::swap(perm[static_cast<std::size_t>(s1)], perm[static_cast<std::size_t>(s2)]);
    return max_abs(sub(t, permute(t, perm)));
}

inline double sym_pair_violation(const Tensor& t, int s1, int s2) {
    return max_abs(cyclic_sym(t, {s1, s2}));
}

inline double cyclic_violation(const Tensor& t, std::initializer_list<int> slots) {
    return max_abs(cyclic_sym(t, slots));
}

} // namespace detail

/// Max-norm violation of each algebraic side condition of the Riemannian
/// closed system, plus the metric determinant.
inline ConstraintReport algebraic_constraint_residual(const RiemannUnknowns& u) {
    ConstraintReport r;
    r.residuals["gbar_alternating_part"] = detail::antisym_violation(u.gbar, 0, 1);
    r.residuals["P_alternating_part"] = detail::antisym_violation(u.P, 1, 2);
    r.residuals["a_alternating_part"] = detail::antisym_violation(u.a, 0, 1);
    r.residuals["aD_alternating_part"] = detail::antisym_violation(u.aD, 0, 1);
    r.residuals["Rbar_symmetric_pair"] = detail::sym_pair_violation(u.Rbar, 2, 3);
    r.residuals["RbarD_symmetric_pair"] = detail::sym_pair_violation(u.RbarD, 2, 3);
    r.det_gbar = determinant(u.gbar);
    return r;
}

/// Max-norm violation of each algebraic side condition of the generalized
/// Ricci-symmetric closed system.
inline ConstraintReport algebraic_constraint_residual(const GrsUnknowns& u) {
    ConstraintReport r;
    r.residuals["P_alternating_part"] = detail::antisym_violation(u.P, 1, 2);
    r.residuals["a_alternating_part"] = detail::antisym_violation(u.a, 0, 1);
    r.residuals["Rbar_symmetric_pair"] = detail::sym_pair_violation(u.Rbar, 2, 3);
    r.residuals["Rbar_cyclic_sum"] = detail::cyclic_violation(u.Rbar, {1, 2, 3});
    r.residuals["RbarD_symmetric_pair"] = detail::sym_pair_violation(u.RbarD, 2, 3);
    r.residuals["RbarD_cyclic_sum"] = detail::cyclic_violation(u.RbarD, {1, 2, 3});
    return r;
}

/// Orthogonal projection onto the constraint set: symmetrizes the symmetric
/// pairs, antisymmetrizes the curvature-type pairs, removes cyclic parts
/// where first-Bianchi-type conditions apply.
inline Tensor project_sym_pair(const Tensor& t, int s1, int s2) {
    return scale(cyclic_sym(t, {s1, s2}), 0.5);
}

inline Tensor project_antisym_pair(const Tensor& t, int s1, int s2) {
    return scale(alternate(t, s1, s2), 0.5);
}

inline Tensor project_cyclic_free(const Tensor& t, std::initializer_list<int> slots) {
    return sub(t, scale(cyclic_sym(t, slots), 1.0 / 3.0));
}

inline void project_constraints(RiemannUnknowns& u) {
    u.gbar = project_sym_pair(u.gbar, 0, 1);
    u.P = project_sym_pair(u.P, 1, 2);
    u.a = project_sym_pair(u.a, 0, 1);
    u.aD = project_sym_pair(u.aD, 0, 1);
    u.Rbar = project_antisym_pair(u.Rbar, 2, 3);
    u.RbarD = project_antisym_pair(u.RbarD, 2, 3);
}

inline void project_constraints(GrsUnknowns& u) {
    u.P = project_sym_pair(u.P, 1, 2);
    u.a = project_sym_pair(u.a, 0, 1);
    u.Rbar = project_cyclic_free(project_antisym_pair(u.Rbar, 2, 3), {1, 2, 3});
    u.RbarD = project_cyclic_free(project_antisym_pair(u.RbarD, 2, 3), {1, 2, 3});
}

} // namespace agm
