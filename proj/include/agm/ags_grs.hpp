#pragma once

#include <span>

#include "agm/ags_aux.hpp"
#include "agm/ags_core.hpp"
#include "agm/ags_riemann.hpp"

namespace agm {

namespace detail {

/// First covariant derivative of a solved from the contractions of the
/// integrability-defect tensor:
///   (n^2+n-2)/n * a_ij,l = -Theta^a_ij(a)l - (1/n) Theta^a_(i|l(a)|j).
inline Tensor grs_a_derivative(const Tensor& theta, int n) {
    Tensor t1 = einsum("ijl", {{&theta, "aijal"}});
    Tensor t2 = add(einsum("ijl", {{&theta, "ailaj"}}), einsum("ijl", {{&theta, "ajlai"}}));
    Tensor rhs = scale(add(t1, scale(t2, 1.0 / n)), -1.0);
    return scale(rhs, static_cast<double>(n) / (n * n + n - 2.0));
}

/// Same contraction applied to the derivative level of theta, giving the
/// substituted second covariant derivative a_ij,lk (slots i,j,l,k).
inline Tensor grs_a_second_derivative(const TJet& theta, int n) {
    const Tensor& dth = theta.lv[1];
    Tensor t1 = einsum("ijlk", {{&dth, "aijalk"}});
    Tensor t2 = add(einsum("ijlk", {{&dth, "ailajk"}}), einsum("ijlk", {{&dth, "ajlaik"}}));
    Tensor rhs = scale(add(t1, scale(t2, 1.0 / n)), -1.0);
    return scale(rhs, static_cast<double>(n) / (n * n + n - 2.0));
}

} // namespace detail

struct GrsEval {
    Tensor dP;     // ^h_ij|k
    Tensor da;     // _ij|l
    Tensor dRbar;  // ^h_ijk|l (equals RbarD)
    Tensor dRbarD; // ^h_ijkl|k2
    Tensor theta, bigT, bigN, omega, bigS;
};

inline GrsEval grs_evaluate(const GrsUnknowns& u, const Connection& conn, std::span<const double> x) {
    const int n = u.P.dim();
    GrsEval ev;
    Tensor delta = kronecker(n);
    TJet Rc = curvature_cjet(conn, x, 2);

    SystemJets s0;
    s0.n = n;
    s0.delta = delta;
    s0.Rc = Rc;
    s0.P = jet_const(u.P, 0);
    s0.a = jet_const(u.a, 0);
    s0.Rbar = jet_const(u.Rbar, 0);
    Tensor theta0 = theta_jet(s0, 0).value();

    ev.da = detail::grs_a_derivative(theta0, n);
    ev.dP = fundamental_rhs(u.P, u.a, u.Rbar, Rc.value());
    ev.dRbar = u.RbarD;

    SystemJets s1;
    s1.n = n;
    s1.delta = delta;
    s1.Rc = Rc;
    s1.P = TJet({std::vector<Tensor>{u.P, ev.dP}});
    s1.a = TJet({std::vector<Tensor>{u.a, ev.da}});
    s1.Rbar = TJet({std::vector<Tensor>{u.Rbar, u.RbarD}});

    AuxJets chain = aux_chain(s1, 0);
    ev.theta = chain.theta.value();
    ev.bigT = chain.bigT.value();
    ev.bigN = chain.bigN.value();
    ev.omega = chain.omega.value();
    ev.bigS = chain.bigS.value();

    TJet theta1 = theta_jet(s1, 1);
    Tensor aSecond = detail::grs_a_second_derivative(theta1, n);
    ev.dRbarD = solved_rbar_second_derivative(aSecond, ev.bigS, delta);
    return ev;
}

struct GrsDerivs {
    Tensor dP, da, dRbar, dRbarD;
};

/// Complete first-order derivative data for the generalized Ricci-symmetric
/// unknowns. Requires n >= 2 so the scalar coefficient is invertible; the
/// state must satisfy the algebraic side conditions within `constraintTol`.
inline GrsDerivs grs_closure_rhs(const GrsUnknowns& u, const Connection& conn, std::span<const double> x,
                                 double constraintTol = 1e-6) {
    if (u.P.dim() < 2) throw std::invalid_argument("grs_closure_rhs: dimension must be >= 2");
    detail::require_constraints(u, constraintTol, "grs_closure_rhs");
    GrsEval ev = grs_evaluate(u, conn, x);
    return GrsDerivs{ev.dP, ev.da, ev.dRbar, ev.dRbarD};
}

inline SystemJets grs_jets(const GrsUnknowns& u, const Connection& conn, std::span<const double> x,
                           int uord) {
    GrsEval ev = grs_evaluate(u, conn, x);
    const int n = u.P.dim();
    SystemJets s;
    s.n = n;
    s.delta = kronecker(n);
    s.Rc = curvature_cjet(conn, x, 3);
    std::vector<Tensor> pl{u.P}, al{u.a}, rl{u.Rbar};
    if (uord >= 1) {
        pl.push_back(ev.dP);
        al.push_back(ev.da);
        rl.push_back(u.RbarD);
    }
    if (uord >= 2) {
        TJet P1({std::vector<Tensor>{u.P, ev.dP}});
        TJet a1({std::vector<Tensor>{u.a, ev.da}});
        TJet Rb1({std::vector<Tensor>{u.Rbar, u.RbarD}});
        pl.push_back(fundamental_rhs_jet(P1, a1, Rb1, s.Rc, s.delta, 1).lv[1]);
        TJet theta1 = theta_jet(SystemJets{n, s.delta, s.Rc, P1, a1, Rb1}, 1);
        al.push_back(detail::grs_a_second_derivative(theta1, n));
        rl.push_back(ev.dRbarD);
    }
    s.P = TJet{std::move(pl)};
    s.a = TJet{std::move(al)};
    s.Rbar = TJet{std::move(rl)};
    return s;
}

/// Value-level auxiliary builders for the generalized Ricci-symmetric system.
inline Tensor build_theta(const GrsUnknowns& u, const Connection& c, std::span<const double> x) {
    return theta_jet(grs_jets(u, c, x, 1), 0).value();
}
inline Tensor build_t(const GrsUnknowns& u, const Connection& c, std::span<const double> x) {
    return t_jet(grs_jets(u, c, x, 2), 0).value();
}
inline Tensor build_n(const GrsUnknowns& u, const Connection& c, std::span<const double> x) {
    return n_jet(grs_jets(u, c, x, 2), 0).value();
}
inline Tensor build_omega(const GrsUnknowns& u, const Connection& c, std::span<const double> x) {
    return omega_jet(grs_jets(u, c, x, 2), 0).value();
}
inline Tensor build_s(const GrsUnknowns& u, const Connection& c, std::span<const double> x) {
    return s_jet(grs_jets(u, c, x, 2), 0).value();
}

} // namespace agm
