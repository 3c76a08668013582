#pragma once

#include <span>

#include "agm/ags_aux.hpp"
#include "agm/ags_core.hpp"

namespace agm {

struct MetricJets {
    TJet g;  // _ij
    TJet gi; // ^ij
};

/// Jet of the inverse metric from the metric's jet.
inline TJet inverse_metric_jet(const TJet& g, int ord) {
    Tensor gi0 = invert(g.value(), 1e-9);
    TJet gi;
    gi.lv.push_back(gi0);
    if (ord >= 1) {
        const Tensor& dg = g.lv[1];
        gi.lv.push_back(scale(einsum("ijk", {{&gi0, "ia"}, {&dg, "abk"}, {&gi0, "bj"}}), -1.0));
    }
    if (ord >= 2) {
        const Tensor& dg = g.lv[1];
        const Tensor& ddg = g.lv[2];
        const Tensor& l1 = gi.lv[1];
        Tensor t1 = einsum("ijkl", {{&l1, "ial"}, {&dg, "abk"}, {&gi0, "bj"}});
        Tensor t2 = einsum("ijkl", {{&gi0, "ia"}, {&ddg, "abkl"}, {&gi0, "bj"}});
        Tensor t3 = einsum("ijkl", {{&gi0, "ia"}, {&dg, "abk"}, {&l1, "bjl"}});
        gi.lv.push_back(scale(add(add(t1, t2), t3), -1.0));
    }
    return gi;
}

/// Lowered symmetrization defect, 6 covariant slots ordered (i,j,k,m,h,l).
inline TJet c6_jet(const SystemJets& s, const MetricJets& m, const TJet& omega, int ord) {
    TJet O = jet_truncate(omega, ord);
    TJet a = jet_truncate(s.a, ord);
    TJet g = jet_truncate(m.g, ord);
    TJet Rc = jet_truncate(s.Rc, ord);
    const double cn = 2.0 / (s.n + 1);
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("ijkmhl", fs, ord); };

    TJet acc = jet_scale(E({{&O, "aijklm"}, {&g, "ah"}}), -1.0);
    acc = jet_sub(acc, E({{&O, "aihklm"}, {&g, "aj"}}));
    acc = jet_add(acc, jet_scale(E({{&O, "aiaklm"}, {&g, "jh"}}), cn));
    acc = jet_sub(acc, E({{&g, "kh"}, {&a, "al"}, {&Rc, "amij"}}));

    acc = jet_add(acc, jet_scale(E({{&g, "ih"}, {&O, "amaljk"}}), cn));
    acc = jet_sub(acc, E({{&g, "ih"}, {&a, "ak"}, {&Rc, "amlj"}}));
    acc = jet_sub(acc, E({{&g, "ih"}, {&a, "ak"}, {&Rc, "almj"}}));
    acc = jet_sub(acc, E({{&g, "ih"}, {&a, "aj"}, {&Rc, "alkm"}}));
    acc = jet_sub(acc, E({{&g, "ih"}, {&a, "aj"}, {&Rc, "amkl"}}));
    acc = jet_sub(acc, E({{&g, "ih"}, {&a, "am"}, {&Rc, "alkj"}}));
    acc = jet_sub(acc, E({{&g, "ih"}, {&a, "al"}, {&Rc, "amkj"}}));

    acc = jet_add(acc, jet_scale(E({{&g, "ij"}, {&O, "amalhk"}}), cn));
    acc = jet_sub(acc, E({{&g, "ij"}, {&a, "ak"}, {&Rc, "amlh"}}));
    acc = jet_sub(acc, E({{&g, "ij"}, {&a, "ak"}, {&Rc, "almh"}}));
    acc = jet_sub(acc, E({{&g, "ij"}, {&a, "ah"}, {&Rc, "alkm"}}));
    acc = jet_sub(acc, E({{&g, "ij"}, {&a, "ah"}, {&Rc, "amkl"}}));
    acc = jet_sub(acc, E({{&g, "ij"}, {&a, "am"}, {&Rc, "alkh"}}));
    acc = jet_sub(acc, E({{&g, "ij"}, {&a, "al"}, {&Rc, "amkh"}}));

    acc = jet_add(acc, jet_scale(E({{&g, "kh"}, {&O, "amalji"}}), cn));
    acc = jet_sub(acc, E({{&g, "kh"}, {&a, "ai"}, {&Rc, "amlj"}}));
    acc = jet_sub(acc, E({{&g, "kh"}, {&a, "ai"}, {&Rc, "almj"}}));
    acc = jet_sub(acc, E({{&g, "kh"}, {&a, "aj"}, {&Rc, "alim"}}));
    acc = jet_sub(acc, E({{&g, "kh"}, {&a, "aj"}, {&Rc, "amil"}}));
    acc = jet_sub(acc, E({{&g, "kh"}, {&a, "am"}, {&Rc, "alij"}}));
    acc = jet_add(acc, E({{&g, "kh"}, {&a, "al"}, {&Rc, "amij"}}));

    acc = jet_add(acc, jet_scale(E({{&g, "kj"}, {&O, "amalhi"}}), cn));
    acc = jet_sub(acc, E({{&g, "kj"}, {&a, "ai"}, {&Rc, "amlh"}}));
    acc = jet_sub(acc, E({{&g, "kj"}, {&a, "ai"}, {&Rc, "almh"}}));
    acc = jet_sub(acc, E({{&g, "kj"}, {&a, "ah"}, {&Rc, "alim"}}));
    acc = jet_sub(acc, E({{&g, "kj"}, {&a, "ah"}, {&Rc, "amil"}}));
    acc = jet_sub(acc, E({{&g, "kj"}, {&a, "am"}, {&Rc, "alih"}}));
    acc = jet_add(acc, E({{&g, "kj"}, {&a, "al"}, {&Rc, "amih"}}));
    return acc;
}

/// Contracted second-derivative defect, slots (k,m,h,l).
inline TJet b_jet(const SystemJets& s, const MetricJets& m, const TJet& c6, const TJet& omega, int ord) {
    TJet C = jet_truncate(c6, ord);
    TJet O = jet_truncate(omega, ord);
    TJet a = jet_truncate(s.a, ord);
    TJet gi = jet_truncate(m.gi, ord);
    TJet Rc = jet_truncate(s.Rc, ord);
    const double c1 = 3.0 / (s.n + 1), c2 = 1.0 / (s.n + 1);
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("kmhl", fs, ord); };

    TJet acc = E({{&C, "abkmhl"}, {&gi, "ab"}});
    acc = jet_add(acc, jet_scale(E({{&a, "ma"}, {&Rc, "alhk"}}), 3.0));
    acc = jet_add(acc, jet_scale(E({{&a, "ha"}, {&Rc, "amkl"}}), 1.5));
    acc = jet_add(acc, jet_scale(E({{&a, "ka"}, {&Rc, "amhl"}}), 1.5));
    acc = jet_add(acc, jet_scale(E({{&a, "la"}, {&Rc, "amhk"}}), 1.5));

    acc = jet_add(acc, jet_scale(E({{&O, "alakhm"}}), c1));
    acc = jet_sub(acc, jet_scale(E({{&O, "ahaklm"}}), c1));
    acc = jet_sub(acc, jet_scale(E({{&O, "ahalkm"}}), c1));

    acc = jet_sub(acc, jet_scale(E({{&a, "ma"}, {&Rc, "alkh"}}), 0.5));
    acc = jet_sub(acc, jet_scale(E({{&a, "ka"}, {&Rc, "amhl"}}), 0.5));
    acc = jet_sub(acc, jet_scale(E({{&a, "ha"}, {&Rc, "amkl"}}), 0.5));
    acc = jet_sub(acc, jet_scale(E({{&a, "la"}, {&Rc, "amkh"}}), 0.5));

    acc = jet_sub(acc, jet_scale(E({{&O, "alahkm"}}), c2));
    acc = jet_add(acc, jet_scale(E({{&O, "akahlm"}}), c2));
    acc = jet_add(acc, jet_scale(E({{&O, "akalhm"}}), c2));

    acc = jet_sub(acc, E({{&a, "ah"}, {&Rc, "aklm"}}));
    acc = jet_sub(acc, E({{&a, "ak"}, {&Rc, "ahlm"}}));

    acc = jet_add(acc, jet_scale(E({{&a, "ka"}, {&Rc, "almh"}}), 0.5));
    acc = jet_add(acc, jet_scale(E({{&a, "ha"}, {&Rc, "alkm"}}), 0.5));
    acc = jet_add(acc, jet_scale(E({{&a, "ma"}, {&Rc, "alkh"}}), 0.5));
    return acc;
}

/// Four-slot contraction of the lowered defect, slots (k,l,j,m).
inline TJet c4_jet(const SystemJets& s, const MetricJets& m, const TJet& c6, const TJet& b4, int ord) {
    TJet C = jet_truncate(c6, ord);
    TJet B = jet_truncate(b4, ord);
    TJet a = jet_truncate(s.a, ord);
    TJet gi = jet_truncate(m.gi, ord);
    TJet Rc = jet_truncate(s.Rc, ord);
    const double c = 2.0 * (s.n + 1);
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("kljm", fs, ord); };

    TJet acc = E({{&C, "ajkmbl"}, {&gi, "ab"}});
    acc = jet_add(acc, E({{&C, "ajklbm"}, {&gi, "ab"}}));

    TJet inner = E({{&B, "kmlj"}});
    inner = jet_add(inner, E({{&B, "klmj"}}));
    inner = jet_sub(inner, E({{&a, "al"}, {&Rc, "amjk"}}));
    inner = jet_sub(inner, E({{&a, "am"}, {&Rc, "aljk"}}));
    inner = jet_add(inner, E({{&a, "ja"}, {&Rc, "amkl"}}));
    inner = jet_add(inner, E({{&a, "ja"}, {&Rc, "alkm"}}));
    inner = jet_add(inner, E({{&a, "ka"}, {&Rc, "almj"}}));
    inner = jet_add(inner, E({{&a, "ka"}, {&Rc, "amlj"}}));
    return jet_sub(acc, jet_scale(inner, c));
}

/// Solved-for combination entering the second-derivative expression for a,
/// slots (k,m,h,l).
inline TJet a4_jet(const SystemJets& s, const MetricJets& m, const TJet& b4, const TJet& c4, int ord) {
    TJet B = jet_truncate(b4, ord);
    TJet C4 = jet_truncate(c4, ord);
    TJet g = jet_truncate(m.g, ord);
    TJet gi = jet_truncate(m.gi, ord);
    const double c = 1.0 / (2.0 * s.n * (s.n + 1));
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("kmhl", fs, ord); };
    TJet acc = B;
    acc = jet_add(acc, jet_scale(E({{&g, "hm"}, {&C4, "abkl"}, {&gi, "ab"}}), c));
    acc = jet_sub(acc, jet_scale(E({{&g, "hl"}, {&C4, "abkm"}, {&gi, "ab"}}), c));
    return acc;
}

/// Six-slot tensor entering the second covariant derivative of a,
/// slots (i,j,k,m,h,l).
inline TJet a6_jet(const MetricJets& m, const TJet& c6, const TJet& a4, int ord) {
    TJet C = jet_truncate(c6, ord);
    TJet A = jet_truncate(a4, ord);
    TJet g = jet_truncate(m.g, ord);
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("ijkmhl", fs, ord); };

    TJet inner = E({{&g, "ih"}, {&A, "kmjl"}});
    inner = jet_add(inner, E({{&g, "ij"}, {&A, "kmhl"}}));
    inner = jet_add(inner, E({{&g, "kh"}, {&A, "imjl"}}));
    inner = jet_add(inner, E({{&g, "kj"}, {&A, "imlh"}}));
    inner = jet_add(inner, E({{&g, "kl"}, {&A, "imhj"}}));
    inner = jet_sub(inner, E({{&g, "mh"}, {&A, "kijl"}}));
    inner = jet_sub(inner, E({{&g, "mj"}, {&A, "kihl"}}));
    inner = jet_sub(inner, E({{&g, "lh"}, {&A, "kjim"}}));
    inner = jet_sub(inner, E({{&g, "lj"}, {&A, "khim"}}));
    return jet_sub(C, jet_scale(inner, 2.0));
}

/// Symmetrized (i,j)-part of the six-slot tensor contracted with the inverse
/// metric over its trailing pair; this is exactly the tail of the solved
/// second derivative of a. Slots (i,j,k,m).
inline TJet a6_contracted_jet(const MetricJets& m, const TJet& a6, int ord) {
    TJet A = jet_truncate(a6, ord);
    TJet gi = jet_truncate(m.gi, ord);
    TJet acc = jet_einsum("ijkm", {{&A, "ijkmab"}, {&gi, "ab"}}, ord);
    return jet_add(acc, jet_einsum("ijkm", {{&A, "jikmab"}, {&gi, "ab"}}, ord));
}

/// Solved second covariant derivative of a, slots (i,j,k | m):
///   a_ij,km = K/(n(n+3)) (g_ij g_km + 3 g_k(j g_i)m) + contracted six-slot tail.
inline Tensor solved_a_second_derivative(double K, const Tensor& g, const Tensor& w, int n) {
    Tensor metricPart = einsum("ijkm", {{&g, "ij"}, {&g, "km"}});
    metricPart = add(metricPart, scale(einsum("ijkm", {{&g, "kj"}, {&g, "im"}}), 3.0));
    metricPart = add(metricPart, scale(einsum("ijkm", {{&g, "ki"}, {&g, "jm"}}), 3.0));
    return add(scale(metricPart, K / (n * (n + 3.0))), w);
}

/// Shared right side of the first-order equation for the (1,4) unknown:
/// builds the delta/second-derivative block plus the conversion defect and
/// reorders into canonical unknown slots (h, j, m, l, i | k), halved.
inline Tensor solved_rbar_second_derivative(const Tensor& aSecond, const Tensor& bigS, const Tensor& delta) {
    auto E = [&](const Tensor& dd, std::string_view dl, const Tensor& aa, std::string_view al) {
        return einsum("hijklm", {{&dd, dl}, {&aa, al}});
    };
    Tensor x = E(delta, "hi", aSecond, "jlkm");
    x = add(x, E(delta, "hj", aSecond, "likm"));
    x = add(x, E(delta, "hl", aSecond, "ijkm"));

    x = sub(x, E(delta, "hi", aSecond, "jmkl"));
    x = sub(x, E(delta, "hj", aSecond, "mikl"));
    x = sub(x, E(delta, "hm", aSecond, "ijkl"));

    x = sub(x, E(delta, "hk", aSecond, "jmil"));
    x = sub(x, E(delta, "hj", aSecond, "mkil"));
    x = sub(x, E(delta, "hm", aSecond, "kjil"));

    x = add(x, E(delta, "hi", aSecond, "kmjl"));
    x = add(x, E(delta, "hk", aSecond, "mijl"));
    x = add(x, E(delta, "hm", aSecond, "ikjl"));

    x = sub(x, E(delta, "hi", aSecond, "kljm"));
    x = sub(x, E(delta, "hk", aSecond, "lijm"));
    x = sub(x, E(delta, "hl", aSecond, "ikjm"));

    x = add(x, E(delta, "hk", aSecond, "jlim"));
    x = add(x, E(delta, "hj", aSecond, "lkim"));
    x = add(x, E(delta, "hl", aSecond, "kjim"));

    x = add(x, bigS);
    return scale(einsum("hjmlik", {{&x, "hijklm"}}), 0.5);
}

/// Scalar-derivative source, one covariant slot. Consumes order-1 jets of the
/// contracted six-slot tail and the metric.
inline Tensor a_rho_vector(const SystemJets& s, const MetricJets& m, const TJet& w, double K) {
    TJet aP = jet_shift(s.a); // a_ij,k values at lv[0]
    const Tensor& ap = aP.lv[0];
    const Tensor& g0 = m.g.lv[0];
    const Tensor& gd = m.g.lv[1];
    const Tensor& gi0 = m.gi.lv[0];
    const Tensor& Rc0 = s.Rc.lv[0];
    const Tensor& wd = w.lv[1];

    auto E = [&](std::initializer_list<Fac> fs) { return einsum("ijkmr", fs); };

    Tensor x = E({{&ap, "ajk"}, {&Rc0, "aimr"}});
    x = add(x, E({{&ap, "aik"}, {&Rc0, "ajmr"}}));
    x = add(x, E({{&ap, "ija"}, {&Rc0, "akmr"}}));

    Tensor ggroup = sub(E({{&gd, "ijr"}, {&g0, "mk"}}), E({{&gd, "ijm"}, {&g0, "rk"}}));
    ggroup = add(ggroup, sub(E({{&g0, "ij"}, {&gd, "kmr"}}), E({{&g0, "ij"}, {&gd, "krm"}})));
    ggroup = add(ggroup, scale(sub(E({{&gd, "kjr"}, {&g0, "mi"}}), E({{&gd, "kjm"}, {&g0, "ri"}})), 3.0));
    ggroup = add(ggroup, scale(sub(E({{&g0, "kj"}, {&gd, "imr"}}), E({{&g0, "kj"}, {&gd, "irm"}})), 3.0));
    ggroup = add(ggroup, scale(sub(E({{&gd, "kir"}, {&g0, "mj"}}), E({{&gd, "kim"}, {&g0, "rj"}})), 3.0));
    ggroup = add(ggroup, scale(sub(E({{&g0, "ki"}, {&gd, "jmr"}}), E({{&g0, "ki"}, {&gd, "jrm"}})), 3.0));
    x = sub(x, scale(ggroup, K / (s.n * (s.n + 3.0))));

    x = add(x, sub(E({{&wd, "ijkmr"}}), E({{&wd, "ijkrm"}})));

    return einsum("r", {{&x, "ijkmr"}, {&gi0, "ij"}, {&gi0, "km"}});
}

/// Pointwise evaluation of everything the Riemannian-target closed system
/// produces at a state: the full derivative set plus all auxiliary tensors.
struct RiemannEval {
    // first covariant derivatives of the unknowns
    Tensor dgbar; // _ij|k
    Tensor dP;    // ^h_ij|k
    Tensor da;    // _ij|k  (equals aD)
    Tensor daD;   // _ijk|m
    Tensor dK;    // _b
    Tensor dRbar; // ^h_ijk|l (equals RbarD)
    Tensor dRbarD; // ^h_ijkl|k2
    // auxiliary tensors at the point
    Tensor theta, bigT, bigN, omega, bigS;
    Tensor c6, b4, mu, c4, a4, a6;
    Tensor aRho;
};

namespace detail {

inline Tensor metric_compat_rhs(const Tensor& P, const Tensor& g) {
    return add(einsum("ijk", {{&P, "aik"}, {&g, "aj"}}), einsum("ijk", {{&P, "ajk"}, {&g, "ai"}}));
}

inline TJet metric_compat_rhs_jet(const TJet& P, const TJet& g, int ord) {
    return jet_add(jet_einsum("ijk", {{&P, "aik"}, {&g, "aj"}}, ord),
                   jet_einsum("ijk", {{&P, "ajk"}, {&g, "ai"}}, ord));
}

} // namespace detail

inline RiemannEval riemann_evaluate(const RiemannUnknowns& u, const Connection& conn,
                                    std::span<const double> x) {
    const int n = u.P.dim();
    RiemannEval ev;
    Tensor delta = kronecker(n);
    TJet Rc = curvature_cjet(conn, x, 3);
    const double K = u.K.value();

    // first-order substitutions
    TJet P0 = jet_const(u.P, 0), a0 = jet_const(u.a, 0), Rb0 = jet_const(u.Rbar, 0);
    ev.dP = fundamental_rhs_jet(P0, a0, Rb0, jet_truncate(Rc, 0), delta, 0).value();
    ev.dgbar = detail::metric_compat_rhs(u.P, u.gbar);
    ev.da = u.aD;
    ev.dRbar = u.RbarD;

    SystemJets s1;
    s1.n = n;
    s1.delta = delta;
    s1.Rc = Rc;
    s1.P = TJet({std::vector<Tensor>{u.P, ev.dP}});
    s1.a = TJet({std::vector<Tensor>{u.a, u.aD}});
    s1.Rbar = TJet({std::vector<Tensor>{u.Rbar, u.RbarD}});

    MetricJets m1;
    m1.g = TJet({std::vector<Tensor>{u.gbar, ev.dgbar}});
    m1.gi = inverse_metric_jet(m1.g, 1);

    // value pass of the whole chain
    AuxJets chain0 = aux_chain(s1, 0);
    ev.theta = chain0.theta.value();
    ev.bigT = chain0.bigT.value();
    ev.bigN = chain0.bigN.value();
    ev.omega = chain0.omega.value();
    ev.bigS = chain0.bigS.value();

    TJet c60 = c6_jet(s1, m1, chain0.omega, 0);
    TJet b0 = b_jet(s1, m1, c60, chain0.omega, 0);
    TJet c40 = c4_jet(s1, m1, c60, b0, 0);
    TJet a40 = a4_jet(s1, m1, b0, c40, 0);
    TJet a60 = a6_jet(m1, c60, a40, 0);
    TJet w0 = a6_contracted_jet(m1, a60, 0);
    ev.c6 = c60.value();
    ev.b4 = b0.value();
    ev.c4 = c40.value();
    ev.a4 = a40.value();
    ev.a6 = a60.value();

    // mu from the scalar unknown and the contracted four-slot defect
    {
        Tensor c4c = einsum("jm", {{&ev.c4, "abjm"}, {&m1.gi.lv[0], "ab"}});
        ev.mu = add(scale(u.gbar, K / n), scale(c4c, (n + 3.0) / (n * (n + 1.0))));
    }

    // solved second derivatives
    ev.daD = solved_a_second_derivative(K, u.gbar, w0.value(), n);
    ev.dRbarD = solved_rbar_second_derivative(ev.daD, ev.bigS, delta);

    // second-order substitutions
    TJet P2({std::vector<Tensor>{u.P, ev.dP, fundamental_rhs_jet(s1.P, s1.a, s1.Rbar, Rc, delta, 1).lv[1]}});
    TJet g2({std::vector<Tensor>{u.gbar, ev.dgbar, detail::metric_compat_rhs_jet(s1.P, m1.g, 1).lv[1]}});
    TJet a2({std::vector<Tensor>{u.a, u.aD, ev.daD}});
    TJet Rb2({std::vector<Tensor>{u.Rbar, u.RbarD, ev.dRbarD}});

    SystemJets s2;
    s2.n = n;
    s2.delta = delta;
    s2.Rc = Rc;
    s2.P = P2;
    s2.a = a2;
    s2.Rbar = Rb2;

    MetricJets m2;
    m2.g = g2;
    m2.gi = inverse_metric_jet(g2, 1);

    // derivative pass of the chain for the scalar source
    AuxJets chain1 = aux_chain(s2, 1);
    TJet c61 = c6_jet(s2, m2, chain1.omega, 1);
    TJet b1 = b_jet(s2, m2, c61, chain1.omega, 1);
    TJet c41 = c4_jet(s2, m2, c61, b1, 1);
    TJet a41 = a4_jet(s2, m2, b1, c41, 1);
    TJet a61 = a6_jet(m2, c61, a41, 1);
    TJet w1 = a6_contracted_jet(m2, a61, 1);

    ev.aRho = a_rho_vector(s2, m2, w1, K);
    const double coef = n * (n + 3.0) / (n * n + 5.0 * n - 6.0);
    ev.dK = scale(ev.aRho, coef);
    return ev;
}

struct RiemannDerivs {
    Tensor dgbar, dP, da, daD, dK, dRbar, dRbarD;
};

namespace detail {

template <class Unknowns>
void require_constraints(const Unknowns& u, double tol, const char* what) {
    ConstraintReport r = algebraic_constraint_residual(u);
    for (const auto& [name, v] : r.residuals)
        if (v > tol)
            throw std::invalid_argument(std::string(what) + ": state violates '" + name +
                                        "' by " + std::to_string(v) + " (tolerance " +
                                        std::to_string(tol) + ")");
}

} // namespace detail

/// Complete first-order derivative data for the Riemannian unknowns. The
/// state must satisfy the algebraic side conditions within `constraintTol`.
inline RiemannDerivs riemannian_closure_rhs(const RiemannUnknowns& u, const Connection& conn,
                                            std::span<const double> x, double constraintTol = 1e-6) {
    detail::require_constraints(u, constraintTol, "riemannian_closure_rhs");
    RiemannEval ev = riemann_evaluate(u, conn, x);
    return RiemannDerivs{ev.dgbar, ev.dP, ev.da, ev.daD, ev.dK, ev.dRbar, ev.dRbarD};
}

struct RiemannAuxOut {
    Tensor c6, b4, mu, c4, a4, a6, aRho;
    double kRecovered = 0.0; // mu contracted with the inverse metric
};

/// Named auxiliary tensors of the Riemannian-target derivation.
inline RiemannAuxOut build_riemannian_aux(const RiemannUnknowns& u, const Connection& conn,
                                          std::span<const double> x) {
    RiemannEval ev = riemann_evaluate(u, conn, x);
    RiemannAuxOut out{ev.c6, ev.b4, ev.mu, ev.c4, ev.a4, ev.a6, ev.aRho, 0.0};
    Tensor gi = invert(u.gbar, 1e-9);
    out.kRecovered = einsum("", {{&out.mu, "jm"}, {&gi, "jm"}}).value();
    return out;
}

/// Jets of the Riemannian unknowns with closure-substituted derivatives, for
/// driving the auxiliary builders directly.
inline SystemJets riemann_jets(const RiemannUnknowns& u, const Connection& conn, std::span<const double> x,
                               int uord) {
    RiemannEval ev = riemann_evaluate(u, conn, x);
    const int n = u.P.dim();
    SystemJets s;
    s.n = n;
    s.delta = kronecker(n);
    s.Rc = curvature_cjet(conn, x, 3);
    std::vector<Tensor> pl{u.P}, al{u.a}, rl{u.Rbar};
    if (uord >= 1) {
        pl.push_back(ev.dP);
        al.push_back(u.aD);
        rl.push_back(u.RbarD);
    }
    if (uord >= 2) {
        TJet P1({std::vector<Tensor>{u.P, ev.dP}});
        TJet a1({std::vector<Tensor>{u.a, u.aD}});
        TJet Rb1({std::vector<Tensor>{u.Rbar, u.RbarD}});
        pl.push_back(fundamental_rhs_jet(P1, a1, Rb1, s.Rc, s.delta, 1).lv[1]);
        al.push_back(ev.daD);
        rl.push_back(ev.dRbarD);
    }
    s.P = TJet{std::move(pl)};
    s.a = TJet{std::move(al)};
    s.Rbar = TJet{std::move(rl)};
    return s;
}

/// Value-level auxiliary builders for the Riemannian system.
inline Tensor build_theta(const RiemannUnknowns& u, const Connection& c, std::span<const double> x) {
    return theta_jet(riemann_jets(u, c, x, 1), 0).value();
}
inline Tensor build_t(const RiemannUnknowns& u, const Connection& c, std::span<const double> x) {
    return t_jet(riemann_jets(u, c, x, 2), 0).value();
}
inline Tensor build_n(const RiemannUnknowns& u, const Connection& c, std::span<const double> x) {
    return n_jet(riemann_jets(u, c, x, 2), 0).value();
}
inline Tensor build_omega(const RiemannUnknowns& u, const Connection& c, std::span<const double> x) {
    return omega_jet(riemann_jets(u, c, x, 2), 0).value();
}
inline Tensor build_s(const RiemannUnknowns& u, const Connection& c, std::span<const double> x) {
    return s_jet(riemann_jets(u, c, x, 2), 0).value();
}

} // namespace agm
