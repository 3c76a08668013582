#pragma once

#include <span>
#include <stdexcept>

#include "agm/ags_core.hpp"
#include "agm/geometry.hpp"
#include "agm/jet.hpp"
#include "agm/tensor.hpp"

namespace agm {

/// Jets of the unknown fields with derivative levels substituted from the
/// closed system, together with the base-connection curvature jet. This is the
/// working form every auxiliary-tensor builder consumes: a builder of order q
/// needs P, a, Rbar at order q (q+1 for the chained builders, which reference
/// first derivatives) and the curvature at one or two orders above q.
struct SystemJets {
    int n = 0;
    Tensor delta;
    TJet Rc;   // base curvature ^h_ijk
    TJet P;    // ^h_ij
    TJet a;    // _ij
    TJet Rbar; // ^h_ijk
};

/// Integrability-defect tensor of the fundamental system (5 slots ^h_ijkl).
inline TJet theta_jet(const SystemJets& s, int ord) {
    TJet P = jet_truncate(s.P, ord);
    TJet a = jet_truncate(s.a, ord);
    TJet Rb = jet_truncate(s.Rbar, ord);
    TJet Rc = jet_truncate(s.Rc, ord);
    TJet dRc = jet_truncate(jet_shift(s.Rc), ord);
    TJet d = jet_const(s.delta, ord);
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("hijkl", fs, ord); };

    TJet acc = jet_alternate(jet_cyclic(E({{&dRc, "hijkl"}}), {1, 2}), 3, 4);
    acc = jet_add(acc, jet_scale(E({{&P, "aij"}, {&Rb, "hakl"}}), 3.0));
    acc = jet_sub(acc, jet_scale(jet_cyclic(E({{&P, "haj"}, {&Rc, "aikl"}}), {1, 2}), 3.0));

    acc = jet_sub(acc, jet_cyclic(E({{&P, "hak"}, {&Rc, "aijl"}}), {1, 2}));
    acc = jet_sub(acc, E({{&P, "hak"}, {&d, "ai"}, {&a, "jl"}}));
    acc = jet_sub(acc, E({{&P, "hak"}, {&d, "aj"}, {&a, "li"}}));
    acc = jet_sub(acc, E({{&P, "hak"}, {&d, "al"}, {&a, "ij"}}));

    acc = jet_add(acc, jet_cyclic(E({{&P, "hal"}, {&Rc, "aijk"}}), {1, 2}));
    acc = jet_add(acc, E({{&P, "hal"}, {&d, "ai"}, {&a, "jk"}}));
    acc = jet_add(acc, E({{&P, "hal"}, {&d, "aj"}, {&a, "ki"}}));
    acc = jet_add(acc, E({{&P, "hal"}, {&d, "ak"}, {&a, "ij"}}));

    acc = jet_sub(acc, jet_cyclic(E({{&P, "ali"}, {&Rb, "hajk"}}), {1, 2}));
    acc = jet_sub(acc, jet_cyclic(E({{&P, "ali"}, {&Rb, "hjak"}}), {1, 2}));
    acc = jet_add(acc, jet_cyclic(E({{&P, "aki"}, {&Rb, "hajl"}}), {1, 2}));
    acc = jet_add(acc, jet_cyclic(E({{&P, "aki"}, {&Rb, "hjal"}}), {1, 2}));
    return acc;
}

/// Second-derivative defect tensor (6 slots ^h_ijklm); consumes the first
/// derivative of theta, so its ingredients sit one jet order higher.
inline TJet t_jet(const SystemJets& s, int ord, const TJet* thetaPre = nullptr) {
    TJet theta = thetaPre ? jet_truncate(*thetaPre, ord + 1) : theta_jet(s, ord + 1);
    TJet dTh = jet_shift(theta);
    TJet th = jet_truncate(theta, ord);
    TJet P = jet_truncate(s.P, ord);
    TJet aP = jet_truncate(jet_shift(s.a), ord); // a_ij,k
    TJet Rb = jet_truncate(s.Rbar, ord);
    TJet d = jet_const(s.delta, ord);
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("hijklm", fs, ord); };

    TJet acc = jet_cyclic(E({{&Rb, "hamk"}, {&Rb, "aijl"}}), {1, 2});
    acc = jet_sub(acc, jet_cyclic(E({{&Rb, "almk"}, {&Rb, "hija"}}), {1, 2}));
    acc = jet_sub(acc, E({{&Rb, "ajmk"}, {&Rb, "hial"}}));
    acc = jet_sub(acc, E({{&Rb, "ajmk"}, {&Rb, "hail"}}));
    acc = jet_sub(acc, E({{&Rb, "aimk"}, {&Rb, "hjal"}}));
    acc = jet_sub(acc, E({{&Rb, "aimk"}, {&Rb, "hajl"}}));

    acc = jet_sub(acc, E({{&P, "hma"}, {&d, "ai"}, {&aP, "jkl"}}));
    acc = jet_sub(acc, E({{&P, "hma"}, {&d, "aj"}, {&aP, "kil"}}));
    acc = jet_sub(acc, E({{&P, "hma"}, {&d, "ak"}, {&aP, "ijl"}}));

    acc = jet_sub(acc, E({{&P, "amj"}, {&d, "hi"}, {&aP, "akl"}}));
    acc = jet_sub(acc, E({{&P, "amj"}, {&d, "ha"}, {&aP, "kil"}}));
    acc = jet_sub(acc, E({{&P, "amj"}, {&d, "hk"}, {&aP, "ial"}}));

    acc = jet_sub(acc, E({{&P, "ami"}, {&d, "ha"}, {&aP, "jkl"}}));
    acc = jet_sub(acc, E({{&P, "ami"}, {&d, "hj"}, {&aP, "kal"}}));
    acc = jet_sub(acc, E({{&P, "ami"}, {&d, "hk"}, {&aP, "ajl"}}));

    acc = jet_sub(acc, E({{&P, "amk"}, {&d, "ha"}, {&aP, "ijl"}}));
    acc = jet_sub(acc, E({{&P, "amk"}, {&d, "hi"}, {&aP, "jal"}}));
    acc = jet_sub(acc, E({{&P, "amk"}, {&d, "hj"}, {&aP, "ail"}}));

    acc = jet_sub(acc, E({{&P, "aml"}, {&d, "hi"}, {&aP, "jka"}}));
    acc = jet_sub(acc, E({{&P, "aml"}, {&d, "hj"}, {&aP, "kia"}}));
    acc = jet_sub(acc, E({{&P, "aml"}, {&d, "hk"}, {&aP, "ija"}}));

    acc = jet_sub(acc, E({{&P, "hma"}, {&d, "ai"}, {&aP, "jlk"}}));
    acc = jet_sub(acc, E({{&P, "hma"}, {&d, "aj"}, {&aP, "lik"}}));
    acc = jet_sub(acc, E({{&P, "hma"}, {&d, "al"}, {&aP, "ijk"}}));

    acc = jet_add(acc, E({{&P, "ami"}, {&d, "ha"}, {&aP, "jlk"}}));
    acc = jet_add(acc, E({{&P, "ami"}, {&d, "hj"}, {&aP, "lak"}}));
    acc = jet_add(acc, E({{&P, "ami"}, {&d, "hl"}, {&aP, "ajk"}}));

    acc = jet_add(acc, E({{&P, "amj"}, {&d, "hi"}, {&aP, "alk"}}));
    acc = jet_add(acc, E({{&P, "amj"}, {&d, "ha"}, {&aP, "lik"}}));
    acc = jet_add(acc, E({{&P, "amj"}, {&d, "hl"}, {&aP, "iak"}}));

    acc = jet_add(acc, E({{&P, "amk"}, {&d, "hi"}, {&aP, "jla"}}));
    acc = jet_add(acc, E({{&P, "amk"}, {&d, "hj"}, {&aP, "lia"}}));
    acc = jet_add(acc, E({{&P, "amk"}, {&d, "hl"}, {&aP, "ija"}}));

    acc = jet_sub(acc, E({{&P, "aml"}, {&d, "hi"}, {&aP, "jak"}}));
    acc = jet_sub(acc, E({{&P, "aml"}, {&d, "hj"}, {&aP, "aik"}}));
    acc = jet_sub(acc, E({{&P, "aml"}, {&d, "ha"}, {&aP, "ijk"}}));

    acc = jet_sub(acc, E({{&dTh, "hijklm"}}));
    acc = jet_add(acc, E({{&P, "ham"}, {&th, "aijkl"}}));
    acc = jet_sub(acc, E({{&P, "ami"}, {&th, "hajkl"}}));
    acc = jet_sub(acc, E({{&P, "amj"}, {&th, "hiakl"}}));
    acc = jet_sub(acc, E({{&P, "amk"}, {&th, "hijal"}}));
    acc = jet_sub(acc, E({{&P, "aml"}, {&th, "hijka"}}));
    return acc;
}

/// Alternated second-derivative defect (6 slots ^h_ijklm).
inline TJet n_jet(const SystemJets& s, int ord, const TJet* tPre = nullptr) {
    TJet bigT = tPre ? jet_truncate(*tPre, ord) : t_jet(s, ord);
    TJet a = jet_truncate(s.a, ord);
    TJet Rb = jet_truncate(s.Rbar, ord);
    TJet Rc = jet_truncate(s.Rc, ord);
    TJet d = jet_const(s.delta, ord);
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("hijklm", fs, ord); };

    TJet acc = jet_alternate(bigT, 4, 5);

    acc = jet_add(acc, E({{&Rb, "aiml"}, {&Rb, "hajk"}}));
    acc = jet_add(acc, E({{&Rb, "aiml"}, {&Rb, "hjak"}}));
    acc = jet_add(acc, E({{&Rb, "ajml"}, {&Rb, "haik"}}));
    acc = jet_add(acc, E({{&Rb, "ajml"}, {&Rb, "hiak"}}));
    acc = jet_add(acc, E({{&Rb, "akml"}, {&Rb, "hija"}}));
    acc = jet_add(acc, E({{&Rb, "akml"}, {&Rb, "hjia"}}));
    acc = jet_sub(acc, E({{&Rb, "haml"}, {&Rb, "aijk"}}));
    acc = jet_sub(acc, E({{&Rb, "haml"}, {&Rb, "ajik"}}));

    acc = jet_add(acc, E({{&d, "ha"}, {&a, "jk"}, {&Rc, "ailm"}}));
    acc = jet_add(acc, E({{&d, "hj"}, {&a, "ka"}, {&Rc, "ailm"}}));
    acc = jet_add(acc, E({{&d, "hk"}, {&a, "aj"}, {&Rc, "ailm"}}));

    acc = jet_add(acc, E({{&d, "ha"}, {&a, "ik"}, {&Rc, "ajlm"}}));
    acc = jet_add(acc, E({{&d, "hi"}, {&a, "ka"}, {&Rc, "ajlm"}}));
    acc = jet_add(acc, E({{&d, "hk"}, {&a, "ai"}, {&Rc, "ajlm"}}));

    acc = jet_add(acc, E({{&d, "ha"}, {&a, "ij"}, {&Rc, "aklm"}}));
    acc = jet_add(acc, E({{&d, "hi"}, {&a, "ja"}, {&Rc, "aklm"}}));
    acc = jet_add(acc, E({{&d, "hj"}, {&a, "ai"}, {&Rc, "aklm"}}));

    acc = jet_sub(acc, jet_cyclic(E({{&a, "ij"}, {&Rc, "hklm"}}), {1, 2, 3}));
    return acc;
}

/// Symmetrization defect entering the solved-for second derivatives
/// (6 slots ^h_ijklm).
inline TJet omega_jet(const SystemJets& s, int ord, const TJet* nPre = nullptr) {
    TJet bigN = nPre ? jet_truncate(*nPre, ord) : n_jet(s, ord);
    TJet Rb = jet_truncate(s.Rbar, ord);
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("hijklm", fs, ord); };

    TJet acc = jet_scale(bigN, -1.0);
    acc = jet_add(acc, E({{&bigN, "hkijlm"}}));
    acc = jet_sub(acc, E({{&bigN, "hkjilm"}}));

    acc = jet_sub(acc, E({{&Rb, "haml"}, {&Rb, "akji"}}));
    acc = jet_sub(acc, E({{&Rb, "haml"}, {&Rb, "ajki"}}));
    acc = jet_add(acc, E({{&Rb, "hjal"}, {&Rb, "amik"}}));
    acc = jet_add(acc, E({{&Rb, "hjma"}, {&Rb, "alik"}}));

    acc = jet_sub(acc, E({{&Rb, "haij"}, {&Rb, "akml"}}));
    acc = jet_sub(acc, E({{&Rb, "haik"}, {&Rb, "ajml"}}));
    acc = jet_add(acc, E({{&Rb, "hjal"}, {&Rb, "amik"}}));
    acc = jet_add(acc, E({{&Rb, "hjma"}, {&Rb, "alik"}}));
    acc = jet_sub(acc, E({{&Rb, "haml"}, {&Rb, "aikj"}}));
    acc = jet_sub(acc, E({{&Rb, "hial"}, {&Rb, "amkj"}}));
    acc = jet_add(acc, E({{&Rb, "aiml"}, {&Rb, "hakj"}}));
    acc = jet_sub(acc, E({{&Rb, "aima"}, {&Rb, "hlkj"}}));
    return acc;
}

/// Conversion defect between the two covariant derivatives in the
/// second-derivative system (6 slots ^h_ijklm). References the first
/// derivative of Rbar through its jet.
inline TJet s_jet(const SystemJets& s, int ord, const TJet* omegaPre = nullptr) {
    TJet omega = omegaPre ? jet_truncate(*omegaPre, ord) : omega_jet(s, ord);
    TJet P = jet_truncate(s.P, ord);
    TJet Rb = jet_truncate(s.Rbar, ord);
    TJet Rp = jet_truncate(jet_shift(s.Rbar), ord); // Rbar^h_ijk,l
    auto E = [&](std::initializer_list<JFac> fs) { return jet_einsum("hijklm", fs, ord); };

    TJet inner = E({{&Rp, "ajmli"}, {&P, "hak"}});
    inner = jet_sub(inner, E({{&Rp, "hamli"}, {&P, "ajk"}}));
    inner = jet_sub(inner, E({{&Rp, "hjali"}, {&P, "amk"}}));
    inner = jet_sub(inner, E({{&Rp, "hjmai"}, {&P, "alk"}}));
    inner = jet_sub(inner, E({{&Rp, "hjmla"}, {&P, "aik"}}));

    inner = jet_add(inner, E({{&Rb, "ajml"}, {&P, "bai"}, {&P, "hbk"}}));
    inner = jet_sub(inner, E({{&Rb, "baml"}, {&P, "aij"}, {&P, "hbk"}}));
    inner = jet_sub(inner, E({{&Rb, "bjal"}, {&P, "aim"}, {&P, "hbk"}}));
    inner = jet_sub(inner, E({{&Rb, "bjma"}, {&P, "ail"}, {&P, "hbk"}}));

    inner = jet_sub(inner, E({{&Rb, "ajml"}, {&P, "hab"}, {&P, "bik"}}));
    inner = jet_add(inner, E({{&Rb, "haml"}, {&P, "abj"}, {&P, "bik"}}));
    inner = jet_add(inner, E({{&Rb, "hjal"}, {&P, "abm"}, {&P, "bik"}}));
    inner = jet_add(inner, E({{&Rb, "hjma"}, {&P, "abl"}, {&P, "bik"}}));

    inner = jet_sub(inner, E({{&Rb, "abml"}, {&P, "hai"}, {&P, "bjk"}}));
    inner = jet_add(inner, E({{&Rb, "haml"}, {&P, "abi"}, {&P, "bjk"}}));
    inner = jet_add(inner, E({{&Rb, "hbal"}, {&P, "aim"}, {&P, "bjk"}}));
    inner = jet_add(inner, E({{&Rb, "hbma"}, {&P, "ail"}, {&P, "bjk"}}));

    inner = jet_sub(inner, E({{&Rb, "ajbl"}, {&P, "hai"}, {&P, "bkm"}}));
    inner = jet_add(inner, E({{&Rb, "habl"}, {&P, "aji"}, {&P, "bkm"}}));
    inner = jet_add(inner, E({{&Rb, "hjal"}, {&P, "abi"}, {&P, "bkm"}}));
    inner = jet_add(inner, E({{&Rb, "hjba"}, {&P, "ail"}, {&P, "bkm"}}));

    inner = jet_sub(inner, E({{&Rb, "ajmb"}, {&P, "hai"}, {&P, "bkl"}}));
    inner = jet_add(inner, E({{&Rb, "hamb"}, {&P, "aji"}, {&P, "bkl"}}));
    inner = jet_add(inner, E({{&Rb, "hjab"}, {&P, "ami"}, {&P, "bkl"}}));
    inner = jet_add(inner, E({{&Rb, "hjma"}, {&P, "abi"}, {&P, "bkl"}}));

    return jet_sub(omega, jet_scale(inner, 2.0));
}

struct AuxJets {
    TJet theta, bigT, bigN, omega, bigS;
};

/// The whole chain with sharing; `ord` applies to every output.
inline AuxJets aux_chain(const SystemJets& s, int ord) {
    AuxJets out;
    out.theta = theta_jet(s, ord + 1);
    out.bigT = t_jet(s, ord, &out.theta);
    out.bigN = n_jet(s, ord, &out.bigT);
    out.omega = omega_jet(s, ord, &out.bigN);
    out.bigS = s_jet(s, ord, &out.omega);
    out.theta = jet_truncate(out.theta, ord);
    return out;
}

} // namespace agm
