#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "agm/ags_grs.hpp"
#include "agm/ags_riemann.hpp"
#include "agm/cauchy.hpp"
#include "agm/chart.hpp"
#include "agm/geometry.hpp"

#include "oracles.hpp"

using namespace agm;

static ChartSpec load_chart(const std::string& name) {
    std::ifstream in(std::string(AGM_CHARTS_DIR) + "/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_chart_spec(ss.str());
}

// strips the connection, keeping metric and box: a flat base carrying a metric
static ChartSpec flat_base_with_metric(const ChartSpec& c) {
    ChartSpec f = c;
    f.gamma = TensorField(c.dim, "ull");
    return f;
}

TEST_CASE("riemannian closure: trivial solution has zero derivatives") {
    ChartSpec flat = load_chart("flat2.json");
    Connection conn = connection_of(flat);
    RiemannUnknowns u = zero_riemann_unknowns(2);
    RiemannDerivs d = riemannian_closure_rhs(u, conn, flat.center());
    CHECK(max_abs(d.dgbar) == 0.0);
    CHECK(max_abs(d.dP) == 0.0);
    CHECK(max_abs(d.da) == 0.0);
    CHECK(max_abs(d.daD) == 0.0);
    CHECK(max_abs(d.dK) == 0.0);
    CHECK(max_abs(d.dRbar) == 0.0);
    CHECK(max_abs(d.dRbarD) == 0.0);
}

TEST_CASE("grs closure: trivial solution has zero derivatives") {
    ChartSpec flat = load_chart("flat2.json");
    Connection conn = connection_of(flat);
    GrsUnknowns u = zero_grs_unknowns(2);
    GrsDerivs d = grs_closure_rhs(u, conn, flat.center());
    CHECK(max_abs(d.dP) == 0.0);
    CHECK(max_abs(d.da) == 0.0);
    CHECK(max_abs(d.dRbar) == 0.0);
    CHECK(max_abs(d.dRbarD) == 0.0);
}

TEST_CASE("metric-compatibility equation reproduces the metric's partial derivatives") {
    // flat base, target connection = Levi-Civita of each corpus metric:
    // with P = the target coefficients, the solved dgbar must equal the plain
    // partial derivative of the metric at every point.
    for (const char* name : {"conformal2.json", "poly2.json", "sphere2.json"}) {
        ChartSpec c = load_chart(name);
        ChartSpec flat = flat_base_with_metric(c);
        Connection conn = connection_of(flat);
        MetricField mf = metric_of(c);
        for (int p = 0; p < 10; ++p) {
            auto x = oracle::random_point(c.domain);
            RiemannUnknowns u = zero_riemann_unknowns(c.dim);
            u.gbar = c.metric->eval(x);
            u.P = christoffel(mf, x);
            RiemannDerivs d = riemannian_closure_rhs(u, conn, x);
            Tensor dgExpected = c.metric->partial().eval(x);
            CHECK(max_abs(sub(d.dgbar, dgExpected)) < 1e-9);
        }
    }
}

TEST_CASE("structure of the solved second derivative of a") {
    // K = n(n+3), identity metric, every defect source zero: the solved
    // second derivative reduces to the pure metric pattern; its (1,1,1,1)
    // component at n=2 equals 7 (regression baseline).
    ChartSpec flat = load_chart("flat2.json");
    Connection conn = connection_of(flat);
    RiemannUnknowns u = zero_riemann_unknowns(2);
    u.K = Tensor::scalar(2.0 * (2.0 + 3.0));
    RiemannDerivs d = riemannian_closure_rhs(u, conn, flat.center());
    CHECK(d.daD.at({0, 0, 0, 0}) == doctest::Approx(7.0));
    // full pattern: g_ij g_km + 3 g_kj g_im + 3 g_ki g_jm with g = identity
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int m = 0; m < 2; ++m) {
                    double expect = (i == j && k == m ? 1.0 : 0.0) + 3.0 * (k == j && i == m ? 1.0 : 0.0) +
                                    3.0 * (k == i && j == m ? 1.0 : 0.0);
                    CHECK(d.daD.at({i, j, k, m}) == doctest::Approx(expect));
                }
    // and the scalar unknown stays put for this state
    CHECK(max_abs(d.dK) < 1e-12);
}

TEST_CASE("riemannian derivative substitution validated by finite differences") {
    // Transport all unknowns along x1 with their closure derivatives on a flat
    // base and compare the finite difference of the omega builder against its
    // jet derivative level. This exercises the solved second derivatives of a
    // and of the (1,4) unknown inside the chained builders.
    ChartSpec flat = load_chart("flat2.json");
    Connection conn = connection_of(flat);
    std::vector<double> x = flat.center();

    RiemannUnknowns u = zero_riemann_unknowns(2);
    u.gbar.at({0, 0}) = 1.1;
    u.gbar.at({1, 1}) = 0.9;
    u.gbar.at({0, 1}) = u.gbar.at({1, 0}) = 0.05;
    u.P = project_sym_pair(oracle::random_tensor(2, valence_from("ull"), 0.2), 1, 2);
    u.a = project_sym_pair(oracle::random_tensor(2, valence_from("ll"), 0.2), 0, 1);
    u.aD = project_sym_pair(oracle::random_tensor(2, valence_from("lll"), 0.2), 0, 1);
    u.K = Tensor::scalar(0.7);
    u.Rbar = project_antisym_pair(oracle::random_tensor(2, valence_from("ulll"), 0.2), 2, 3);
    u.RbarD = project_antisym_pair(oracle::random_tensor(2, valence_from("ullll"), 0.2), 2, 3);

    RiemannEval ev0 = riemann_evaluate(u, conn, x);
    SystemJets s2 = riemann_jets(u, conn, x, 2);
    TJet om = omega_jet(s2, 1);
    CHECK(max_abs(sub(om.lv[0], ev0.omega)) < 1e-12);

    const double h = 1e-5;
    const int dir = 0;
    auto shifted = [&](double sign) {
        RiemannUnknowns v = u;
        auto step = [&](Tensor& t, const Tensor& dt) {
            if (t.rank() == 0) {
                t = Tensor::scalar(t.value() + sign * h * dt.at({dir}));
                return;
            }
            std::vector<int> idx(static_cast<std::size_t>(t.rank()), 0);
            do {
                std::vector<int> didx(idx.begin(), idx.end());
                didx.push_back(dir);
                t.at(idx) += sign * h * dt.at(didx);
            } while (agm::detail::odometer(idx, t.dim()));
        };
        step(v.gbar, ev0.dgbar);
        step(v.P, ev0.dP);
        step(v.a, ev0.da);
        step(v.aD, ev0.daD);
        step(v.K, ev0.dK);
        step(v.Rbar, ev0.dRbar);
        step(v.RbarD, ev0.dRbarD);
        std::vector<double> xx = x;
        xx[dir] += sign * h;
        return riemann_evaluate(v, conn, xx).omega;
    };
    Tensor fd = scale(sub(shifted(1.0), shifted(-1.0)), 1.0 / (2.0 * h));
    const Tensor& lv1 = om.lv[1];
    double worst = 0.0;
    std::vector<int> idx(6, 0);
    do {
        std::vector<int> full(idx.begin(), idx.end());
        full.push_back(dir);
        worst = std::max(worst, std::abs(fd.at(idx) - lv1.at(full)));
    } while (agm::detail::odometer(std::span<int>(idx.data(), 6), 2));
    CHECK(worst < 5e-7);
}

TEST_CASE("integrability residual: trivial, deterministic, linear in a curvature perturbation") {
    ChartSpec flat = load_chart("flat2.json");
    Connection conn = connection_of(flat);
    auto x = flat.center();

    RiemannUnknowns u0 = zero_riemann_unknowns(2);
    CHECK(max_abs(integrability_residual(u0, conn, x)) == 0.0);
    GrsUnknowns g0 = zero_grs_unknowns(2);
    CHECK(max_abs(integrability_residual(g0, conn, x)) == 0.0);

    // determinism on a random admissible state
    GrsUnknowns g = zero_grs_unknowns(2);
    g.P = project_sym_pair(oracle::random_tensor(2, valence_from("ull"), 0.3), 1, 2);
    g.a = project_sym_pair(oracle::random_tensor(2, valence_from("ll"), 0.3), 0, 1);
    g.Rbar = project_antisym_pair(oracle::random_tensor(2, valence_from("ulll"), 0.3), 2, 3);
    g.RbarD = project_antisym_pair(oracle::random_tensor(2, valence_from("ullll"), 0.3), 2, 3);
    Tensor r1 = integrability_residual(g, conn, x);
    Tensor r2 = integrability_residual(g, conn, x);
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1.data()[i] == r2.data()[i]);

    // perturbing one Rbar slot moves the residual linearly
    Tensor base = integrability_residual(g, conn, x);
    std::vector<double> ratios;
    for (double eps : {1e-4, 1e-3, 1e-2}) {
        GrsUnknowns gp = g;
        gp.Rbar.at({0, 0, 0, 1}) += eps;
        gp.Rbar.at({0, 0, 1, 0}) -= eps; // keep the admissible antisymmetry
        Tensor diff = sub(integrability_residual(gp, conn, x), base);
        ratios.push_back(max_abs(diff) / eps);
    }
    CHECK(ratios[0] == doctest::Approx(ratios[1]).epsilon(1e-6));
    CHECK(ratios[1] == doctest::Approx(ratios[2]).epsilon(1e-6));
    CHECK(ratios[0] > 1e-12);
}

TEST_CASE("closure evaluations are deterministic") {
    ChartSpec poly = load_chart("poly2.json");
    Connection conn = connection_of(poly);
    auto x = oracle::random_point(poly.domain);
    RiemannUnknowns u = zero_riemann_unknowns(2);
    u.P = project_sym_pair(oracle::random_tensor(2, valence_from("ull"), 0.1), 1, 2);
    u.Rbar = project_antisym_pair(oracle::random_tensor(2, valence_from("ulll"), 0.1), 2, 3);
    RiemannDerivs d1 = riemannian_closure_rhs(u, conn, x);
    RiemannDerivs d2 = riemannian_closure_rhs(u, conn, x);
    for (std::size_t i = 0; i < d1.dK.size(); ++i) CHECK(d1.dK.data()[i] == d2.dK.data()[i]);
    for (std::size_t i = 0; i < d1.dRbarD.size(); ++i) CHECK(d1.dRbarD.data()[i] == d2.dRbarD.data()[i]);
}

TEST_CASE("scalar-source vector against a hand-coded loop oracle") {
    // Rebuilds the scalar-derivative source with explicit loops, reusing only
    // the jet of the contracted six-slot tail from the library (validated by
    // finite differences above). Catches label or sign slips in the einsum
    // assembly of the builder.
    ChartSpec poly = load_chart("poly2.json");
    Connection conn = connection_of(poly);
    auto x = oracle::random_point(poly.domain);
    const int n = 2;

    RiemannUnknowns u = zero_riemann_unknowns(n);
    u.gbar.at({0, 0}) = 1.3;
    u.gbar.at({1, 1}) = 0.8;
    u.gbar.at({0, 1}) = u.gbar.at({1, 0}) = -0.1;
    u.P = project_sym_pair(oracle::random_tensor(n, valence_from("ull"), 0.3), 1, 2);
    u.a = project_sym_pair(oracle::random_tensor(n, valence_from("ll"), 0.3), 0, 1);
    u.aD = project_sym_pair(oracle::random_tensor(n, valence_from("lll"), 0.3), 0, 1);
    u.K = Tensor::scalar(0.9);
    u.Rbar = project_antisym_pair(oracle::random_tensor(n, valence_from("ulll"), 0.3), 2, 3);
    u.RbarD = project_antisym_pair(oracle::random_tensor(n, valence_from("ullll"), 0.3), 2, 3);

    RiemannEval ev = riemann_evaluate(u, conn, x);

    // reproduce the ingredients the builder consumes
    SystemJets s2 = riemann_jets(u, conn, x, 2);
    MetricJets m2;
    {
        TJet P1 = jet_truncate(s2.P, 1);
        TJet g1({std::vector<Tensor>{u.gbar, ev.dgbar}});
        Tensor ddg = add(jet_einsum("ijk", {{&P1, "aik"}, {&g1, "aj"}}, 1).lv[1],
                         jet_einsum("ijk", {{&P1, "ajk"}, {&g1, "ai"}}, 1).lv[1]);
        m2.g = TJet({std::vector<Tensor>{u.gbar, ev.dgbar, ddg}});
    }
    m2.gi = inverse_metric_jet(m2.g, 1);
    AuxJets chain1 = aux_chain(s2, 1);
    TJet c61 = c6_jet(s2, m2, chain1.omega, 1);
    TJet b1 = b_jet(s2, m2, c61, chain1.omega, 1);
    TJet c41 = c4_jet(s2, m2, c61, b1, 1);
    TJet a41 = a4_jet(s2, m2, b1, c41, 1);
    TJet a61 = a6_jet(m2, c61, a41, 1);
    TJet w1 = a6_contracted_jet(m2, a61, 1);

    Tensor got = a_rho_vector(s2, m2, w1, u.K.value());

    // hand-coded oracle
    const Tensor& aD = u.aD;
    const Tensor& g = u.gbar;
    const Tensor& gd = ev.dgbar;
    Tensor gi = invert(g);
    Tensor Rc = curvature(conn, x);
    const Tensor& wd = w1.lv[1];
    const double kc = u.K.value() / (n * (n + 3.0));
    Tensor expect(n, "l");
    for (int r = 0; r < n; ++r) {
        double total = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int m = 0; m < n; ++m) {
                        double term = 0.0;
                        for (int al = 0; al < n; ++al) {
                            term += aD.at({al, j, k}) * Rc.at({al, i, m, r});
                            term += aD.at({al, i, k}) * Rc.at({al, j, m, r});
                            term += aD.at({i, j, al}) * Rc.at({al, k, m, r});
                        }
                        double gg = 0.0;
                        gg += gd.at({i, j, r}) * g.at({m, k}) - gd.at({i, j, m}) * g.at({r, k});
                        gg += g.at({i, j}) * (gd.at({k, m, r}) - gd.at({k, r, m}));
                        gg += 3.0 * (gd.at({k, j, r}) * g.at({m, i}) - gd.at({k, j, m}) * g.at({r, i}));
                        gg += 3.0 * g.at({k, j}) * (gd.at({i, m, r}) - gd.at({i, r, m}));
                        gg += 3.0 * (gd.at({k, i, r}) * g.at({m, j}) - gd.at({k, i, m}) * g.at({r, j}));
                        gg += 3.0 * g.at({k, i}) * (gd.at({j, m, r}) - gd.at({j, r, m}));
                        term -= kc * gg;
                        term += wd.at({i, j, k, m, r}) - wd.at({i, j, k, r, m});
                        total += gi.at({i, j}) * gi.at({k, m}) * term;
                    }
        expect.at({r}) = total;
    }
    CHECK(max_abs(sub(got, expect)) < 1e-10);
    CHECK(max_abs(expect) > 1e-8);
    // and the final scalar derivative applies the stated coefficient
    const double coef = n * (n + 3.0) / (n * n + 5.0 * n - 6.0);
    CHECK(max_abs(sub(ev.dK, scale(ev.aRho, coef))) == 0.0);
}

TEST_CASE("solved derivative of the (1,4) unknown against a hand-coded oracle") {
    // Explicit loops over the delta/second-derivative block plus the
    // conversion defect from the (tested) builder, including the reordering
    // into canonical unknown slots and the factor 1/2.
    const int n = 2;
    ChartSpec flat = load_chart("flat2.json");
    Connection conn = connection_of(flat);
    auto x = flat.center();

    GrsUnknowns u = zero_grs_unknowns(n);
    u.P = project_sym_pair(oracle::random_tensor(n, valence_from("ull"), 0.4), 1, 2);
    u.a = project_sym_pair(oracle::random_tensor(n, valence_from("ll"), 0.4), 0, 1);
    u.Rbar = project_antisym_pair(oracle::random_tensor(n, valence_from("ulll"), 0.4), 2, 3);
    u.RbarD = project_antisym_pair(oracle::random_tensor(n, valence_from("ullll"), 0.4), 2, 3);

    GrsEval ev = grs_evaluate(u, conn, x);

    // rebuild the substituted second derivative of a
    SystemJets s1;
    s1.n = n;
    s1.delta = kronecker(n);
    s1.Rc = curvature_cjet(conn, x, 2);
    s1.P = TJet({std::vector<Tensor>{u.P, ev.dP}});
    s1.a = TJet({std::vector<Tensor>{u.a, ev.da}});
    s1.Rbar = TJet({std::vector<Tensor>{u.Rbar, u.RbarD}});
    TJet theta1 = theta_jet(s1, 1);
    const Tensor& dth = theta1.lv[1];
    Tensor add2(n, "llll"); // a_{pq},{r s}
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int sidx = 0; sidx < n; ++sidx) {
                    double t1 = 0.0, t2 = 0.0;
                    for (int al = 0; al < n; ++al) {
                        t1 += dth.at({al, p, q, al, r, sidx});
                        t2 += dth.at({al, p, r, al, q, sidx}) + dth.at({al, q, r, al, p, sidx});
                    }
                    add2.at({p, q, r, sidx}) =
                        -(t1 + t2 / n) * (static_cast<double>(n) / (n * n + n - 2.0));
                }

    const Tensor& S = ev.bigS;
    auto dlt = [&](int a, int b) { return a == b ? 1.0 : 0.0; };
    // canonical unknown slots of the result: (h, j, m, l, i | k)
    Tensor expect6(n, "ulllll");
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l)
                        for (int m = 0; m < n; ++m) {
                            double v = 0.0;
                            v += dlt(h, i) * add2.at({j, l, k, m}) + dlt(h, j) * add2.at({l, i, k, m}) +
                                 dlt(h, l) * add2.at({i, j, k, m});
                            v -= dlt(h, i) * add2.at({j, m, k, l}) + dlt(h, j) * add2.at({m, i, k, l}) +
                                 dlt(h, m) * add2.at({i, j, k, l});
                            v -= dlt(h, k) * add2.at({j, m, i, l}) + dlt(h, j) * add2.at({m, k, i, l}) +
                                 dlt(h, m) * add2.at({k, j, i, l});
                            v += dlt(h, i) * add2.at({k, m, j, l}) + dlt(h, k) * add2.at({m, i, j, l}) +
                                 dlt(h, m) * add2.at({i, k, j, l});
                            v -= dlt(h, i) * add2.at({k, l, j, m}) + dlt(h, k) * add2.at({l, i, j, m}) +
                                 dlt(h, l) * add2.at({i, k, j, m});
                            v += dlt(h, k) * add2.at({j, l, i, m}) + dlt(h, j) * add2.at({l, k, i, m}) +
                                 dlt(h, l) * add2.at({k, j, i, m});
                            v += S.at({h, i, j, k, l, m});
                            expect6.at({h, j, m, l, i, k}) = 0.5 * v;
                        }
    CHECK(max_abs(sub(ev.dRbarD, expect6)) < 1e-12);
    CHECK(max_abs(expect6) > 1e-6);
}

TEST_CASE("closures run at dimension three") {
    ChartSpec poly3 = load_chart("poly3.json");
    Connection conn = connection_of(poly3);
    auto x = oracle::random_point(poly3.domain);

    RiemannUnknowns u = zero_riemann_unknowns(3);
    u.P = project_sym_pair(oracle::random_tensor(3, valence_from("ull"), 0.1), 1, 2);
    u.a = project_sym_pair(oracle::random_tensor(3, valence_from("ll"), 0.1), 0, 1);
    u.aD = project_sym_pair(oracle::random_tensor(3, valence_from("lll"), 0.1), 0, 1);
    u.K = Tensor::scalar(0.4);
    u.Rbar = project_antisym_pair(oracle::random_tensor(3, valence_from("ulll"), 0.1), 2, 3);
    u.RbarD = project_antisym_pair(oracle::random_tensor(3, valence_from("ullll"), 0.1), 2, 3);
    RiemannDerivs d = riemannian_closure_rhs(u, conn, x);
    for (const Tensor* t : {&d.dgbar, &d.dP, &d.da, &d.daD, &d.dK, &d.dRbar, &d.dRbarD})
        CHECK(all_finite(*t));

    GrsUnknowns g = zero_grs_unknowns(3);
    g.P = u.P;
    g.a = u.a;
    g.Rbar = project_cyclic_free(u.Rbar, {1, 2, 3});
    g.RbarD = project_cyclic_free(u.RbarD, {1, 2, 3});
    GrsDerivs gd = grs_closure_rhs(g, conn, x);
    for (const Tensor* t : {&gd.dP, &gd.da, &gd.dRbar, &gd.dRbarD}) CHECK(all_finite(*t));
}
