#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "agm/ags_core.hpp"
#include "agm/ags_grs.hpp"
#include "agm/ags_riemann.hpp"
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

// geodesic-type deformation P^h_ij = d^h_i psi_j + d^h_j psi_i
static Tensor geodesic_type_p(int n, const std::vector<double>& psi) {
    Tensor p(n, "ull");
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                p.at({h, i, j}) = (h == i ? psi[static_cast<std::size_t>(j)] : 0.0) +
                                  (h == j ? psi[static_cast<std::size_t>(i)] : 0.0);
    return p;
}

static TensorField constant_field(const Tensor& t) {
    TensorField f(t.dim(), t.valence());
    for (std::size_t i = 0; i < t.size(); ++i) f.entries[i] = Expr::constant(t.data()[i]);
    return f;
}

// solves the defining equation for a by least squares: the residual is linear
// in the symmetric unknown a
static Tensor solve_a_least_squares(const Pi1State& base, const Connection& conn, const TensorField& pf) {
    const int n = base.P.dim();
    std::vector<std::pair<int, int>> basis;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) basis.emplace_back(i, j);
    Pi1State zeroA = base;
    zeroA.a = Tensor(n, "ll");
    Tensor r0 = pi1_residual(zeroA, conn, pf);
    std::vector<std::vector<double>> A(r0.size(), std::vector<double>(basis.size(), 0.0));
    std::vector<double> b(r0.size());
    for (std::size_t r = 0; r < r0.size(); ++r) b[r] = -r0.data()[r];
    for (std::size_t c = 0; c < basis.size(); ++c) {
        Pi1State probe = zeroA;
        probe.a = Tensor(n, "ll");
        probe.a.at({basis[c].first, basis[c].second}) = 1.0;
        probe.a.at({basis[c].second, basis[c].first}) = 1.0;
        Tensor rc = pi1_residual(probe, conn, pf);
        for (std::size_t r = 0; r < r0.size(); ++r) A[r][c] = rc.data()[r] - r0.data()[r];
    }
    auto sol = oracle::least_squares(A, b);
    Tensor a(n, "ll");
    for (std::size_t c = 0; c < basis.size(); ++c) {
        a.at({basis[c].first, basis[c].second}) = sol[c];
        a.at({basis[c].second, basis[c].first}) = sol[c];
    }
    return a;
}

TEST_CASE("deformation tensor") {
    ChartSpec flat = load_chart("flat2.json");
    ChartSpec sph = load_chart("sphere2.json");

    Connection c1 = connection_of(sph);
    CHECK(max_abs(deformation(c1, c1, sph.center())) == 0.0);

    // flat source, sphere target on the sphere's chart box
    ChartSpec flatOnSphereBox = sph;
    flatOnSphereBox.gamma = TensorField(2, "ull");
    Connection c0 = connection_of(flatOnSphereBox);
    std::vector<double> x = {0.9, 1.1};
    Tensor p = deformation(c1, c0, x);
    CHECK(max_abs(sub(p, sph.gamma.eval(x))) == 0.0);

    // chart mismatch
    Connection cf = connection_of(flat);
    CHECK_THROWS_AS(deformation(c1, cf, x), std::invalid_argument);

    // geodesic-type deformation, constant covector (1, 0)
    Tensor pg = geodesic_type_p(2, {1.0, 0.0});
    CHECK(pg.at({0, 0, 0}) == 2.0);
    CHECK(pg.at({0, 0, 1}) == 0.0);
    CHECK(pg.at({1, 0, 1}) == 1.0);
}

TEST_CASE("pi1 residual: zero state and geodesic-type deformation") {
    ChartSpec flat3 = load_chart("flat3.json");
    Connection conn = connection_of(flat3);

    Pi1State zero;
    zero.x = flat3.center();
    zero.P = Tensor(3, "ull");
    zero.a = Tensor(3, "ll");
    TensorField pfZero = constant_field(zero.P);
    CHECK(max_abs(pi1_residual(zero, conn, pfZero)) == 0.0);

    std::vector<double> psi = {1.0, 0.5, -0.25};
    Tensor p = geodesic_type_p(3, psi);
    TensorField pf = constant_field(p);
    Pi1State st;
    st.x = flat3.center();
    st.P = p;
    st.a = Tensor(3, "ll");
    st.a = solve_a_least_squares(st, conn, pf);
    CHECK(max_abs(pi1_residual(st, conn, pf)) < 1e-10);

    // the solved a must be 4 psi_i psi_j
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(st.a.at({i, j}) ==
                  doctest::Approx(4.0 * psi[static_cast<std::size_t>(i)] * psi[static_cast<std::size_t>(j)])
                      .epsilon(1e-9));

    // with a = 0, the residual equals the cyclic quadratic term
    Pi1State noA = st;
    noA.a = Tensor(3, "ll");
    Tensor expect = cyclic_sym(einsum("hijk", {{&p, "hai"}, {&p, "ajk"}}), {1, 2, 3});
    CHECK(max_abs(sub(pi1_residual(noA, conn, pf), expect)) < 1e-14);
}

TEST_CASE("pi1 residual vanishes for the zero state on every corpus connection") {
    for (const char* name : {"flat2.json", "sphere2.json", "conformal2.json", "constcoef2.json",
                             "poly2.json", "poly3.json", "flat3.json"}) {
        ChartSpec c = load_chart(name);
        Connection conn = connection_of(c);
        Pi1State zero;
        zero.x = c.center();
        zero.P = Tensor(c.dim, "ull");
        zero.a = Tensor(c.dim, "ll");
        TensorField pf = constant_field(zero.P);
        CHECK(max_abs(pi1_residual(zero, conn, pf)) == 0.0);
    }
}

TEST_CASE("fundamental system right side") {
    const int n = 2;
    Tensor zeroP(n, "ull"), zeroA(n, "ll"), zeroR(n, "ulll");
    CHECK(max_abs(fundamental_rhs(zeroP, zeroA, zeroR, zeroR)) == 0.0);

    Tensor p = geodesic_type_p(2, {1.0, 0.0});
    Tensor dP = fundamental_rhs(p, zeroA, zeroR, zeroR);
    CHECK(dP.at({0, 0, 0, 0}) == doctest::Approx(-4.0));
    Tensor quad = einsum("hijk", {{&p, "hka"}, {&p, "aij"}});
    CHECK(max_abs(add(dP, quad)) == 0.0);

    // output is symmetric in (i,j) for admissible inputs
    Tensor ps = oracle::random_tensor(2, valence_from("ull"));
    ps = project_sym_pair(ps, 1, 2);
    Tensor as = project_sym_pair(oracle::random_tensor(2, valence_from("ll")), 0, 1);
    Tensor rb = project_antisym_pair(oracle::random_tensor(2, valence_from("ulll")), 2, 3);
    Tensor rc = project_antisym_pair(oracle::random_tensor(2, valence_from("ulll")), 2, 3);
    Tensor out = fundamental_rhs(ps, as, rb, rc);
    std::array<int, 4> swapIJ{0, 2, 1, 3};
    CHECK(max_abs(sub(out, permute(out, swapIJ))) < 1e-13);
}

TEST_CASE("parameter bounds reproduce the closed-form counts") {
    CHECK(parameter_bound(2, TargetKind::Riemannian) == 25);
    CHECK(parameter_bound(3, TargetKind::Riemannian) == 85);
    CHECK(parameter_bound(2, TargetKind::GeneralizedRicciSymmetric) == 13);
    CHECK(parameter_bound(3, TargetKind::GeneralizedRicciSymmetric) == 72);
    for (int n = 2; n < 8; ++n) {
        CHECK(parameter_bound(n + 1, TargetKind::Riemannian) > parameter_bound(n, TargetKind::Riemannian));
        CHECK(parameter_bound(n + 1, TargetKind::GeneralizedRicciSymmetric) >
              parameter_bound(n, TargetKind::GeneralizedRicciSymmetric));
    }
    CHECK_THROWS_AS(parameter_bound(1, TargetKind::Riemannian), std::invalid_argument);
}

TEST_CASE("algebraic constraint residuals") {
    RiemannUnknowns u = zero_riemann_unknowns(2);
    ConstraintReport r = algebraic_constraint_residual(u);
    CHECK(r.max_violation() == 0.0);
    REQUIRE(r.det_gbar.has_value());
    CHECK(*r.det_gbar == doctest::Approx(1.0));

    // perturbing one off-diagonal P entry shows up with the perturbation size
    u.P.at({0, 0, 1}) += 1e-3;
    r = algebraic_constraint_residual(u);
    CHECK(r.residuals.at("P_alternating_part") == doctest::Approx(1e-3));

    // explicit antisymmetrization drives the curvature-pair residual to zero
    GrsUnknowns g = zero_grs_unknowns(2);
    g.Rbar = project_antisym_pair(oracle::random_tensor(2, valence_from("ulll")), 2, 3);
    ConstraintReport rg = algebraic_constraint_residual(g);
    CHECK(rg.residuals.at("Rbar_symmetric_pair") < 1e-15);
    CHECK(rg.residuals.at("P_alternating_part") == 0.0);
}

TEST_CASE("constraint projection is idempotent and lands on the constraint set") {
    GrsUnknowns g = zero_grs_unknowns(3);
    g.P = oracle::random_tensor(3, valence_from("ull"));
    g.a = oracle::random_tensor(3, valence_from("ll"));
    g.Rbar = oracle::random_tensor(3, valence_from("ulll"));
    g.RbarD = oracle::random_tensor(3, valence_from("ullll"));
    project_constraints(g);
    ConstraintReport r = algebraic_constraint_residual(g);
    CHECK(r.max_violation() < 1e-14);
    GrsUnknowns g2 = g;
    project_constraints(g2);
    CHECK(max_abs(sub(g2.Rbar, g.Rbar)) < 1e-15);
    CHECK(max_abs(sub(g2.RbarD, g.RbarD)) < 1e-15);
}
