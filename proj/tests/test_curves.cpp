#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "agm/chart.hpp"
#include "agm/curves.hpp"

#include "oracles.hpp"

using namespace agm;

static ChartSpec load_chart(const std::string& name) {
    std::ifstream in(std::string(AGM_CHARTS_DIR) + "/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_chart_spec(ss.str());
}

static const double kPi = 3.14159265358979323846;

TEST_CASE("flat geodesics are straight lines") {
    ChartSpec flat = load_chart("flat2.json");
    Connection conn = connection_of(flat);
    CurveSample c = integrate_geodesic(conn, std::vector<double>{0.0, 0.0}, std::vector<double>{0.9, 0.2},
                                       1.0, 100);
    CHECK(std::abs(c.x.back()[0] - 0.9) < 1e-12);
    CHECK(std::abs(c.x.back()[1] - 0.2) < 1e-12);
    CHECK(std::abs(c.xi.back()[0] - 0.9) < 1e-15);

    CHECK_THROWS_AS(
        integrate_geodesic(conn, std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}, 1.0, 10),
        std::invalid_argument);
    CHECK_THROWS_AS(
        integrate_geodesic(conn, std::vector<double>{0.0, 0.0}, std::vector<double>{5.0, 0.0}, 1.0, 10),
        CurveError);
}

TEST_CASE("the equator is a sphere geodesic") {
    ChartSpec sph = load_chart("sphere2.json");
    Connection conn = connection_of(sph);
    CurveSample c = integrate_geodesic(conn, std::vector<double>{kPi / 2.0, 0.5},
                                       std::vector<double>{0.0, 1.0}, 1.0, 200);
    for (const auto& x : c.x) CHECK(std::abs(x[0] - kPi / 2.0) < 1e-8);
}

TEST_CASE("affine reparametrization leaves the endpoint unchanged") {
    ChartSpec sph = load_chart("sphere2.json");
    Connection conn = connection_of(sph);
    std::vector<double> x0 = {1.2, 0.7}, v0 = {0.25, 0.4};
    CurveSample a = integrate_geodesic(conn, x0, v0, 1.0, 1024);
    std::vector<double> v2 = {2.0 * v0[0], 2.0 * v0[1]};
    CurveSample b = integrate_geodesic(conn, x0, v2, 0.5, 1024);
    CHECK(std::abs(a.x.back()[0] - b.x.back()[0]) < 1e-10);
    CHECK(std::abs(a.x.back()[1] - b.x.back()[1]) < 1e-10);

    ChartSpec flat = load_chart("flat2.json");
    Connection cf = connection_of(flat);
    CurveSample fa = integrate_geodesic(cf, std::vector<double>{0.0, 0.0}, std::vector<double>{0.3, 0.1},
                                        1.0, 64);
    CurveSample fb = integrate_geodesic(cf, std::vector<double>{0.0, 0.0}, std::vector<double>{0.6, 0.2},
                                        0.5, 64);
    CHECK(std::abs(fa.x.back()[0] - fb.x.back()[0]) < 1e-14);
}

TEST_CASE("xi chain on straight and circular curves") {
    ChartSpec flat = load_chart("flat2.json");
    Connection conn = connection_of(flat);

    // straight line under the flat connection: both derivatives vanish exactly
    CurveSample line = integrate_geodesic(conn, std::vector<double>{-0.5, -0.1},
                                          std::vector<double>{0.8, 0.3}, 1.0, 50);
    XiChain ch = xi_chain(line, conn);
    for (std::size_t s = 0; s < line.size(); ++s) {
        for (double v : ch.xi1[s]) CHECK(std::abs(v) < 1e-12);
        for (double v : ch.xi2[s]) CHECK(std::abs(v) < 1e-12);
    }

    // circle (cos t, sin t) under the flat connection: xi1 = -(cos t, sin t)
    auto circle = [&](int samples) {
        CurveSample c;
        double dt = 2.0 * kPi / samples;
        for (int s = 0; s <= samples; ++s) {
            double t = s * dt;
            c.t.push_back(t);
            c.x.push_back({0.5 * std::cos(t), 0.5 * std::sin(t)});
            c.xi.push_back({-0.5 * std::sin(t), 0.5 * std::cos(t)});
        }
        return c;
    };
    CurveSample circ = circle(400);
    XiChain cc = xi_chain(circ, conn);
    std::size_t mid = circ.size() / 2;
    double tmid = circ.t[mid];
    CHECK(cc.xi1[mid][0] == doctest::Approx(-0.5 * std::cos(tmid)).epsilon(1e-3));
    CHECK(cc.xi1[mid][1] == doctest::Approx(-0.5 * std::sin(tmid)).epsilon(1e-3));
    // spot value at t = 0 for the unit-speed convention: xi1 = -x
    CurveSample circ0 = circle(1000);
    XiChain cc0 = xi_chain(circ0, conn);
    CHECK(cc0.xi1[500][0] == doctest::Approx(0.5 * 1.0).epsilon(2e-3)); // t = pi: -cos(pi) = 1 times 0.5

    // halving the spacing reduces the xi1 error about 4x (second order)
    auto err = [&](int samples) {
        CurveSample c = circle(samples);
        XiChain x = xi_chain(c, conn);
        double worst = 0.0;
        for (std::size_t s = 2; s + 2 < c.size(); ++s) {
            worst = std::max(worst, std::abs(x.xi1[s][0] + 0.5 * std::cos(c.t[s])));
            worst = std::max(worst, std::abs(x.xi1[s][1] + 0.5 * std::sin(c.t[s])));
        }
        return worst;
    };
    double e1 = err(200), e2 = err(400);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("geodesics of the evaluating connection have vanishing xi1") {
    ChartSpec sph = load_chart("sphere2.json");
    Connection conn = connection_of(sph);
    CurveSample g = integrate_geodesic(conn, std::vector<double>{1.0, 1.0},
                                       std::vector<double>{0.3, 0.25}, 1.0, 400);
    XiChain ch = xi_chain(g, conn);
    for (std::size_t s = 2; s + 2 < g.size(); ++s)
        for (double v : ch.xi1[s]) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("span test basics") {
    std::vector<double> xi = {1, 0, 0}, xi1 = {0, 1, 0};
    SpanTestResult inSpan = span_test(xi, xi1, std::vector<double>{2, 3, 0}, 1e-6);
    CHECK(inSpan.pass);
    CHECK(inSpan.residual == doctest::Approx(0.0));

    SpanTestResult ortho = span_test(xi, xi1, std::vector<double>{0, 0, 1}, 0.5);
    CHECK(!ortho.pass);
    CHECK(ortho.residual == doctest::Approx(1.0));

    // n = 2: any xi2 lies in the span of two independent vectors
    SpanTestResult planar =
        span_test(std::vector<double>{1, 0}, std::vector<double>{0.3, 1}, std::vector<double>{-4, 7}, 1e-9);
    CHECK(planar.pass);
    CHECK(planar.residual < 1e-12);

    // degenerate pair falls back to span(xi)
    SpanTestResult degen = span_test(std::vector<double>{1, 0, 0}, std::vector<double>{2, 0, 0},
                                     std::vector<double>{0, 1, 0}, 0.5);
    CHECK(degen.residual == doctest::Approx(1.0));
    SpanTestResult degenPass = span_test(std::vector<double>{1, 0, 0}, std::vector<double>{2, 0, 0},
                                         std::vector<double>{3, 0, 0}, 1e-9);
    CHECK(degenPass.pass);

    CHECK_THROWS_AS(span_test(std::vector<double>{0, 0, 0}, xi1, std::vector<double>{1, 0, 0}, 1e-6),
                    std::invalid_argument);

    // rescaling xi and xi1 leaves the residual unchanged
    std::vector<double> xi2 = {0.3, -0.2, 0.9};
    double r1 = span_test(xi, xi1, xi2, 1e-6).residual;
    std::vector<double> xiS = {7, 0, 0}, xi1S = {0, -0.03, 0};
    double r2 = span_test(xiS, xi1S, xi2, 1e-6).residual;
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-10));
}

TEST_CASE("identity mapping passes for every corpus connection") {
    for (const char* name : {"flat3.json", "poly3.json", "sphere2.json"}) {
        ChartSpec c = load_chart(name);
        Connection conn = connection_of(c);
        std::vector<std::pair<std::vector<double>, std::vector<double>>> seeds;
        for (int s = 0; s < 4; ++s) {
            std::vector<double> x0, v0;
            for (int k = 0; k < c.dim; ++k) {
                double lo = c.domain[k][0], hi = c.domain[k][1];
                double mid = 0.5 * (lo + hi);
                x0.push_back(mid + 0.1 * (hi - lo) * (oracle::uniform(-1, 1)));
                v0.push_back(oracle::uniform(-0.5, 0.5));
            }
            if (std::abs(v0[0]) < 0.05) v0[0] = 0.2;
            seeds.emplace_back(x0, v0);
        }
        MappingReport rep = verify_mapping(conn, conn, seeds, 1e-6, 0.4, 200);
        CHECK(rep.pass);
    }
}

TEST_CASE("verify_mapping: identity, geodesic-type deformation, generic deformation") {
    ChartSpec flat3 = load_chart("geodesic3.json");
    Connection conn = connection_of(flat3);

    std::vector<std::pair<std::vector<double>, std::vector<double>>> seeds;
    for (int s = 0; s < 10; ++s) {
        std::vector<double> x0 = {oracle::uniform(-0.3, 0.3), oracle::uniform(-0.3, 0.3),
                                  oracle::uniform(-0.3, 0.3)};
        std::vector<double> v0 = {oracle::uniform(-1, 1), oracle::uniform(-1, 1), oracle::uniform(-1, 1)};
        seeds.emplace_back(x0, v0);
    }

    // identity mapping
    MappingReport idRep = verify_mapping(conn, conn, seeds, 1e-6, 0.5, 200);
    CHECK(idRep.pass);
    CHECK(idRep.maxResidual < 1e-6);

    // geodesic-type deformation: images are pregeodesics, still almost geodesic
    Connection bar = offset_connection(conn, flat3.fields.at("P"));
    MappingReport geoRep = verify_mapping(conn, bar, seeds, 1e-6, 0.5, 200);
    CHECK(geoRep.pass);
    CHECK(geoRep.maxResidual < 1e-6);

    // generic symmetric deformation of unit size: not almost geodesic
    TensorField generic(3, "ull");
    oracle::rng(777);
    for (int h = 0; h < 3; ++h)
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                double v = oracle::uniform(-1.0, 1.0);
                generic.at({h, i, j}) = Expr::constant(v);
                generic.at({h, j, i}) = Expr::constant(v);
            }
    Connection barGen = offset_connection(conn, generic);
    MappingReport genRep = verify_mapping(conn, barGen, seeds, 1e-6, 0.5, 200);
    CHECK(!genRep.pass);
    CHECK(genRep.maxResidual > 1e-2);
}
