// Command-line front end: chart ingestion, curvature and mapping checks,
// Cauchy-system integration, and the parameter-count bounds.

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "agm/ags_core.hpp"
#include "agm/ags_grs.hpp"
#include "agm/ags_riemann.hpp"
#include "agm/cauchy.hpp"
#include "agm/chart.hpp"
#include "agm/curves.hpp"
#include "agm/geometry.hpp"
#include "agm/report.hpp"

using namespace agm;
using nlohmann::json;

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ChartSpec load_chart(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw InputError("cannot open chart file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_chart_spec(ss.str());
    } catch (const ChartError& e) {
        throw InputError(std::string(e.what()));
    }
}

std::vector<std::vector<double>> sample_points(const ChartSpec& c, int count, unsigned seed) {
    std::mt19937 gen(seed);
    std::vector<std::vector<double>> pts;
    for (int p = 0; p < count; ++p) {
        std::vector<double> x(static_cast<std::size_t>(c.dim));
        for (int k = 0; k < c.dim; ++k) {
            double lo = c.domain[k][0], hi = c.domain[k][1];
            double w = hi - lo;
            std::uniform_real_distribution<double> d(lo + 0.1 * w, hi - 0.1 * w);
            x[static_cast<std::size_t>(k)] = d(gen);
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

std::vector<std::vector<double>> parse_waypoints(const std::string& s, int dim) {
    std::vector<std::vector<double>> pts;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ';')) {
        std::vector<double> x;
        std::stringstream ps(part);
        std::string num;
        while (std::getline(ps, num, ',')) {
            try {
                x.push_back(std::stod(num));
            } catch (const std::exception&) {
                throw InputError("malformed waypoint coordinate '" + num + "'");
            }
        }
        if (static_cast<int>(x.size()) != dim)
            throw InputError("waypoint '" + part + "' has " + std::to_string(x.size()) +
                             " coordinates, expected " + std::to_string(dim));
        pts.push_back(std::move(x));
    }
    if (pts.size() < 2) throw InputError("path needs at least two waypoints");
    return pts;
}

Tensor state_component(const json& j, const std::string& key, int n, const Valence& valence,
                       std::span<const double> x) {
    if (!j.contains(key)) return valence.empty() ? Tensor::scalar(0.0) : Tensor(n, valence);
    try {
        if (valence.empty()) {
            Expr e = parse_expr(j.at(key).get<std::string>(), {}, n);
            return Tensor::scalar(e.eval(x));
        }
        TensorField f = parse_field_entries(j.at(key), n, valence, {}, "state component '" + key + "'");
        return f.eval(x);
    } catch (const std::exception& e) {
        throw InputError(std::string("state component '") + key + "': " + e.what());
    }
}

PackedState load_state(const std::string& path, TargetKind target, int n, std::span<const double> x) {
    std::ifstream in(path);
    if (!in.good()) throw InputError("cannot open state file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("state file: ") + e.what());
    }
    if (target == TargetKind::Riemannian) {
        RiemannUnknowns u;
        u.gbar = state_component(j, "gbar", n, valence_from("ll"), x);
        u.P = state_component(j, "P", n, valence_from("ull"), x);
        u.a = state_component(j, "a", n, valence_from("ll"), x);
        u.aD = state_component(j, "aD", n, valence_from("lll"), x);
        u.K = state_component(j, "K", n, Valence{}, x);
        u.Rbar = state_component(j, "Rbar", n, valence_from("ulll"), x);
        u.RbarD = state_component(j, "RbarD", n, valence_from("ullll"), x);
        return pack(u);
    }
    GrsUnknowns u;
    u.P = state_component(j, "P", n, valence_from("ull"), x);
    u.a = state_component(j, "a", n, valence_from("ll"), x);
    u.Rbar = state_component(j, "Rbar", n, valence_from("ulll"), x);
    u.RbarD = state_component(j, "RbarD", n, valence_from("ullll"), x);
    return pack(u);
}

json points_json(const std::vector<std::vector<double>>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back(p);
    return a;
}

json environment_json(double tol, int steps, unsigned seed) {
    return {{"conventions", conventions_block()},
            {"seed", seed},
            {"steps", steps},
            {"tolerance", tol}};
}

int emit(const json& report, const std::string& outPath, bool pass) {
    std::string text = dump_report(report);
    std::cout << text;
    if (!outPath.empty()) {
        std::ofstream out(outPath, std::ios::binary);
        if (!out.good()) throw InputError("cannot open output file '" + outPath + "'");
        out << text;
    }
    return pass ? 0 : 1;
}

TargetKind parse_target(const std::string& s) {
    if (s == "riemannian") return TargetKind::Riemannian;
    if (s == "grs") return TargetKind::GeneralizedRicciSymmetric;
    throw InputError("unknown target '" + s + "' (use riemannian or grs)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Almost geodesic mapping toolkit: closed Cauchy-type systems for canonical "
                 "type-1 mappings onto Riemannian and generalized Ricci-symmetric targets"};
    app.require_subcommand(1);

    std::string chartPath, outPath, statePath, barChartPath, pFieldName = "P", aFieldName = "a";
    std::string pathSpecStr, loopSpecStr, targetStr = "riemannian";
    double tol = 0.0;
    int steps = 64, points = 10, seedCount = 10, nDim = 3;
    double tEnd = 0.5;
    unsigned seed = 1;

    auto addCommon = [&](CLI::App* cmd) {
        cmd->add_option("--chart", chartPath, "chart spec file")->required();
        cmd->add_option("--out", outPath, "write the report to this file as well");
        cmd->add_option("--tol", tol, "tolerance (per-command default otherwise)");
        cmd->add_option("--seed", seed, "random sampling seed");
        return cmd;
    };
    auto effective_tol = [&](CLI::App* cmd, double defaultTol) {
        return cmd->count("--tol") ? tol : defaultTol;
    };

    CLI::App* cCurv = app.add_subcommand("curvature", "curvature and Ricci tables with Bianchi checks");
    addCommon(cCurv);
    cCurv->add_option("--points", points, "number of sample points");

    CLI::App* cGrs = app.add_subcommand("check-grs", "generalized Ricci-symmetric test");
    addCommon(cGrs);
    cGrs->add_option("--points", points, "number of sample points");

    CLI::App* cPi1 = app.add_subcommand("check-pi1", "canonical almost geodesic condition residual");
    addCommon(cPi1);
    cPi1->add_option("--points", points, "number of sample points");
    cPi1->add_option("--pfield", pFieldName, "name of the deformation field in the chart");
    cPi1->add_option("--afield", aFieldName, "name of the symmetric form field in the chart");

    CLI::App* cInt = app.add_subcommand("integrate", "propagate a state along a path");
    addCommon(cInt);
    cInt->add_option("--target", targetStr, "riemannian or grs");
    cInt->add_option("--state", statePath, "initial state file")->required();
    cInt->add_option("--path", pathSpecStr, "waypoints 'x,y;x,y;...'")->required();
    cInt->add_option("--steps", steps, "steps per segment");

    CLI::App* cLoop = app.add_subcommand("loop-check", "loop defect of a state");
    addCommon(cLoop);
    cLoop->add_option("--target", targetStr, "riemannian or grs");
    cLoop->add_option("--state", statePath, "initial state file")->required();
    cLoop->add_option("--loop", loopSpecStr, "closed waypoint list; default axis-aligned square");
    cLoop->add_option("--steps", steps, "steps per segment");

    CLI::App* cGeo = app.add_subcommand("geodesic-image", "almost-geodesy of geodesic images");
    addCommon(cGeo);
    cGeo->add_option("--barchart", barChartPath, "chart file providing the target connection");
    cGeo->add_option("--pfield", pFieldName, "chart field to use as the deformation");
    cGeo->add_option("--seeds", seedCount, "number of random geodesic seeds");
    cGeo->add_option("--steps", steps, "integration steps per geodesic");
    cGeo->add_option("--t-end", tEnd, "affine parameter length");

    CLI::App* cBound = app.add_subcommand("bound", "parameter-count bound for the target family");
    cBound->add_option("--n", nDim, "manifold dimension")->required();
    cBound->add_option("--target", targetStr, "riemannian or grs");
    cBound->add_option("--out", outPath, "write the report to this file as well");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cBound->parsed()) {
            TargetKind target = parse_target(targetStr);
            json rep;
            rep["command"] = "bound";
            rep["n"] = nDim;
            rep["target"] = targetStr;
            rep["bound"] = parameter_bound(nDim, target);
            json warnings = json::array();
            if (nDim < 3) warnings.push_back("the underlying theory assumes dimension > 2");
            rep["warnings"] = warnings;
            rep["pass"] = true;
            return emit(rep, outPath, true);
        }

        ChartSpec chart = load_chart(chartPath);
        Connection conn = connection_of(chart);

        if (cCurv->parsed()) {
            tol = effective_tol(cCurv, 1e-10);
            auto pts = sample_points(chart, points, seed);
            json results = json::array();
            double worstBianchi = 0.0, worstAntisym = 0.0;
            for (const auto& x : pts) {
                Tensor r = curvature(conn, x);
                Tensor ric = ricci(conn, x);
                double bianchi = max_abs(cyclic_sym(r, {1, 2, 3}));
                double antisym = max_abs(cyclic_sym(r, {2, 3}));
                worstBianchi = std::max(worstBianchi, bianchi);
                worstAntisym = std::max(worstAntisym, antisym);
                results.push_back({{"point", x},
                                   {"curvature", tensor_table(r)},
                                   {"ricci", tensor_table(ric)},
                                   {"bianchi_residual", bianchi},
                                   {"antisymmetry_residual", antisym}});
            }
            bool pass = worstBianchi < tol && worstAntisym == 0.0;
            json rep;
            rep["chart"] = chartPath;
            rep["command"] = "curvature";
            rep["environment"] = environment_json(tol, 0, seed);
            rep["points"] = points_json(pts);
            rep["results"] = results;
            rep["residuals"] = {{"max_bianchi", worstBianchi}, {"max_antisymmetry", worstAntisym}};
            rep["pass"] = pass;
            return emit(rep, outPath, pass);
        }

        if (cGrs->parsed()) {
            tol = effective_tol(cGrs, 1e-9);
            auto pts = sample_points(chart, points, seed);
            GrsReport g = check_generalized_ricci_symmetric(conn, pts, tol);
            json rep;
            rep["chart"] = chartPath;
            rep["command"] = "check-grs";
            rep["environment"] = environment_json(tol, 0, seed);
            rep["points"] = points_json(pts);
            rep["per_point"] = g.per_point;
            rep["residuals"] = {{"max_grs_violation", g.max_residual}};
            rep["pass"] = g.pass;
            return emit(rep, outPath, g.pass);
        }

        if (cPi1->parsed()) {
            tol = effective_tol(cPi1, 1e-8);
            if (!chart.fields.count(pFieldName))
                throw InputError("chart has no field named '" + pFieldName + "'");
            const TensorField& pf = chart.fields.at(pFieldName);
            if (pf.valence != valence_from("ull"))
                throw InputError("field '" + pFieldName + "' must have valence ^h_ij");
            auto pts = sample_points(chart, points, seed);
            double worst = 0.0;
            json perPoint = json::array();
            for (const auto& x : pts) {
                Pi1State st;
                st.x = x;
                st.P = pf.eval(x);
                st.a = chart.fields.count(aFieldName) ? chart.fields.at(aFieldName).eval(x)
                                                      : Tensor(chart.dim, "ll");
                double r = max_abs(pi1_residual(st, conn, pf));
                worst = std::max(worst, r);
                perPoint.push_back(r);
            }
            bool pass = worst < tol;
            json rep;
            rep["chart"] = chartPath;
            rep["command"] = "check-pi1";
            rep["environment"] = environment_json(tol, 0, seed);
            rep["points"] = points_json(pts);
            rep["per_point"] = perPoint;
            rep["residuals"] = {{"max_pi1_residual", worst}};
            rep["pass"] = pass;
            return emit(rep, outPath, pass);
        }

        if (cInt->parsed() || cLoop->parsed()) {
            tol = cInt->parsed() ? effective_tol(cInt, 1e-6) : effective_tol(cLoop, 1e-8);
            TargetKind target = parse_target(targetStr);
            PathSpec path;
            if (cInt->parsed()) {
                path.waypoints = parse_waypoints(pathSpecStr, chart.dim);
            } else if (!loopSpecStr.empty()) {
                path.waypoints = parse_waypoints(loopSpecStr, chart.dim);
                if (path.waypoints.front() != path.waypoints.back())
                    throw InputError("loop must close on its start");
            } else {
                path = default_square_loop(chart, 0.5, steps);
            }
            path.stepsPerSegment = steps;
            for (const auto& w : path.waypoints)
                if (!chart.in_domain(w)) throw InputError("waypoint outside the chart domain box");

            PackedState v0 = load_state(statePath, target, chart.dim, path.waypoints.front());
            {
                double viol = target == TargetKind::Riemannian
                                  ? algebraic_constraint_residual(unpack_riemann(v0)).max_violation()
                                  : algebraic_constraint_residual(unpack_grs(v0)).max_violation();
                if (viol > 1e-8)
                    throw InputError("initial state violates the algebraic constraints (residual " +
                                     format_real(viol) + ")");
            }

            json rep;
            rep["chart"] = chartPath;
            rep["environment"] = environment_json(tol, steps, seed);
            rep["state"] = statePath;
            rep["target"] = targetStr;

            if (cInt->parsed()) {
                IntegrateOptions opt;
                opt.constraintTol = tol;
                rep["command"] = "integrate";
                try {
                    IntegrateResult res = integrate_along(path, v0, conn, opt);
                    json finalState;
                    if (target == TargetKind::Riemannian) {
                        RiemannUnknowns u = unpack_riemann(res.state);
                        finalState = {{"gbar", tensor_table(u.gbar)}, {"P", tensor_table(u.P)},
                                      {"a", tensor_table(u.a)},       {"aD", tensor_table(u.aD)},
                                      {"K", u.K.value()},             {"Rbar", tensor_table(u.Rbar)},
                                      {"RbarD", tensor_table(u.RbarD)}};
                        rep["det_gbar"] = {{"final", res.finalDetGbar}, {"min_abs", res.minDetGbar}};
                    } else {
                        GrsUnknowns u = unpack_grs(res.state);
                        finalState = {{"P", tensor_table(u.P)},
                                      {"a", tensor_table(u.a)},
                                      {"Rbar", tensor_table(u.Rbar)},
                                      {"RbarD", tensor_table(u.RbarD)}};
                    }
                    rep["final_state"] = finalState;
                    rep["residuals"] = {{"max_constraint_drift", res.maxConstraintDrift}};
                    rep["pass"] = true;
                    return emit(rep, outPath, true);
                } catch (const IntegrationError& e) {
                    rep["error"] = e.what();
                    rep["pass"] = false;
                    return emit(rep, outPath, false);
                }
            }

            rep["command"] = "loop-check";
            json wp = json::array();
            for (const auto& w : path.waypoints) wp.push_back(w);
            rep["loop"] = wp;
            try {
                double defect = loop_defect(path, v0, conn);
                bool pass = defect < tol;
                rep["residuals"] = {{"loop_defect", defect}};
                rep["pass"] = pass;
                return emit(rep, outPath, pass);
            } catch (const IntegrationError& e) {
                rep["error"] = e.what();
                rep["pass"] = false;
                return emit(rep, outPath, false);
            }
        }

        if (cGeo->parsed()) {
            tol = effective_tol(cGeo, 1e-6);
            Connection bar = conn;
            ChartSpec barChart;
            if (!barChartPath.empty()) {
                barChart = load_chart(barChartPath);
                if (barChart.dim != chart.dim) throw InputError("target chart dimension mismatch");
                bar = Connection{&chart, barChart.gamma};
            } else if (chart.fields.count(pFieldName)) {
                const TensorField& pf = chart.fields.at(pFieldName);
                if (pf.valence != valence_from("ull"))
                    throw InputError("field '" + pFieldName + "' must have valence ^h_ij");
                bar = offset_connection(conn, pf);
            } else {
                throw InputError("need --barchart or a deformation field '" + pFieldName +
                                 "' in the chart");
            }

            std::mt19937 gen(seed);
            std::vector<std::pair<std::vector<double>, std::vector<double>>> seeds;
            for (int s = 0; s < seedCount; ++s) {
                std::vector<double> x0(static_cast<std::size_t>(chart.dim)),
                    v0(static_cast<std::size_t>(chart.dim));
                for (int k = 0; k < chart.dim; ++k) {
                    double lo = chart.domain[k][0], hi = chart.domain[k][1];
                    double c = 0.5 * (lo + hi), w = hi - lo;
                    std::uniform_real_distribution<double> dx(c - 0.15 * w, c + 0.15 * w);
                    std::uniform_real_distribution<double> dv(-1.0, 1.0);
                    x0[static_cast<std::size_t>(k)] = dx(gen);
                    v0[static_cast<std::size_t>(k)] = dv(gen);
                }
                seeds.emplace_back(x0, v0);
            }

            json rep;
            rep["chart"] = chartPath;
            rep["command"] = "geodesic-image";
            rep["environment"] = environment_json(tol, steps, seed);
            json warnings = json::array();
            if (chart.dim < 3)
                warnings.push_back("in dimension 2 the span test passes trivially wherever the "
                                   "tangent pair is independent");
            rep["warnings"] = warnings;
            try {
                MappingReport mrep = verify_mapping(conn, bar, seeds, tol, tEnd, steps);
                json perSeed = json::array();
                for (const auto& s : mrep.seeds)
                    perSeed.push_back(
                        {{"x0", s.x0}, {"v0", s.v0}, {"max_residual", s.maxResidual}, {"pass", s.pass}});
                rep["per_seed"] = perSeed;
                rep["residuals"] = {{"max_span_residual", mrep.maxResidual}};
                rep["pass"] = mrep.pass;
                return emit(rep, outPath, mrep.pass);
            } catch (const CurveError& e) {
                throw InputError(std::string("geodesic integration failed: ") + e.what() +
                                 " (shrink --t-end or reseed)");
            }
        }

        throw InputError("no command handled");
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
