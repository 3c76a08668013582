#pragma once

#include <span>
#include <string>
#include <vector>

#include "agm/chart.hpp"
#include "agm/jet.hpp"
#include "agm/linalg.hpp"
#include "agm/tensor.hpp"

namespace agm {

/// A torsion-free linear connection on a chart's domain. The coefficient field
/// may differ from the chart's own (e.g. a deformed connection).
struct Connection {
    const ChartSpec* chart;
    TensorField gamma; // ^h_ij
};

inline Connection connection_of(const ChartSpec& c) { return Connection{&c, c.gamma}; }

/// Connection with coefficients shifted by a (1,2) field.
inline Connection offset_connection(const Connection& c, const TensorField& p) {
    if (p.valence != Valence{Slot::Up, Slot::Lo, Slot::Lo})
        throw std::invalid_argument("offset_connection: field must have valence ^h_ij");
    return Connection{c.chart, add_fields(c.gamma, p)};
}

struct MetricField {
    const ChartSpec* chart;
    TensorField g; // _ij
};

inline MetricField metric_of(const ChartSpec& c) {
    if (!c.metric) throw ChartError("chart has no metric");
    return MetricField{&c, *c.metric};
}

/// Levi-Civita coefficients of a metric at a point.
inline Tensor christoffel(const MetricField& m, std::span<const double> x) {
    Tensor g = m.g.eval(x);
    Tensor ginv = invert(g, 1e-9);
    Tensor dg = m.g.partial().eval(x); // _ij,k
    Tensor rhs(g.dim(), Valence{Slot::Lo, Slot::Lo, Slot::Lo});
    const int n = g.dim();
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                rhs.at({a, i, j}) = 0.5 * (dg.at({a, j, i}) + dg.at({a, i, j}) - dg.at({i, j, a}));
    return einsum("hij", {{&ginv, "ha"}, {&rhs, "aij"}});
}

/// Curvature under the convention
///   R^h_ijk = d_j Gamma^h_ik - d_k Gamma^h_ij
///           + Gamma^h_ja Gamma^a_ik - Gamma^h_ka Gamma^a_ij,
/// which is antisymmetric in (j,k) by construction.
inline Tensor curvature(const Connection& c, std::span<const double> x) {
    Tensor g = c.gamma.eval(x);
    Tensor dg = c.gamma.partial().eval(x); // ^h_ij,k
    const int n = g.dim();
    Tensor r(n, Valence{Slot::Up, Slot::Lo, Slot::Lo, Slot::Lo});
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double v = dg.at({h, i, k, j}) - dg.at({h, i, j, k});
                    for (int a = 0; a < n; ++a)
                        v += g.at({h, j, a}) * g.at({a, i, k}) - g.at({h, k, a}) * g.at({a, i, j});
                    r.at({h, i, j, k}) = v;
                }
    return r;
}

/// Ricci tensor Ric_ij = R^a_ija (contraction with the last lower slot).
inline Tensor ricci(const Connection& c, std::span<const double> x) {
    Tensor r = curvature(c, x);
    return contract(r, 0, 3);
}

/// Symbolic curvature field (componentwise expressions).
inline TensorField curvature_field(const Connection& c) {
    const TensorField& g = c.gamma;
    TensorField dg = g.partial();
    const int n = g.dim;
    TensorField r(n, Valence{Slot::Up, Slot::Lo, Slot::Lo, Slot::Lo});
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    Expr v = dg.at({h, i, k, j}) - dg.at({h, i, j, k});
                    for (int a = 0; a < n; ++a)
                        v = v + g.at({h, j, a}) * g.at({a, i, k}) - g.at({h, k, a}) * g.at({a, i, j});
                    r.at({h, i, j, k}) = v;
                }
    return r;
}

/// Symbolic Ricci field.
inline TensorField ricci_field(const Connection& c) {
    TensorField r = curvature_field(c);
    const int n = r.dim;
    TensorField ric(n, Valence{Slot::Lo, Slot::Lo});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Expr v = Expr::constant(0.0);
            for (int a = 0; a < n; ++a) v = v + r.at({a, i, j, a});
            ric.at({i, j}) = v;
        }
    return ric;
}

/// Symbolic covariant derivative of a tensor field: one +Gamma term per upper
/// slot, one -Gamma term per lower slot, derivative slot appended last.
inline TensorField covd_field(const TensorField& t, const TensorField& gamma) {
    const int n = t.dim;
    TensorField r = t.partial();
    Tensor probe(n, t.valence);
    std::vector<int> idx(static_cast<std::size_t>(t.rank()), 0);
    std::vector<int> src(static_cast<std::size_t>(t.rank()), 0);
    if (t.rank() == 0) return r;
    do {
        for (int k = 0; k < n; ++k) {
            std::vector<int> ridx(idx.begin(), idx.end());
            ridx.push_back(k);
            Expr v = r.at(std::span<const int>(ridx));
            for (int s = 0; s < t.rank(); ++s) {
                for (int a = 0; a < n; ++a) {
                    src.assign(idx.begin(), idx.end());
                    src[static_cast<std::size_t>(s)] = a;
                    const Expr& te = t.entries[probe.offset(std::span<const int>(src))];
                    if (t.valence[static_cast<std::size_t>(s)] == Slot::Up)
                        v = v + gamma.at({idx[static_cast<std::size_t>(s)], k, a}) * te;
                    else
                        v = v - gamma.at({a, k, idx[static_cast<std::size_t>(s)]}) * te;
                }
            }
            r.at(std::span<const int>(ridx)) = v;
        }
    } while (detail::odometer(idx, n));
    return r;
}

/// Covariant derivative of an expression field evaluated at a point.
inline Tensor covariant_derivative(const TensorField& t, const Connection& c, std::span<const double> x) {
    return covd_field(t, c.gamma).eval(x);
}

/// Covariant derivative on partial-derivative jets: consumes a jet of order q
/// and the connection's partial jet of order >= q-1, returns a jet of order q-1.
inline TJet cov_from_partial(const TJet& t, const TJet& gammaP) {
    int q = t.order() - 1;
    if (q < 0) throw std::invalid_argument("cov_from_partial: jet order too low");
    const Tensor& v0 = t.value();
    const int rank = v0.rank();
    static constexpr std::string_view pool = "abcdefghijklmnopqrs";
    if (rank + 2 > static_cast<int>(pool.size())) throw std::invalid_argument("cov_from_partial: rank too large");
    std::string baseLbl(pool.substr(0, static_cast<std::size_t>(rank)));
    char dl = pool[static_cast<std::size_t>(rank)];     // derivative slot label
    char sl = pool[static_cast<std::size_t>(rank) + 1]; // summation label

    TJet tTrunc = jet_truncate(t, q);
    TJet result = jet_shift(t); // partial derivatives of T, order q
    for (int s = 0; s < rank; ++s) {
        std::string tl = baseLbl;
        tl[static_cast<std::size_t>(s)] = sl;
        std::string gl;
        if (v0.valence()[static_cast<std::size_t>(s)] == Slot::Up)
            gl = std::string(1, baseLbl[static_cast<std::size_t>(s)]) + dl + sl;
        else
            gl = std::string(1, sl) + dl + baseLbl[static_cast<std::size_t>(s)];
        TJet term = jet_einsum(baseLbl + dl, {{&gammaP, gl}, {&tTrunc, tl}}, q);
        result = v0.valence()[static_cast<std::size_t>(s)] == Slot::Up ? jet_add(result, term)
                                                                       : jet_sub(result, term);
    }
    return result;
}

/// Curvature as a partial-derivative jet; needs the connection's partial jet
/// one order higher.
inline TJet curvature_pjet(const TJet& gammaP) {
    int q = gammaP.order() - 1;
    TJet dG = jet_shift(gammaP); // ^h_ij|d
    TJet g = jet_truncate(gammaP, q);
    TJet r = jet_sub(jet_einsum("hijk", {{&dG, "hikj"}}, q), jet_einsum("hijk", {{&dG, "hijk"}}, q));
    r = jet_add(r, jet_einsum("hijk", {{&g, "hja"}, {&g, "aik"}}, q));
    r = jet_sub(r, jet_einsum("hijk", {{&g, "hka"}, {&g, "aij"}}, q));
    return r;
}

/// Covariant-derivative jet of the base curvature at a point:
/// lv[q] holds the q-th covariant derivative of R^h_ijk.
inline TJet curvature_cjet(const Connection& c, std::span<const double> x, int order) {
    TJet gammaP = pjet_of_field(c.gamma, x, order + 1);
    TJet cur = curvature_pjet(gammaP); // partial jet of R, order `order`
    TJet out;
    out.lv.push_back(cur.value());
    for (int q = 1; q <= order; ++q) {
        cur = cov_from_partial(cur, gammaP);
        out.lv.push_back(cur.value());
    }
    return out;
}

/// Connection coefficients evaluated at a point.
inline Tensor gamma_at(const Connection& c, std::span<const double> x) { return c.gamma.eval(x); }

struct GrsReport {
    double max_residual = 0.0;
    std::vector<double> per_point;
    bool pass = false;
};

/// Largest violation of Ric_ij,k + Ric_kj,i = 0 over the sample points,
/// computed from the analytic derivative of the symbolic Ricci field.
inline GrsReport check_generalized_ricci_symmetric(const Connection& c,
                                                   std::span<const std::vector<double>> points,
                                                   double tol) {
    TensorField ric = ricci_field(c);
    TensorField dric = covd_field(ric, c.gamma); // Ric_ij,k
    GrsReport rep;
    for (const auto& x : points) {
        Tensor d = dric.eval(x);
        Tensor viol = add(d, permute(d, std::array<int, 3>{2, 1, 0}));
        double v = max_abs(viol);
        rep.per_point.push_back(v);
        rep.max_residual = std::max(rep.max_residual, v);
    }
    rep.pass = rep.max_residual < tol;
    return rep;
}

} // namespace agm
