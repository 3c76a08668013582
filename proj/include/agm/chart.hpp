#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "agm/expr.hpp"
#include "agm/jet.hpp"
#include "agm/linalg.hpp"
#include "agm/tensor.hpp"

namespace agm {

struct ChartError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A tensor-valued field on a chart: one expression per component.
struct TensorField {
    int dim = 0;
    Valence valence;
    std::vector<Expr> entries; // row-major, same layout as Tensor

    TensorField() = default;
    TensorField(int d, Valence v) : dim(d), valence(std::move(v)) {
        std::size_t len = 1;
        for (std::size_t i = 0; i < valence.size(); ++i) len *= static_cast<std::size_t>(dim);
        entries.assign(len, Expr::constant(0.0));
    }
    TensorField(int d, std::string_view v) : TensorField(d, valence_from(v)) {}

    int rank() const { return static_cast<int>(valence.size()); }

    Expr& at(std::span<const int> idx) {
        Tensor probe(dim, valence);
        return entries[probe.offset(idx)];
    }
    Expr& at(std::initializer_list<int> idx) { return at(std::span<const int>(idx.begin(), idx.size())); }
    const Expr& at(std::initializer_list<int> idx) const {
        Tensor probe(dim, valence);
        return entries[probe.offset(std::span<const int>(idx.begin(), idx.size()))];
    }

    Tensor eval(std::span<const double> x) const {
        Tensor t(dim, valence);
        for (std::size_t i = 0; i < entries.size(); ++i) t.data()[i] = entries[i].eval(x);
        return t;
    }

    /// Coordinate partial of every component; appends one lower slot.
    TensorField partial() const {
        Valence v = valence;
        v.push_back(Slot::Lo);
        TensorField r(dim, v);
        for (std::size_t i = 0; i < entries.size(); ++i)
            for (int k = 0; k < dim; ++k)
                r.entries[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)] = entries[i].diff(k);
        return r;
    }

    bool all_zero() const {
        for (const Expr& e : entries)
            if (!e.is_const(0.0)) return false;
        return true;
    }
};

inline TensorField add_fields(const TensorField& a, const TensorField& b) {
    if (a.dim != b.dim || a.valence != b.valence)
        throw std::invalid_argument("add_fields: shape mismatch");
    TensorField r = a;
    for (std::size_t i = 0; i < r.entries.size(); ++i) r.entries[i] = a.entries[i] + b.entries[i];
    return r;
}

/// Jet of coordinate partials of a field at a point (levels are plain partials).
inline TJet pjet_of_field(const TensorField& f, std::span<const double> x, int order) {
    TJet j;
    TensorField cur = f;
    j.lv.push_back(cur.eval(x));
    for (int q = 1; q <= order; ++q) {
        cur = cur.partial();
        j.lv.push_back(cur.eval(x));
    }
    return j;
}

/// A coordinate chart: dimension, named coordinates, a domain box, connection
/// coefficients, and optional metric and candidate solution fields.
struct ChartSpec {
    int dim = 0;
    std::vector<std::string> coords;
    std::vector<std::array<double, 2>> domain;
    TensorField gamma;                       // connection coefficients, valence ^h_ij
    std::optional<TensorField> metric;       // valence _ij
    std::map<std::string, TensorField> fields;

    bool in_domain(std::span<const double> x) const {
        for (int k = 0; k < dim; ++k)
            if (x[k] < domain[k][0] || x[k] > domain[k][1]) return false;
        return true;
    }

    std::vector<double> center() const {
        std::vector<double> c(dim);
        for (int k = 0; k < dim; ++k) c[k] = 0.5 * (domain[k][0] + domain[k][1]);
        return c;
    }

    double min_extent() const {
        double m = domain.empty() ? 0.0 : domain[0][1] - domain[0][0];
        for (const auto& b : domain) m = std::min(m, b[1] - b[0]);
        return m;
    }
};

namespace detail {

inline std::vector<int> parse_index_key(const std::string& key, int rank, int dim, const std::string& what) {
    std::vector<int> idx;
    std::size_t pos = 0;
    while (pos < key.size()) {
        std::size_t next = key.find(',', pos);
        std::string tok = key.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        try {
            int v = std::stoi(tok);
            if (v < 1 || v > dim)
                throw ChartError(what + ": index " + tok + " out of range 1.." + std::to_string(dim) +
                                 " in key '" + key + "'");
            idx.push_back(v - 1);
        } catch (const std::invalid_argument&) {
            throw ChartError(what + ": malformed index key '" + key + "'");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (static_cast<int>(idx.size()) != rank)
        throw ChartError(what + ": key '" + key + "' has " + std::to_string(idx.size()) +
                         " indices, expected " + std::to_string(rank));
    return idx;
}

inline void sample_grid(const ChartSpec& c, int perAxis, std::vector<std::vector<double>>& out) {
    std::vector<int> idx(static_cast<std::size_t>(c.dim), 0);
    while (true) {
        std::vector<double> x(static_cast<std::size_t>(c.dim));
        for (int k = 0; k < c.dim; ++k) {
            double lo = c.domain[k][0], hi = c.domain[k][1];
            x[k] = perAxis == 1 ? 0.5 * (lo + hi)
                                : lo + (hi - lo) * static_cast<double>(idx[k]) / (perAxis - 1);
        }
        out.push_back(std::move(x));
        int d = c.dim - 1;
        for (; d >= 0; --d) {
            if (++idx[d] < perAxis) break;
            idx[d] = 0;
        }
        if (d < 0) break;
    }
}

} // namespace detail

/// Validates torsion-freeness of the connection and symmetry/nondegeneracy of
/// the metric on a 3^n grid over the domain box.
inline void validate_chart(const ChartSpec& c) {
    std::vector<std::vector<double>> grid;
    detail::sample_grid(c, 3, grid);
    for (const auto& x : grid) {
        Tensor g = c.gamma.eval(x);
        for (int h = 0; h < c.dim; ++h)
            for (int i = 0; i < c.dim; ++i)
                for (int j = i + 1; j < c.dim; ++j)
                    if (std::abs(g.at({h, i, j}) - g.at({h, j, i})) > 1e-12)
                        throw ChartError("connection is not torsion-free: Gamma^" + std::to_string(h + 1) +
                                         "_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                         " differs from its transpose at a sample point");
        if (c.metric) {
            Tensor m = c.metric->eval(x);
            for (int i = 0; i < c.dim; ++i)
                for (int j = i + 1; j < c.dim; ++j)
                    if (std::abs(m.at({i, j}) - m.at({j, i})) > 1e-12)
                        throw ChartError("metric is not symmetric at a sample point (components " +
                                         std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
            if (std::abs(determinant(m)) <= 1e-9)
                throw ChartError("metric is degenerate at a sample point (|det| <= 1e-9)");
        }
    }
}

inline TensorField parse_field_entries(const nlohmann::json& obj, int dim, const Valence& valence,
                                       std::span<const std::string> names, const std::string& what) {
    TensorField f(dim, valence);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        std::vector<int> idx = detail::parse_index_key(it.key(), f.rank(), dim, what);
        if (!it.value().is_string())
            throw ChartError(what + ": entry '" + it.key() + "' must be an expression string");
        try {
            f.at(std::span<const int>(idx)) = parse_expr(it.value().get<std::string>(), names, dim);
        } catch (const ParseError& e) {
            throw ChartError(what + " entry '" + it.key() + "': " + e.what());
        }
    }
    return f;
}

inline ChartSpec parse_chart_spec(const nlohmann::json& j) {
    ChartSpec c;
    if (!j.is_object()) throw ChartError("chart spec: top level must be an object");
    if (!j.contains("dimension") || !j["dimension"].is_number_integer())
        throw ChartError("chart spec: missing integer field 'dimension'");
    c.dim = j["dimension"].get<int>();
    if (c.dim < 2) throw ChartError("chart spec: dimension must be >= 2");

    if (j.contains("coordinates")) {
        for (const auto& v : j["coordinates"]) c.coords.push_back(v.get<std::string>());
        if (static_cast<int>(c.coords.size()) != c.dim)
            throw ChartError("chart spec: 'coordinates' must list exactly " + std::to_string(c.dim) +
                             " names");
    } else {
        for (int k = 1; k <= c.dim; ++k) c.coords.push_back("x" + std::to_string(k));
    }

    if (!j.contains("domain")) throw ChartError("chart spec: missing 'domain' (per-coordinate [lo,hi])");
    for (const auto& v : j["domain"]) {
        if (!v.is_array() || v.size() != 2) throw ChartError("chart spec: each domain entry must be [lo, hi]");
        double lo = v[0].get<double>(), hi = v[1].get<double>();
        if (!(lo < hi)) throw ChartError("chart spec: domain interval must satisfy lo < hi");
        c.domain.push_back({lo, hi});
    }
    if (static_cast<int>(c.domain.size()) != c.dim)
        throw ChartError("chart spec: 'domain' must list exactly " + std::to_string(c.dim) + " intervals");

    c.gamma = TensorField(c.dim, Valence{Slot::Up, Slot::Lo, Slot::Lo});
    if (j.contains("connection"))
        c.gamma = parse_field_entries(j["connection"], c.dim, c.gamma.valence, c.coords, "connection");

    if (j.contains("metric"))
        c.metric = parse_field_entries(j["metric"], c.dim, Valence{Slot::Lo, Slot::Lo}, c.coords, "metric");

    if (j.contains("fields")) {
        for (auto it = j["fields"].begin(); it != j["fields"].end(); ++it) {
            const auto& fj = it.value();
            if (!fj.is_object() || !fj.contains("valence") || !fj.contains("entries"))
                throw ChartError("field '" + it.key() + "': expected object with 'valence' and 'entries'");
            Valence v = valence_from(fj["valence"].get<std::string>());
            c.fields[it.key()] =
                parse_field_entries(fj["entries"], c.dim, v, c.coords, "field '" + it.key() + "'");
        }
    }

    validate_chart(c);
    return c;
}

inline ChartSpec parse_chart_spec(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ChartError(std::string("chart spec: ") + e.what());
    }
    return parse_chart_spec(j);
}

inline nlohmann::json serialize_field(const TensorField& f) {
    nlohmann::json entries = nlohmann::json::object();
    Tensor probe(f.dim, f.valence);
    std::vector<int> idx(static_cast<std::size_t>(f.rank()), 0);
    if (f.rank() == 0) {
        if (!f.entries[0].is_const(0.0)) entries[""] = f.entries[0].str();
        return entries;
    }
    do {
        const Expr& e = f.entries[probe.offset(idx)];
        if (e.is_const(0.0)) continue;
        std::string key;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (i) key += ',';
            key += std::to_string(idx[i] + 1);
        }
        entries[key] = e.str();
    } while (detail::odometer(idx, f.dim));
    return entries;
}

inline nlohmann::json serialize_chart_spec(const ChartSpec& c) {
    nlohmann::json j;
    j["dimension"] = c.dim;
    j["coordinates"] = c.coords;
    nlohmann::json dom = nlohmann::json::array();
    for (const auto& b : c.domain) dom.push_back({b[0], b[1]});
    j["domain"] = dom;
    j["connection"] = serialize_field(c.gamma);
    if (c.metric) j["metric"] = serialize_field(*c.metric);
    if (!c.fields.empty()) {
        nlohmann::json fs = nlohmann::json::object();
        for (const auto& [name, f] : c.fields) {
            std::string v;
            for (Slot s : f.valence) v += (s == Slot::Up ? 'u' : 'l');
            fs[name] = {{"valence", v}, {"entries", serialize_field(f)}};
        }
        j["fields"] = fs;
    }
    return j;
}

} // namespace agm
