#pragma once

#include <cstdio>
#include <string>

#include "json.hpp"

#include "agm/tensor.hpp"

namespace agm {

/// Fixed formatting for every real number that reaches a report: 12
/// significant digits, so identical runs produce identical bytes.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace detail {

inline void dump_json(const nlohmann::json& j, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string padIn(static_cast<std::size_t>(depth + 1) * 2, ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            std::size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                out += padIn;
                out += nlohmann::json(it.key()).dump();
                out += ": ";
                dump_json(it.value(), out, depth + 1);
                if (i + 1 < j.size()) out += ",";
                out += "\n";
            }
            out += pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                dump_json(j[i], out, depth + 1);
                if (i + 1 < j.size()) out += ", ";
            }
            out += "]";
            return;
        }
        case nlohmann::json::value_t::number_float: out += format_real(j.get<double>()); return;
        default: out += j.dump(); return;
    }
}

} // namespace detail

/// Deterministic report serialization: sorted keys (the object type is an
/// ordered map), two-space indentation, floats at 12 significant digits.
inline std::string dump_report(const nlohmann::json& j) {
    std::string out;
    detail::dump_json(j, out, 0);
    out += "\n";
    return out;
}

/// Component table of a tensor with 1-based comma-separated index keys;
/// entries that are exactly zero are omitted.
inline nlohmann::json tensor_table(const Tensor& t) {
    nlohmann::json table = nlohmann::json::object();
    if (t.rank() == 0) {
        table["scalar"] = t.value();
        return table;
    }
    std::vector<int> idx(static_cast<std::size_t>(t.rank()), 0);
    do {
        double v = t.at(idx);
        if (v != 0.0) {
            std::string key;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                if (i) key += ',';
                key += std::to_string(idx[i] + 1);
            }
            table[key] = v;
        }
    } while (detail::odometer(idx, t.dim()));
    return table;
}

/// Conventions block reproduced in every report so each number is
/// reproducible from the report alone.
inline nlohmann::json conventions_block() {
    return {
        {"alternation", "t_[lm] = t_lm - t_ml (no 1/2)"},
        {"curvature",
         "R^h_ijk = d_j Gamma^h_ik - d_k Gamma^h_ij + Gamma^h_ja Gamma^a_ik - Gamma^h_ka Gamma^a_ij"},
        {"cyclic_brackets", "cyclic sum over bracketed indices, no coefficient"},
        {"indices", "1-based in all tables"},
        {"ricci", "Ric_ij = R^a_ija"},
    };
}

} // namespace agm
