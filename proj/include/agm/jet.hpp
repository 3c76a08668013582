#pragma once

#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "agm/linalg.hpp"
#include "agm/tensor.hpp"

namespace agm {

/// A tensor field known at a point together with its first few derivatives.
///
/// lv[q] holds the q-th derivative with the derivative slots appended after the
/// base slots, first-applied first: lv[2] indexed (base..., d1, d2) is the d2
/// derivative of the d1 derivative. The same container serves two derivative
/// notions: plain coordinate partials (symmetric in d-slots) and covariant
/// derivatives whose levels are supplied by substitution from a closed system.
struct TJet {
    std::vector<Tensor> lv;

    TJet() = default;
    explicit TJet(std::vector<Tensor> levels) : lv(std::move(levels)) {}

    int order() const { return static_cast<int>(lv.size()) - 1; }
    const Tensor& value() const { return lv[0]; }
};

/// Jet of a field that does not vary: all derivative levels vanish.
inline TJet jet_const(const Tensor& t, int order) {
    TJet j;
    j.lv.push_back(t);
    Valence v = t.valence();
    for (int q = 1; q <= order; ++q) {
        v.push_back(Slot::Lo);
        j.lv.emplace_back(t.dim(), v);
    }
    return j;
}

inline TJet jet_truncate(const TJet& j, int order) {
    if (order > j.order()) throw std::invalid_argument("jet_truncate: order exceeds available levels");
    TJet r;
    r.lv.assign(j.lv.begin(), j.lv.begin() + order + 1);
    return r;
}

/// Jet of the derivative field: drops the value level, turning the first
/// derivative slot into a base slot.
inline TJet jet_shift(const TJet& j) {
    if (j.order() < 1) throw std::invalid_argument("jet_shift: jet has no derivative level");
    TJet r;
    r.lv.assign(j.lv.begin() + 1, j.lv.end());
    return r;
}

inline TJet jet_add(const TJet& a, const TJet& b) {
    if (a.order() != b.order()) throw std::invalid_argument("jet_add: order mismatch");
    TJet r;
    for (std::size_t q = 0; q < a.lv.size(); ++q) r.lv.push_back(add(a.lv[q], b.lv[q]));
    return r;
}

inline TJet jet_sub(const TJet& a, const TJet& b) {
    if (a.order() != b.order()) throw std::invalid_argument("jet_sub: order mismatch");
    TJet r;
    for (std::size_t q = 0; q < a.lv.size(); ++q) r.lv.push_back(sub(a.lv[q], b.lv[q]));
    return r;
}

inline TJet jet_scale(const TJet& a, double s) {
    TJet r;
    for (const Tensor& t : a.lv) r.lv.push_back(scale(t, s));
    return r;
}

/// Cyclic sum over base slots, level by level.
inline TJet jet_cyclic(const TJet& a, std::initializer_list<int> slots) {
    TJet r;
    for (const Tensor& t : a.lv) r.lv.push_back(cyclic_sym(t, slots));
    return r;
}

inline TJet jet_alternate(const TJet& a, int s1, int s2) {
    TJet r;
    for (const Tensor& t : a.lv) r.lv.push_back(alternate(t, s1, s2));
    return r;
}

struct JFac {
    const TJet* j;
    std::string_view idx;
};

namespace detail {
// Derivative labels appended to einsum strings; user labels must avoid digits.
inline constexpr char kDerivLabel[4] = {'1', '2', '3', '4'};
} // namespace detail

/// einsum lifted to jets by the Leibniz rule: level q is the sum over all
/// assignments of the q ordered derivative indices to the factors.
inline TJet jet_einsum(std::string_view out, std::initializer_list<JFac> facs, int order) {
    for (const JFac& f : facs)
        if (f.j->order() < order)
            throw std::invalid_argument("jet_einsum: factor jet order too low for requested order");
    TJet result;
    std::vector<std::string> base;
    for (const JFac& f : facs) base.emplace_back(f.idx);

    for (int q = 0; q <= order; ++q) {
        std::string outq(out);
        for (int d = 0; d < q; ++d) outq.push_back(detail::kDerivLabel[d]);
        Tensor levelSum;
        bool first = true;
        // assignment[d] = which factor receives derivative label d
        std::vector<int> assign(static_cast<std::size_t>(q), 0);
        const int nf = static_cast<int>(base.size());
        while (true) {
            std::vector<std::string> lbl = base;
            std::vector<int> cnt(static_cast<std::size_t>(nf), 0);
            for (int d = 0; d < q; ++d) {
                lbl[assign[d]].push_back(detail::kDerivLabel[d]);
                cnt[assign[d]]++;
            }
            std::vector<Fac> fs;
            int fi = 0;
            for (const JFac& f : facs) {
                fs.push_back(Fac{&f.j->lv[cnt[fi]], lbl[fi]});
                ++fi;
            }
            Tensor term = einsum(outq, std::span<const Fac>(fs));
            levelSum = first ? term : add(levelSum, term);
            first = false;
            // advance assignment odometer
            int d = q - 1;
            for (; d >= 0; --d) {
                if (++assign[d] < nf) break;
                assign[d] = 0;
            }
            if (d < 0) break;
        }
        result.lv.push_back(levelSum);
    }
    return result;
}

} // namespace agm
