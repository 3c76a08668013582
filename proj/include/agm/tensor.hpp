#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace agm {

/// Variance of a tensor slot: contravariant (Up) or covariant (Lo).
enum class Slot : std::uint8_t { Up, Lo };

using Valence = std::vector<Slot>;

inline Valence valence_from(std::string_view s) {
    Valence v;
    v.reserve(s.size());
    for (char c : s) {
        if (c == 'u' || c == 'U' || c == '^')
            v.push_back(Slot::Up);
        else if (c == 'l' || c == 'L' || c == '_')
            v.push_back(Slot::Lo);
        else
            throw std::invalid_argument("valence string may contain only 'u'/'l', got '" +
                                        std::string(1, c) + "'");
    }
    return v;
}

/// Dense multi-index array of reals with a declared valence.
///
/// Storage is row-major (last index fastest). Indices are 0-based in the API;
/// diagnostics use 1-based positions matching the usual index notation.
/// Tensors are value types: every operation returns a fresh tensor and never
/// mutates its inputs, so instances can be shared freely across threads.
class Tensor {
  public:
    Tensor() = default;

    Tensor(int dim, Valence valence) : dim_(dim), valence_(std::move(valence)) {
        if (dim_ < 1) throw std::invalid_argument("tensor dimension must be >= 1");
        std::size_t len = 1;
        for (std::size_t i = 0; i < valence_.size(); ++i) len *= static_cast<std::size_t>(dim_);
        data_.assign(len, 0.0);
    }

    Tensor(int dim, std::string_view valence) : Tensor(dim, valence_from(valence)) {}

    /// Rank-0 tensor holding a single value.
    static Tensor scalar(double v) {
        Tensor t(1, Valence{});
        t.data_[0] = v;
        return t;
    }

    int dim() const { return dim_; }
    int rank() const { return static_cast<int>(valence_.size()); }
    const Valence& valence() const { return valence_; }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }
    std::size_t size() const { return data_.size(); }

    double value() const {
        if (rank() != 0) throw std::invalid_argument("value() requires a rank-0 tensor");
        return data_[0];
    }

    std::size_t offset(std::span<const int> idx) const {
        std::size_t off = 0;
        for (int i = 0; i < rank(); ++i) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx[i]);
        return off;
    }

    double at(std::span<const int> idx) const { return data_[offset(idx)]; }
    double& at(std::span<const int> idx) { return data_[offset(idx)]; }
    double at(std::initializer_list<int> idx) const { return at(std::span<const int>(idx.begin(), idx.size())); }
    double& at(std::initializer_list<int> idx) {
        return data_[offset(std::span<const int>(idx.begin(), idx.size()))];
    }

    bool same_shape(const Tensor& o) const { return dim_ == o.dim_ && valence_ == o.valence_; }

  private:
    int dim_ = 1;
    Valence valence_;
    std::vector<double> data_{0.0};
};

namespace detail {

/// Steps an index vector through all dim^rank combinations. Returns false on wrap-around.
inline bool odometer(std::span<int> idx, int dim) {
    for (int i = static_cast<int>(idx.size()) - 1; i >= 0; --i) {
        if (++idx[i] < dim) return true;
        idx[i] = 0;
    }
    return false;
}

inline void check_slot(const Tensor& t, int s, const char* what) {
    if (s < 0 || s >= t.rank())
        throw std::invalid_argument(std::string(what) + ": slot " + std::to_string(s + 1) +
                                    " out of range for rank-" + std::to_string(t.rank()) + " tensor");
}

} // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: tensors differ in dimension or valence");
    Tensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] += b.data()[i];
    return r;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("sub: tensors differ in dimension or valence");
    Tensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] -= b.data()[i];
    return r;
}

inline Tensor scale(const Tensor& a, double s) {
    Tensor r = a;
    for (double& v : r.data()) v *= s;
    return r;
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

/// Tensor product; the result valence is the concatenation of both valences.
inline Tensor outer(const Tensor& a, const Tensor& b) {
    if (a.rank() > 0 && b.rank() > 0 && a.dim() != b.dim())
        throw std::invalid_argument("outer: dimension mismatch");
    Valence v = a.valence();
    v.insert(v.end(), b.valence().begin(), b.valence().end());
    Tensor r(std::max(a.dim(), b.dim()), std::move(v));
    std::size_t bn = b.size();
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < bn; ++j) r.data()[i * bn + j] = a.data()[i] * b.data()[j];
    return r;
}

/// Kronecker delta, valence ^h_i.
inline Tensor kronecker(int n) {
    if (n < 2) throw std::invalid_argument("kronecker: dimension must be >= 2");
    Tensor t(n, Valence{Slot::Up, Slot::Lo});
    for (int i = 0; i < n; ++i) t.at({i, i}) = 1.0;
    return t;
}

/// Result slot p reads source slot perm[p].
inline Tensor permute(const Tensor& t, std::span<const int> perm) {
    if (static_cast<int>(perm.size()) != t.rank()) throw std::invalid_argument("permute: size mismatch");
    Valence v(t.rank(), Slot::Lo);
    for (int p = 0; p < t.rank(); ++p) {
        detail::check_slot(t, perm[p], "permute");
        v[p] = t.valence()[perm[p]];
    }
    Tensor r(t.dim(), std::move(v));
    if (t.rank() == 0) {
        r.data()[0] = t.data()[0];
        return r;
    }
    std::vector<int> idx(t.rank(), 0), src(t.rank(), 0);
    do {
        for (int p = 0; p < t.rank(); ++p) src[perm[p]] = idx[p];
        r.at(idx) = t.at(src);
    } while (detail::odometer(idx, t.dim()));
    return r;
}

/// Trace over one contravariant and one covariant slot.
inline Tensor contract(const Tensor& t, int slotA, int slotB) {
    detail::check_slot(t, slotA, "contract");
    detail::check_slot(t, slotB, "contract");
    if (slotA == slotB) throw std::invalid_argument("contract: slots must differ");
    if (t.valence()[slotA] == t.valence()[slotB])
        throw std::invalid_argument("contract: slots " + std::to_string(slotA + 1) + " and " +
                                    std::to_string(slotB + 1) + " have the same kind; need one upper, one lower");
    Valence v;
    for (int s = 0; s < t.rank(); ++s)
        if (s != slotA && s != slotB) v.push_back(t.valence()[s]);
    Tensor r(t.dim(), std::move(v));
    std::vector<int> ridx(r.rank(), 0), src(t.rank(), 0);
    do {
        double sum = 0.0;
        for (int d = 0; d < t.dim(); ++d) {
            int k = 0;
            for (int s = 0; s < t.rank(); ++s)
                src[s] = (s == slotA || s == slotB) ? d : ridx[k++];
            sum += t.at(src);
        }
        r.at(ridx) = sum;
        if (r.rank() == 0) break;
    } while (detail::odometer(ridx, t.dim()));
    return r;
}

/// Cyclic sum over the listed slots, without a normalizing coefficient.
/// All listed slots must carry the same kind.
inline Tensor cyclic_sym(const Tensor& t, std::span<const int> slots) {
    if (slots.size() < 2) throw std::invalid_argument("cyclic_sym: need at least two slots");
    for (int s : slots) detail::check_slot(t, s, "cyclic_sym");
    for (std::size_t i = 1; i < slots.size(); ++i)
        if (t.valence()[slots[i]] != t.valence()[slots[0]])
            throw std::invalid_argument("cyclic_sym: slots " + std::to_string(slots[0] + 1) + " and " +
                                        std::to_string(slots[i] + 1) + " have mixed kinds");
    Tensor r(t.dim(), t.valence());
    std::vector<int> perm(t.rank());
    for (std::size_t rot = 0; rot < slots.size(); ++rot) {
        std::iota(perm.begin(), perm.end(), 0);
        // result slot slots[i] reads source slot slots[(i+rot) % k]
        for (std::size_t i = 0; i < slots.size(); ++i) perm[slots[i]] = slots[(i + rot) % slots.size()];
        r = add(r, permute(t, perm));
    }
    return r;
}

inline Tensor cyclic_sym(const Tensor& t, std::initializer_list<int> slots) {
    return cyclic_sym(t, std::span<const int>(slots.begin(), slots.size()));
}

/// Two-term alternation t_[ab] = t_ab - t_ba over a slot pair of equal kind.
inline Tensor alternate(const Tensor& t, int slotA, int slotB) {
    detail::check_slot(t, slotA, "alternate");
    detail::check_slot(t, slotB, "alternate");
    if (slotA == slotB) throw std::invalid_argument("alternate: slots must differ");
    if (t.valence()[slotA] != t.valence()[slotB])
        throw std::invalid_argument("alternate: slots " + std::to_string(slotA + 1) + " and " +
                                    std::to_string(slotB + 1) + " have mixed kinds");
    std::vector<int> perm(t.rank());
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[slotA], perm[slotB]);
    return sub(t, permute(t, perm));
}

inline double max_abs(const Tensor& t) {
    double m = 0.0;
    for (double v : t.data()) m = std::max(m, std::abs(v));
    return m;
}

inline bool all_finite(const Tensor& t) {
    for (double v : t.data())
        if (!std::isfinite(v)) return false;
    return true;
}

/// One labeled factor of an einsum contraction.
struct Fac {
    const Tensor* t;
    std::string_view idx; // one label character per slot
};

/// Label-driven product/contraction.
///
/// Every label appearing in `out` must occur on exactly one factor slot and names a
/// free index; every other label must occur exactly twice with opposite slot kinds
/// and is summed. A label may repeat inside a single factor (a trace).
inline Tensor einsum(std::string_view out, std::span<const Fac> facs) {
    struct Axis {
        char label;
        Slot kind = Slot::Lo;
        int count = 0;
        int ups = 0;
    };
    std::vector<Axis> axes;
    auto axis_of = [&](char c) -> int {
        for (std::size_t i = 0; i < axes.size(); ++i)
            if (axes[i].label == c) return static_cast<int>(i);
        axes.push_back({c});
        return static_cast<int>(axes.size()) - 1;
    };
    for (char c : out) axis_of(c);
    const int nfree = static_cast<int>(axes.size());

    int dim = 0;
    std::vector<std::vector<int>> slotAxis;
    for (const Fac& f : facs) {
        if (static_cast<int>(f.idx.size()) != f.t->rank())
            throw std::invalid_argument("einsum: label string '" + std::string(f.idx) +
                                        "' does not match factor rank " + std::to_string(f.t->rank()));
        if (f.t->rank() > 0) {
            if (dim == 0) dim = f.t->dim();
            if (f.t->dim() != dim) throw std::invalid_argument("einsum: factors differ in dimension");
        }
        slotAxis.emplace_back();
        for (int s = 0; s < f.t->rank(); ++s) {
            int a = axis_of(f.idx[s]);
            axes[a].count++;
            if (f.t->valence()[s] == Slot::Up) axes[a].ups++;
            axes[a].kind = f.t->valence()[s];
            slotAxis.back().push_back(a);
        }
    }
    if (dim == 0) dim = 1;
    for (int a = 0; a < static_cast<int>(axes.size()); ++a) {
        if (a < nfree) {
            if (axes[a].count != 1)
                throw std::invalid_argument(std::string("einsum: output label '") + axes[a].label +
                                            "' must appear exactly once in the factors");
        } else {
            if (axes[a].count != 2 || axes[a].ups != 1)
                throw std::invalid_argument(std::string("einsum: summed label '") + axes[a].label +
                                            "' must appear exactly twice with opposite kinds");
        }
    }

    // output valence from the factor slots carrying the free labels
    Valence outv(nfree, Slot::Lo);
    {
        int fi = 0;
        for (const Fac& f : facs) {
            for (int s = 0; s < f.t->rank(); ++s) {
                int a = slotAxis[fi][s];
                if (a < nfree) outv[a] = f.t->valence()[s];
            }
            ++fi;
        }
    }
    Tensor r(dim, std::move(outv));

    const int nsum = static_cast<int>(axes.size()) - nfree;
    std::vector<int> axisVal(axes.size(), 0);
    std::vector<int> fidx;
    std::span<int> freePart(axisVal.data(), static_cast<std::size_t>(nfree));
    std::span<int> sumPart(axisVal.data() + nfree, static_cast<std::size_t>(nsum));
    std::size_t outOff = 0;
    do {
        std::fill(sumPart.begin(), sumPart.end(), 0);
        double total = 0.0;
        do {
            double prod = 1.0;
            int fi = 0;
            for (const Fac& f : facs) {
                const auto& sa = slotAxis[fi++];
                std::size_t off = 0;
                for (std::size_t s = 0; s < sa.size(); ++s)
                    off = off * static_cast<std::size_t>(dim) + static_cast<std::size_t>(axisVal[sa[s]]);
                prod *= f.t->data()[off];
                if (prod == 0.0) break;
            }
            total += prod;
        } while (nsum > 0 && detail::odometer(sumPart, dim));
        r.data()[outOff++] = total;
    } while (nfree > 0 && detail::odometer(freePart, dim));
    return r;
}

inline Tensor einsum(std::string_view out, std::initializer_list<Fac> facs) {
    return einsum(out, std::span<const Fac>(facs.begin(), facs.size()));
}

} // namespace agm
