#pragma once

// Exact combinatorics of the symmetric groups S_t for t <= 6: permutations,
// cycle types, collision classes of outcome strings, and embedding constants.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace negmom {

inline constexpr int kMaxCopies = 6;

inline std::int64_t factorial(int n) {
    std::int64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

/// Element of S_t acting on copy slots {0,...,t-1}. `map[i]` is pi(i).
struct Permutation {
    int size = 0;
    std::array<std::uint8_t, kMaxCopies> map{};

    static Permutation identity(int t) {
        check_size(t);
        Permutation p;
        p.size = t;
        for (int i = 0; i < t; ++i) p.map[i] = static_cast<std::uint8_t>(i);
        return p;
    }

    static Permutation from_mapping(const std::vector<int>& m) {
        check_size(static_cast<int>(m.size()));
        Permutation p;
        p.size = static_cast<int>(m.size());
        std::array<bool, kMaxCopies> seen{};
        for (int i = 0; i < p.size; ++i) {
            if (m[i] < 0 || m[i] >= p.size || seen[m[i]])
                throw std::invalid_argument("Permutation: mapping is not a bijection");
            seen[m[i]] = true;
            p.map[i] = static_cast<std::uint8_t>(m[i]);
        }
        return p;
    }

    /// Cycles given with 1-based labels, e.g. {{1,2,3}} for the 3-cycle on slots 0,1,2.
    static Permutation from_cycles(int t, const std::vector<std::vector<int>>& cycles) {
        Permutation p = identity(t);
        for (const auto& c : cycles) {
            for (std::size_t k = 0; k < c.size(); ++k) {
                int a = c[k] - 1, b = c[(k + 1) % c.size()] - 1;
                if (a < 0 || a >= t || b < 0 || b >= t)
                    throw std::invalid_argument("Permutation: cycle label out of range");
                p.map[a] = static_cast<std::uint8_t>(b);
            }
        }
        std::array<bool, kMaxCopies> seen{};
        for (int i = 0; i < t; ++i) {
            if (seen[p.map[i]]) throw std::invalid_argument("Permutation: overlapping cycles");
            seen[p.map[i]] = true;
        }
        return p;
    }

    int operator()(int i) const { return map[i]; }

    bool operator==(const Permutation& o) const {
        if (size != o.size) return false;
        return std::equal(map.begin(), map.begin() + size, o.map.begin());
    }

    bool operator<(const Permutation& o) const {
        return std::lexicographical_compare(map.begin(), map.begin() + size,
                                            o.map.begin(), o.map.begin() + o.size);
    }

    bool is_identity() const {
        for (int i = 0; i < size; ++i)
            if (map[i] != i) return false;
        return true;
    }

    std::string str() const {
        std::ostringstream os;
        bool any = false;
        std::array<bool, kMaxCopies> seen{};
        for (int i = 0; i < size; ++i) {
            if (seen[i] || map[i] == i) continue;
            os << '(';
            int j = i;
            bool first = true;
            while (!seen[j]) {
                seen[j] = true;
                os << (first ? "" : ",") << (j + 1);
                first = false;
                j = map[j];
            }
            os << ')';
            any = true;
        }
        return any ? os.str() : "()";
    }

private:
    static void check_size(int t) {
        if (t < 1 || t > kMaxCopies) throw std::invalid_argument("Permutation: size must be in [1,6]");
    }
};

/// compose(p,q) maps i -> q(p(i)); with the W convention below, W_p W_q = W_{compose(q,p)}.
/// Cycle types of compose(p,q) and compose(q,p) agree, which is all the Weingarten
/// machinery relies on.
inline Permutation compose(const Permutation& p, const Permutation& q) {
    if (p.size != q.size) throw std::invalid_argument("compose: size mismatch");
    Permutation r;
    r.size = p.size;
    for (int i = 0; i < p.size; ++i) r.map[i] = q.map[p.map[i]];
    return r;
}

inline Permutation inverse(const Permutation& p) {
    Permutation r;
    r.size = p.size;
    for (int i = 0; i < p.size; ++i) r.map[p.map[i]] = static_cast<std::uint8_t>(i);
    return r;
}

/// Weakly decreasing positive parts summing to `total()`.
struct Partition {
    std::vector<int> parts;

    Partition() = default;
    explicit Partition(std::vector<int> p) : parts(std::move(p)) {
        std::sort(parts.begin(), parts.end(), std::greater<>());
        for (int x : parts)
            if (x < 1) throw std::invalid_argument("Partition: parts must be positive");
    }

    int total() const { return std::accumulate(parts.begin(), parts.end(), 0); }
    bool operator==(const Partition& o) const { return parts == o.parts; }
    bool operator<(const Partition& o) const { return parts < o.parts; }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) s += '+';
            s += std::to_string(parts[i]);
        }
        return s;
    }
};

/// Cycles of p as index lists, each starting at its smallest element, ordered by
/// smallest element.
inline std::vector<std::vector<int>> cycles_of(const Permutation& p) {
    std::vector<std::vector<int>> out;
    std::array<bool, kMaxCopies> seen{};
    for (int i = 0; i < p.size; ++i) {
        if (seen[i]) continue;
        std::vector<int> c;
        int j = i;
        while (!seen[j]) {
            seen[j] = true;
            c.push_back(j);
            j = p.map[j];
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline int cycle_count(const Permutation& p) {
    int n = 0;
    std::array<bool, kMaxCopies> seen{};
    for (int i = 0; i < p.size; ++i) {
        if (seen[i]) continue;
        ++n;
        int j = i;
        while (!seen[j]) {
            seen[j] = true;
            j = p.map[j];
        }
    }
    return n;
}

inline Partition cycle_type(const Permutation& p) {
    std::vector<int> lens;
    for (const auto& c : cycles_of(p)) lens.push_back(static_cast<int>(c.size()));
    return Partition(std::move(lens));
}

/// All partitions of t in descending lexicographic order ((t) first, (1,...,1) last).
inline std::vector<Partition> partitions_of(int t) {
    std::vector<Partition> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int n, int mx) -> void {
        if (n == 0) {
            out.emplace_back(Partition{cur});
            return;
        }
        for (int k = std::min(n, mx); k >= 1; --k) {
            cur.push_back(k);
            self(self, n - k, k);
            cur.pop_back();
        }
    };
    rec(rec, t, t);
    return out;
}

/// Cached data for one S_t. Elements are in lexicographic order of the mapping
/// array, so the identity has index 0.
class PermGroup {
public:
    static const PermGroup& get(int t) {
        if (t < 1 || t > kMaxCopies) throw std::invalid_argument("PermGroup: t must be in [1,6]");
        static const std::array<PermGroup, kMaxCopies> groups = {
            PermGroup(1), PermGroup(2), PermGroup(3), PermGroup(4), PermGroup(5), PermGroup(6)};
        return groups[t - 1];
    }

    int t() const { return t_; }
    const std::vector<Permutation>& elements() const { return elems_; }
    int order() const { return static_cast<int>(elems_.size()); }
    const std::vector<Partition>& classes() const { return parts_; }
    int class_count() const { return static_cast<int>(parts_.size()); }
    int class_of(int elem_index) const { return class_id_[elem_index]; }
    int class_size(int class_index) const { return class_size_[class_index]; }
    const Permutation& class_rep(int class_index) const { return elems_[class_rep_[class_index]]; }

    /// Lehmer rank; inverse of elements()[i].
    int index_of(const Permutation& p) const {
        int rank = 0;
        for (int i = 0; i < t_; ++i) {
            int smaller = 0;
            for (int j = i + 1; j < t_; ++j)
                if (p.map[j] < p.map[i]) ++smaller;
            rank += smaller * static_cast<int>(factorial(t_ - 1 - i));
        }
        return rank;
    }

    int class_of_partition(const Partition& lam) const {
        for (int c = 0; c < class_count(); ++c)
            if (parts_[c] == lam) return c;
        throw std::invalid_argument("PermGroup: not a partition of t");
    }

    int product_class(int i, int j) const {
        return class_id_[index_of(compose(elems_[i], elems_[j]))];
    }

private:
    explicit PermGroup(int t) : t_(t) {
        std::vector<int> m(t);
        std::iota(m.begin(), m.end(), 0);
        do {
            elems_.push_back(Permutation::from_mapping(m));
        } while (std::next_permutation(m.begin(), m.end()));
        parts_ = partitions_of(t);
        class_id_.resize(elems_.size());
        class_size_.assign(parts_.size(), 0);
        class_rep_.assign(parts_.size(), -1);
        for (std::size_t i = 0; i < elems_.size(); ++i) {
            Partition ct = cycle_type(elems_[i]);
            int c = class_of_partition(ct);
            class_id_[i] = c;
            ++class_size_[c];
            if (class_rep_[c] < 0) class_rep_[c] = static_cast<int>(i);
        }
    }

    int t_;
    std::vector<Permutation> elems_;
    std::vector<Partition> parts_;
    std::vector<int> class_id_;
    std::vector<int> class_size_;
    std::vector<int> class_rep_;
};

/// All t! elements, identity first (lexicographic order of mapping arrays).
inline const std::vector<Permutation>& enumerate_group(int t) {
    return PermGroup::get(t).elements();
}

/// Outcome of measuring t copies: t symbols in [0,d).
struct OutcomeString {
    std::vector<int> symbols;
    int alphabet = 0;

    OutcomeString(std::vector<int> s, int d) : symbols(std::move(s)), alphabet(d) {
        if (static_cast<int>(symbols.size()) < 1 || static_cast<int>(symbols.size()) > kMaxCopies)
            throw std::invalid_argument("OutcomeString: length must be in [1,6]");
        for (int x : symbols)
            if (x < 0 || x >= d) throw std::invalid_argument("OutcomeString: symbol out of range");
    }

    int length() const { return static_cast<int>(symbols.size()); }
};

struct StringClass {
    Permutation omega;  // canonical collision permutation (increasing within cycles)
    Partition lambda;   // its cycle type
};

/// omega(s): indices carrying equal symbols form one cycle, written in increasing
/// order; lambda(s) is the resulting cycle type.
inline StringClass string_class(const OutcomeString& s) {
    const int t = s.length();
    Permutation om = Permutation::identity(t);
    std::vector<int> lens;
    std::array<bool, kMaxCopies> used{};
    for (int i = 0; i < t; ++i) {
        if (used[i]) continue;
        std::vector<int> grp;
        for (int j = i; j < t; ++j)
            if (!used[j] && s.symbols[j] == s.symbols[i]) {
                used[j] = true;
                grp.push_back(j);
            }
        for (std::size_t k = 0; k < grp.size(); ++k)
            om.map[grp[k]] = static_cast<std::uint8_t>(grp[(k + 1) % grp.size()]);
        lens.push_back(static_cast<int>(grp.size()));
    }
    return {om, Partition(std::move(lens))};
}

/// Largest collision multiplicity; the paper's wt for 3-symbol strings.
inline int weight_of(const int* s, int n) {
    int best = 1;
    for (int i = 0; i < n; ++i) {
        int c = 0;
        for (int j = 0; j < n; ++j) c += (s[j] == s[i]);
        best = std::max(best, c);
    }
    return best;
}

/// True iff the cycle sets of pi refine the cycle sets of omega; equivalently
/// <s|W_pi|s> = 1 for any s with collision pattern omega.
inline bool embeds(const Permutation& pi, const Permutation& omega) {
    if (pi.size != omega.size) throw std::invalid_argument("embeds: size mismatch");
    std::array<int, kMaxCopies> label{};
    label.fill(-1);
    int next = 0;
    for (int i = 0; i < omega.size; ++i) {
        if (label[i] >= 0) continue;
        int j = i;
        while (label[j] < 0) {
            label[j] = next;
            j = omega.map[j];
        }
        ++next;
    }
    for (int i = 0; i < pi.size; ++i)
        if (label[i] != label[pi.map[i]]) return false;
    return true;
}

/// <s|W_pi|s> in {0,1}.
inline int matrix_element(const Permutation& pi, const OutcomeString& s) {
    if (pi.size != s.length()) throw std::invalid_argument("matrix_element: size mismatch");
    for (int i = 0; i < pi.size; ++i)
        if (s.symbols[i] != s.symbols[pi.map[i]]) return 0;
    return 1;
}

/// gamma_{xi,lambda}: number of pi of type xi embeddable into a fixed sigma of type
/// lambda. Brute-force count; representative independence is a tested property.
inline std::int64_t embedding_constant(const Partition& xi, const Partition& lam) {
    if (xi.total() != lam.total()) throw std::invalid_argument("embedding_constant: size mismatch");
    const int t = xi.total();
    const PermGroup& g = PermGroup::get(t);
    const Permutation& rep = g.class_rep(g.class_of_partition(lam));
    int xi_class = g.class_of_partition(xi);
    std::int64_t n = 0;
    for (int i = 0; i < g.order(); ++i)
        if (g.class_of(i) == xi_class && embeds(g.elements()[i], rep)) ++n;
    return n;
}

/// T_lambda = prod (lambda_i)! = sum_pi <a|W_pi|a> for any a of class lambda.
inline std::int64_t symmetry_factor(const Partition& lam) {
    std::int64_t v = 1;
    for (int x : lam.parts) v *= factorial(x);
    return v;
}

/// Block assignments (restricted growth strings) for set partitions of n items,
/// n <= 6. assignment[i] = block id of item i, blocks numbered by first appearance.
inline const std::vector<std::vector<std::uint8_t>>& set_partitions(int n) {
    static const auto tables = [] {
        std::array<std::vector<std::vector<std::uint8_t>>, kMaxCopies + 1> all;
        for (int m = 1; m <= kMaxCopies; ++m) {
            std::vector<std::uint8_t> cur;
            auto rec = [&](auto&& self, int i, int mx) -> void {
                if (i == m) {
                    all[m].push_back(cur);
                    return;
                }
                for (int b = 0; b <= mx; ++b) {
                    cur.push_back(static_cast<std::uint8_t>(b));
                    self(self, i + 1, mx + (b == mx ? 1 : 0));
                    cur.pop_back();
                }
            };
            rec(rec, 0, 0);
        }
        return all;
    }();
    if (n < 1 || n > kMaxCopies) throw std::invalid_argument("set_partitions: n must be in [1,6]");
    return tables[n];
}

/// Rows xi, columns lambda, both in ascending order ((1,...,1) first). RFC-4180,
/// no quoting needed with '+'-joined partition labels.
inline std::string gamma_table_csv(int t) {
    auto parts = partitions_of(t);
    std::reverse(parts.begin(), parts.end());
    std::ostringstream os;
    os << "xi";
    for (const auto& lam : parts) os << ',' << lam.str();
    os << "\r\n";
    for (const auto& xi : parts) {
        os << xi.str();
        for (const auto& lam : parts) os << ',' << embedding_constant(xi, lam);
        os << "\r\n";
    }
    return os.str();
}

}  // namespace negmom
