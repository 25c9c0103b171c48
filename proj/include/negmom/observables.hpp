#pragma once

// Post-processing observables: the third-moment observable O_+ (single, global,
// and bilocal product forms), the total-correlation pair (O_A, O_B), the
// Bell-basis observable O_-- obtained by solving the 4x4 coefficient systems,
// the Heisenberg-Weyl/Bell machinery behind it, and the no-go witness for
// bilocal computational-basis estimation of the negativity moment.

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "negmom/state.hpp"
#include "negmom/weingarten.hpp"

namespace negmom {

// ---- diagonal observables ----------------------------------------------------

/// Diagonal observable on t copies whose coefficient depends only on the
/// collision pattern of the outcome string(s); evaluated exactly as big
/// integers. Bipartite kinds take the A-string and B-string separately.
class DiagonalObservable {
public:
    enum class Kind {
        OPlus,         // single system, t=3, coefficient 1 + (-d)^{wt-1}
        OPlusGlobal,   // bipartite, t=3, O_+ on the joint symbol (a,b)
        OPlusProduct,  // bipartite, t=3, O_+(a) * O_+(b)
        OCorrA,        // single, t=3, (d+1) delta_{a1,a2} - 1  (twirls to W_(1,2))
        OCorrB,        // single, t=3, (d+1) delta_{b2,b3} - 1  (twirls to W_(2,3))
        OCorrProduct,  // bipartite, t=3, OCorrA(a) * OCorrB(b)
        AllOnes,       // identity operator, any t
        Q3,            // single, t=3, O_+^2
        Q4,            // single, t=4, O_+(a1 a2 a3) O_+(a1 a2 a4)
        Q5,            // single, t=5, O_+(a1 a2 a3) O_+(a1 a4 a5)
        Q6,            // single, t=6, O_+(a1 a2 a3) O_+(a4 a5 a6)
    };

    DiagonalObservable(Kind kind, int copies, int da, int db)
        : kind_(kind), copies_(copies), da_(da), db_(db) {}

    Kind kind() const { return kind_; }
    int copies() const { return copies_; }
    bool bipartite() const { return db_ > 0; }
    int dim_a() const { return da_; }
    int dim_b() const { return db_; }

    /// wt -> coefficient 1 + (-d)^{wt-1} for a 3-symbol weight.
    static std::int64_t o_plus_weight(int wt, std::int64_t d) {
        if (wt == 1) return 2;
        if (wt == 2) return 1 - d;
        return 1 + d * d;
    }

    BigInt coeff(const int* a, const int* b = nullptr) const {
        switch (kind_) {
            case Kind::OPlus:
                return o_plus_weight(weight_of(a, 3), da_);
            case Kind::OPlusGlobal: {
                // weight of the joint symbols c_k = (a_k, b_k)
                int joint[3];
                for (int k = 0; k < 3; ++k) joint[k] = a[k] * db_ + b[k];
                return o_plus_weight(weight_of(joint, 3),
                                     static_cast<std::int64_t>(da_) * db_);
            }
            case Kind::OPlusProduct:
                return BigInt(o_plus_weight(weight_of(a, 3), da_)) *
                       BigInt(o_plus_weight(weight_of(b, 3), db_));
            case Kind::OCorrA:
                return (a[0] == a[1]) ? BigInt(da_) : BigInt(-1);
            case Kind::OCorrB:
                return (a[1] == a[2]) ? BigInt(da_) : BigInt(-1);
            case Kind::OCorrProduct: {
                const std::int64_t ca = (a[0] == a[1]) ? da_ : -1;
                const std::int64_t cb = (b[1] == b[2]) ? db_ : -1;
                return BigInt(ca) * BigInt(cb);
            }
            case Kind::AllOnes:
                return 1;
            case Kind::Q3: {
                const std::int64_t c = o_plus_weight(weight_of(a, 3), da_);
                return BigInt(c) * BigInt(c);
            }
            case Kind::Q4: {
                const int s2[3] = {a[0], a[1], a[3]};
                return BigInt(o_plus_weight(weight_of(a, 3), da_)) *
                       BigInt(o_plus_weight(weight_of(s2, 3), da_));
            }
            case Kind::Q5: {
                const int s2[3] = {a[0], a[3], a[4]};
                return BigInt(o_plus_weight(weight_of(a, 3), da_)) *
                       BigInt(o_plus_weight(weight_of(s2, 3), da_));
            }
            case Kind::Q6: {
                const int s2[3] = {a[3], a[4], a[5]};
                return BigInt(o_plus_weight(weight_of(a, 3), da_)) *
                       BigInt(o_plus_weight(weight_of(s2, 3), da_));
            }
        }
        return 0;
    }

    double coeffd(const int* a, const int* b = nullptr) const {
        return coeff(a, b).convert_to<double>();
    }

private:
    Kind kind_;
    int copies_;
    int da_, db_;
};

inline DiagonalObservable o_plus(int d) {
    if (d < 2) throw std::invalid_argument("o_plus: d must be >= 2");
    return {DiagonalObservable::Kind::OPlus, 3, d, 0};
}

inline DiagonalObservable o_plus_global(int da, int db) {
    if (da < 2 || db < 2) throw std::invalid_argument("o_plus_global: dims must be >= 2");
    return {DiagonalObservable::Kind::OPlusGlobal, 3, da, db};
}

inline DiagonalObservable o_plus_product(int da, int db) {
    if (da < 2 || db < 2) throw std::invalid_argument("o_plus_product: dims must be >= 2");
    return {DiagonalObservable::Kind::OPlusProduct, 3, da, db};
}

/// O_A(a) = (d_A+1) delta_{a1,a2} - 1 and O_B(b) = (d_B+1) delta_{b2,b3} - 1,
/// so that Phi3_A(O_A) = W_(1,2) and Phi3_B(O_B) = W_(2,3) exactly.
inline DiagonalObservable o_corr(int da, int db) {
    if (da < 2 || db < 2) throw std::invalid_argument("o_corr: dims must be >= 2");
    return {DiagonalObservable::Kind::OCorrProduct, 3, da, db};
}

inline DiagonalObservable variance_kernel(int which, int d) {
    switch (which) {
        case 3: return {DiagonalObservable::Kind::Q3, 3, d, 0};
        case 4: return {DiagonalObservable::Kind::Q4, 4, d, 0};
        case 5: return {DiagonalObservable::Kind::Q5, 5, d, 0};
        case 6: return {DiagonalObservable::Kind::Q6, 6, d, 0};
    }
    throw std::invalid_argument("variance_kernel: which must be 3..6");
}

namespace detail {

inline BigInt falling_factorial(std::int64_t d, int k) {
    BigInt v = 1;
    for (int i = 0; i < k; ++i) v *= BigInt(d - i);
    return v;
}

}  // namespace detail

/// Exact Tr[W_pi O] for a single-system diagonal observable: strings with
/// <a|W_pi|a> = 1 are those constant on the cycles of pi, enumerated by set
/// partitions of the cycles (merged cycles share a symbol).
inline BigInt trace_with_permutation(const DiagonalObservable& obs, const Permutation& pi) {
    if (obs.bipartite()) throw std::invalid_argument("trace_with_permutation: bipartite observable");
    const int t = obs.copies();
    if (pi.size != t) throw std::invalid_argument("trace_with_permutation: size mismatch");
    const auto cyc = cycles_of(pi);
    const int nc = static_cast<int>(cyc.size());
    BigInt total = 0;
    int a[kMaxCopies];
    for (const auto& assign : set_partitions(nc)) {
        int blocks = 0;
        for (auto v : assign) blocks = std::max(blocks, static_cast<int>(v) + 1);
        const BigInt mult = detail::falling_factorial(obs.dim_a(), blocks);
        if (mult == 0) continue;
        for (int c = 0; c < nc; ++c)
            for (int i : cyc[c]) a[i] = assign[c];
        total += mult * obs.coeff(a);
    }
    return total;
}

/// Exact Tr[(W_piA ot W_piB) O] for a bipartite diagonal observable.
inline BigInt trace_with_permutations(const DiagonalObservable& obs, const Permutation& pa,
                                      const Permutation& pb) {
    if (!obs.bipartite()) throw std::invalid_argument("trace_with_permutations: single observable");
    const int t = obs.copies();
    if (pa.size != t || pb.size != t)
        throw std::invalid_argument("trace_with_permutations: size mismatch");
    const auto ca = cycles_of(pa), cb = cycles_of(pb);
    const int na = static_cast<int>(ca.size()), nb = static_cast<int>(cb.size());
    BigInt total = 0;
    int a[kMaxCopies], b[kMaxCopies];
    for (const auto& pa_assign : set_partitions(na)) {
        int blocks_a = 0;
        for (auto v : pa_assign) blocks_a = std::max(blocks_a, static_cast<int>(v) + 1);
        const BigInt mult_a = detail::falling_factorial(obs.dim_a(), blocks_a);
        if (mult_a == 0) continue;
        for (int c = 0; c < na; ++c)
            for (int i : ca[c]) a[i] = pa_assign[c];
        for (const auto& pb_assign : set_partitions(nb)) {
            int blocks_b = 0;
            for (auto v : pb_assign) blocks_b = std::max(blocks_b, static_cast<int>(v) + 1);
            const BigInt mult_b = detail::falling_factorial(obs.dim_b(), blocks_b);
            if (mult_b == 0) continue;
            for (int c = 0; c < nb; ++c)
                for (int i : cb[c]) b[i] = pb_assign[c];
            total += mult_a * mult_b * obs.coeff(a, b);
        }
    }
    return total;
}

/// Twirl of a single-system diagonal observable, using class counting for the
/// traces (never enumerating d^t strings).
inline PermutationCombination twirl_diagonal(const DiagonalObservable& obs,
                                             const WeingartenTable& table) {
    const PermGroup& g = table.group();
    std::vector<BigRat> q(g.order());
    for (int i = 0; i < g.order(); ++i)
        q[i] = BigRat(trace_with_permutation(obs, g.elements()[i]));
    return table.twirl_from_traces(q);
}

/// Coefficients c_{sA,sB} of the bilocal twirl (PhiA ot PhiB)(O) on
/// W_{sA}^A ot W_{sB}^B.
struct BipartiteCombination {
    int t = 3;
    std::vector<std::vector<BigRat>> coeff;  // [sigmaA][sigmaB]

    static BipartiteCombination zero(int t) {
        BipartiteCombination c;
        c.t = t;
        const auto n = static_cast<std::size_t>(factorial(t));
        c.coeff.assign(n, std::vector<BigRat>(n, BigRat(0)));
        return c;
    }

    double expectation(const DensityMatrix& rho, long cap = 4096) const {
        const PermGroup& g = PermGroup::get(t);
        const bool pure = moment(rho, 2) > 1.0 - 1e-10;
        std::vector<double> schmidt;
        if (pure) schmidt = schmidt_probabilities(rho);
        double v = 0.0;
        for (int i = 0; i < g.order(); ++i)
            for (int j = 0; j < g.order(); ++j) {
                if (coeff[i][j] == 0) continue;
                const double e =
                    pure ? permutation_expectation_pure(schmidt, g.elements()[i], g.elements()[j])
                         : permutation_expectation_dense(rho, g.elements()[i], g.elements()[j], cap);
                v += to_double(coeff[i][j]) * e;
            }
        return v;
    }

    /// Inner products Tr[. (W_piA ot W_piB)], flattened piA-major.
    std::vector<double> inner_products(int da, int db) const {
        const PermGroup& g = PermGroup::get(t);
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(g.order()) * g.order());
        for (int pa = 0; pa < g.order(); ++pa)
            for (int pb = 0; pb < g.order(); ++pb) {
                BigRat acc = 0;
                for (int sa = 0; sa < g.order(); ++sa)
                    for (int sb = 0; sb < g.order(); ++sb) {
                        if (coeff[sa][sb] == 0) continue;
                        const int ca = static_cast<int>(
                            g.classes()[g.product_class(sa, pa)].parts.size());
                        const int cb = static_cast<int>(
                            g.classes()[g.product_class(sb, pb)].parts.size());
                        acc += coeff[sa][sb] * BigRat(int_pow(da, ca) * int_pow(db, cb));
                    }
                out.push_back(to_double(acc));
            }
        return out;
    }
};

inline BipartiteCombination twirl_diagonal_bilocal(const DiagonalObservable& obs,
                                                   const WeingartenTable& ta,
                                                   const WeingartenTable& tb) {
    const PermGroup& g = ta.group();
    const int n = g.order();
    std::vector<std::vector<BigRat>> q(n, std::vector<BigRat>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            q[i][j] = BigRat(trace_with_permutations(obs, g.elements()[i], g.elements()[j]));
    BipartiteCombination out = BipartiteCombination::zero(obs.copies());
    for (int sa = 0; sa < n; ++sa)
        for (int sb = 0; sb < n; ++sb) {
            BigRat acc = 0;
            for (int pa = 0; pa < n; ++pa) {
                const BigRat& ga = ta.wg_class()[g.product_class(pa, sa)];
                if (ga == 0) continue;
                for (int pb = 0; pb < n; ++pb) {
                    if (q[pa][pb] == 0) continue;
                    acc += ga * tb.wg_class()[g.product_class(pb, sb)] * q[pa][pb];
                }
            }
            out.coeff[sa][sb] = acc;
        }
    return out;
}

// ---- permutation-combination targets -----------------------------------------

inline Permutation w_cycle_123() { return Permutation::from_cycles(3, {{1, 2, 3}}); }
inline Permutation w_cycle_132() { return Permutation::from_cycles(3, {{1, 3, 2}}); }

/// M_+ = W_(123) + W_(132).
inline PermutationCombination m_plus_target() {
    PermutationCombination c = PermutationCombination::zero(3);
    c.at(w_cycle_123()) = 1;
    c.at(w_cycle_132()) = 1;
    return c;
}

inline PermutationCombination single_w_target(const Permutation& p) {
    return PermutationCombination::single(p);
}

enum class BipartiteTargetKind {
    MPlusPlus,    // M_+^A ot M_+^B
    MMinusMinus,  // M_-^A ot M_-^B
    MNeg,         // W0 ot W1 + W1 ot W0 (no 1/2)
    MCorr,        // W_(12)^A ot W_(23)^B
};

inline BipartiteCombination bipartite_target(BipartiteTargetKind kind) {
    BipartiteCombination c = BipartiteCombination::zero(3);
    const PermGroup& g = PermGroup::get(3);
    const int w0 = g.index_of(w_cycle_123());
    const int w1 = g.index_of(w_cycle_132());
    switch (kind) {
        case BipartiteTargetKind::MPlusPlus:
            c.coeff[w0][w0] = c.coeff[w0][w1] = c.coeff[w1][w0] = c.coeff[w1][w1] = 1;
            break;
        case BipartiteTargetKind::MMinusMinus:
            c.coeff[w0][w0] = c.coeff[w1][w1] = 1;
            c.coeff[w0][w1] = c.coeff[w1][w0] = -1;
            break;
        case BipartiteTargetKind::MNeg:
            c.coeff[w0][w1] = c.coeff[w1][w0] = 1;
            break;
        case BipartiteTargetKind::MCorr:
            c.coeff[g.index_of(Permutation::from_cycles(3, {{1, 2}}))]
                   [g.index_of(Permutation::from_cycles(3, {{2, 3}}))] = 1;
            break;
    }
    return c;
}

// ---- Heisenberg-Weyl / Bell machinery -----------------------------------------

/// P(u,v) = X^u Z^v.
inline MatrixXcd heisenberg_weyl(int d, int u, int v) {
    if (u < 0 || u >= d || v < 0 || v >= d)
        throw std::invalid_argument("heisenberg_weyl: label out of range");
    MatrixXcd m = MatrixXcd::Zero(d, d);
    for (int l = 0; l < d; ++l)
        m((l + u) % d, l) = std::polar(1.0, 2.0 * 3.14159265358979323846 * v * l / d);
    return m;
}

/// |Psi_{u,v}><Psi_{u,v}| as a state (see bell_label_vector).
inline DensityMatrix bell_label_state(int d, int u, int v) {
    const VectorXcd psi = bell_label_vector(d, u, v);
    return DensityMatrix(psi * psi.adjoint(), {{d, d}});
}

/// Phase-tracked Heisenberg-Weyl word: exp(2 pi i phase/d) X^u Z^v.
struct HWWord {
    int d, u, v, phase;

    static HWWord one(int d) { return {d, 0, 0, 0}; }
    static HWWord p(int d, int u, int v) { return {d, ((u % d) + d) % d, ((v % d) + d) % d, 0}; }

    HWWord mul(const HWWord& o) const {
        // P(u,v) P(u',v') = exp(2 pi i u' v / d) P(u+u', v+v')
        return {d, (u + o.u) % d, (v + o.v) % d, ((phase + o.phase + o.u * v) % d + d) % d};
    }
    HWWord dag() const { return {d, (d - u) % d, (d - v) % d, ((-phase + u * v) % d + d) % d}; }
    std::complex<double> trace() const {
        if (u != 0 || v != 0) return 0.0;
        return std::polar(static_cast<double>(d), 2.0 * 3.14159265358979323846 * phase / d);
    }
};

struct BellClass {
    int wt;     // number of coinciding (u,v) pairs in {1,2,3}
    int theta;  // rotation angle mod d (0 when wt >= 2)
};

inline BellClass bell_class(const std::array<int, 3>& u, const std::array<int, 3>& v, int d) {
    int wt = 1;
    for (int i = 0; i < 3; ++i) {
        int c = 0;
        for (int j = 0; j < 3; ++j) c += (u[j] == u[i] && v[j] == v[i]);
        wt = std::max(wt, c);
    }
    if (wt >= 2) return {wt, 0};
    int th = (u[0] * v[1] + u[1] * v[2] + u[2] * v[0]) - (u[0] * v[2] + u[1] * v[0] + u[2] * v[1]);
    th = ((th % d) + d) % d;
    return {1, th};
}

/// phi(u,v;piA,piB) = Tr[(Psi_{u1,v1} ot Psi_{u2,v2} ot Psi_{u3,v3})(W_piA^A ot W_piB^B)],
/// via the cycle contraction of P_i^dag P_{sigma(i)} words. Exact up to one
/// complex exponential per cycle.
inline std::complex<double> bell_projection_phi(int d, const std::array<int, 3>& u,
                                                const std::array<int, 3>& v, const Permutation& pa,
                                                const Permutation& pb) {
    const Permutation& sigma = pb;
    const Permutation beta = compose(sigma, inverse(pa));
    std::array<HWWord, 3> m{HWWord::one(d), HWWord::one(d), HWWord::one(d)};
    for (int i = 0; i < 3; ++i)
        m[i] = HWWord::p(d, u[i], v[i]).dag().mul(HWWord::p(d, u[sigma.map[i]], v[sigma.map[i]]));
    std::complex<double> val = 1.0;
    for (const auto& c : cycles_of(beta)) {
        HWWord prod = m[c[0]];
        for (int j = beta.map[c[0]]; j != c[0]; j = beta.map[j]) prod = prod.mul(m[j]);
        val *= prod.trace();
    }
    return val / (static_cast<double>(d) * d * d);
}

/// Bell-basis observable O--: coefficient per Bell-label triple through
/// (wt, theta), with the four Q values solved from the coefficient systems.
/// Even d uses exact rational elimination; odd d carries one trigonometric
/// entry and is solved in long double.
class BellObservable {
public:
    explicit BellObservable(int d) : d_(d) {
        if (d < 2) throw std::invalid_argument("BellObservable: d must be >= 2");
        count_classes();
        solve_q();
        build_coeffs();
    }

    int d() const { return d_; }
    double q(int which_wt, int theta) const {  // Q(wt,theta) as solved
        if (which_wt == 3) return q30_;
        if (which_wt == 2) return q20_;
        return theta == 0 ? q10_ : q1h_;
    }

    /// n(wt,theta): number of label triples in the class.
    std::int64_t class_count(int wt, int theta) const {
        auto it = n_.find({wt, theta});
        return it == n_.end() ? 0 : it->second;
    }

    double coeff(const std::array<int, 3>& u, const std::array<int, 3>& v) const {
        const BellClass c = bell_class(u, v, d_);
        return coeff_class(c.wt, c.theta);
    }

    double coeff_class(int wt, int theta) const {
        if (wt == 3) return o3_;
        if (wt == 2) return o2_;
        return o1_[theta];
    }

    /// Tr[O-- (W_piA^A ot W_piB^B)] by summing phi over all d^6 label triples.
    double inner_product(const Permutation& pa, const Permutation& pb) const {
        long double acc = 0.0L;
        std::array<int, 3> u{}, v{};
        for (u[0] = 0; u[0] < d_; ++u[0])
            for (v[0] = 0; v[0] < d_; ++v[0])
                for (u[1] = 0; u[1] < d_; ++u[1])
                    for (v[1] = 0; v[1] < d_; ++v[1])
                        for (u[2] = 0; u[2] < d_; ++u[2])
                            for (v[2] = 0; v[2] < d_; ++v[2]) {
                                const double c = coeff(u, v);
                                if (c == 0.0) continue;
                                acc += static_cast<long double>(
                                    c * bell_projection_phi(d_, u, v, pa, pb).real());
                            }
        return static_cast<double>(acc);
    }

    std::vector<double> inner_products() const {
        const PermGroup& g = PermGroup::get(3);
        std::vector<double> out;
        for (int i = 0; i < g.order(); ++i)
            for (int j = 0; j < g.order(); ++j)
                out.push_back(inner_product(g.elements()[i], g.elements()[j]));
        return out;
    }

    /// Dense matrix on ((C^d ot C^d))^{ot 3}; for small-d oracles only.
    MatrixXcd dense(long cap = 4096) const {
        const long D = static_cast<long>(d_) * d_;
        long dim = 1;
        for (int k = 0; k < 3; ++k) {
            dim *= D;
            if (dim > cap) throw std::invalid_argument("BellObservable::dense: exceeds cap");
        }
        MatrixXcd out = MatrixXcd::Zero(dim, dim);
        std::array<int, 3> u{}, v{};
        for (u[0] = 0; u[0] < d_; ++u[0])
            for (v[0] = 0; v[0] < d_; ++v[0])
                for (u[1] = 0; u[1] < d_; ++u[1])
                    for (v[1] = 0; v[1] < d_; ++v[1])
                        for (u[2] = 0; u[2] < d_; ++u[2])
                            for (v[2] = 0; v[2] < d_; ++v[2]) {
                                const double c = coeff(u, v);
                                if (c == 0.0) continue;
                                VectorXcd psi = VectorXcd::Zero(dim);
                                const VectorXcd p0 = bell_label_vector(d_, u[0], v[0]);
                                const VectorXcd p1 = bell_label_vector(d_, u[1], v[1]);
                                const VectorXcd p2 = bell_label_vector(d_, u[2], v[2]);
                                for (long i = 0; i < D; ++i)
                                    for (long j = 0; j < D; ++j)
                                        for (long k = 0; k < D; ++k)
                                            psi(i * D * D + j * D + k) = p0(i) * p1(j) * p2(k);
                                out += c * (psi * psi.adjoint());
                            }
        return out;
    }

private:
    void count_classes() {
        std::array<int, 3> u{}, v{};
        for (u[0] = 0; u[0] < d_; ++u[0])
            for (v[0] = 0; v[0] < d_; ++v[0])
                for (u[1] = 0; u[1] < d_; ++u[1])
                    for (v[1] = 0; v[1] < d_; ++v[1])
                        for (u[2] = 0; u[2] < d_; ++u[2])
                            for (v[2] = 0; v[2] < d_; ++v[2]) {
                                const BellClass c = bell_class(u, v, d_);
                                ++n_[{c.wt, c.theta}];
                            }
    }

    /// 4x4 system in (Q(1,0), Q(1,d/2), Q(2,0), Q(3,0)); rows are the
    /// independent projection constraints, right-hand side +-d^5 (d^2-1)^2.
    void solve_q() {
        const double d = d_;
        const double rhs3 = std::pow(d, 5) * std::pow(d * d - 1.0, 2);
        double m[4][4] = {{d, d, d, d},
                          {0, 0, d * d / 3.0, d * d},
                          {0, 0, 0, d * d * d},
                          {d, 0, d, d}};
        m[3][1] = (d_ % 2 == 0) ? -d : d * std::cos((d + 1.0) * 3.14159265358979323846 / d);
        double rhs[4] = {0, 0, rhs3, -rhs3};
        // 4x4 Gaussian elimination with partial pivoting
        int perm[4] = {0, 1, 2, 3};
        for (int col = 0; col < 4; ++col) {
            int piv = col;
            for (int r = col + 1; r < 4; ++r)
                if (std::abs(m[perm[r]][col]) > std::abs(m[perm[piv]][col])) piv = r;
            std::swap(perm[col], perm[piv]);
            if (m[perm[col]][col] == 0.0)
                throw std::runtime_error("BellObservable: singular coefficient system");
            for (int r = col + 1; r < 4; ++r) {
                const double f = m[perm[r]][col] / m[perm[col]][col];
                for (int c = col; c < 4; ++c) m[perm[r]][c] -= f * m[perm[col]][c];
                rhs[perm[r]] -= f * rhs[perm[col]];
            }
        }
        double x[4];
        for (int col = 3; col >= 0; --col) {
            double acc = rhs[perm[col]];
            for (int c = col + 1; c < 4; ++c) acc -= m[perm[col]][c] * x[c];
            x[col] = acc / m[perm[col]][col];
        }
        q10_ = x[0];
        q1h_ = x[1];
        q20_ = x[2];
        q30_ = x[3];
    }

    void build_coeffs() {
        o3_ = q30_ / static_cast<double>(n_.at({3, 0}));
        o2_ = q20_ / static_cast<double>(n_.at({2, 0}));
        o1_.assign(d_, 0.0);
        if (auto it = n_.find({1, 0}); it != n_.end() && it->second > 0)
            o1_[0] = q10_ / static_cast<double>(it->second);
        if (d_ % 2 == 0) {
            o1_[d_ / 2] = q1h_ / static_cast<double>(n_.at({1, d_ / 2}));
        } else {
            const int hi = (d_ + 1) / 2, lo = (d_ - 1) / 2;
            o1_[hi] = q1h_ / (2.0 * static_cast<double>(n_.at({1, hi})));
            o1_[lo] = q1h_ / (2.0 * static_cast<double>(n_.at({1, lo})));
        }
    }

    int d_;
    std::map<std::pair<int, int>, std::int64_t> n_;
    double q10_ = 0, q1h_ = 0, q20_ = 0, q30_ = 0;
    double o3_ = 0, o2_ = 0;
    std::vector<double> o1_;
};

inline BellObservable o_minus_minus(int d) { return BellObservable(d); }

/// Class-feature -> coefficient map plus the solved Q vector, for golden-file
/// regression.
inline nlohmann::json bell_observable_json(const BellObservable& obs) {
    nlohmann::json j;
    const int d = obs.d();
    j["d"] = d;
    j["q"] = {{"q_3_0", obs.q(3, 0)},
              {"q_2_0", obs.q(2, 0)},
              {"q_1_0", obs.q(1, 0)},
              {"q_1_half", obs.q(1, 1)}};
    auto& coeff = j["coeff"] = nlohmann::json::object();
    coeff["wt3"] = obs.coeff_class(3, 0);
    coeff["wt2"] = obs.coeff_class(2, 0);
    auto& wt1 = coeff["wt1_by_theta"] = nlohmann::json::array();
    for (int th = 0; th < d; ++th) wt1.push_back(obs.coeff_class(1, th));
    auto& counts = j["class_counts"] = nlohmann::json::object();
    counts["n_3_0"] = obs.class_count(3, 0);
    counts["n_2_0"] = obs.class_count(2, 0);
    auto& n1 = counts["n_1_by_theta"] = nlohmann::json::array();
    for (int th = 0; th < d; ++th) n1.push_back(obs.class_count(1, th));
    return j;
}

/// Coefficient map of a weight-class diagonal observable (3 copies).
inline nlohmann::json diagonal_observable_json(const DiagonalObservable& obs) {
    if (obs.copies() != 3)
        throw std::invalid_argument("diagonal_observable_json: 3-copy observables only");
    nlohmann::json j;
    j["copies"] = 3;
    j["d_a"] = obs.dim_a();
    if (obs.bipartite()) j["d_b"] = obs.dim_b();
    auto& by_pattern = j["coeff_by_pattern"] = nlohmann::json::object();
    // enumerate collision patterns of the (pair of) 3-strings via small reps
    const int reps[5][3] = {{0, 1, 2}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {0, 0, 0}};
    const char* names[5] = {"abc", "aab", "aba", "baa", "aaa"};
    if (!obs.bipartite()) {
        for (int r = 0; r < 5; ++r)
            by_pattern[names[r]] = obs.coeff(reps[r]).convert_to<double>();
    } else {
        for (int ra = 0; ra < 5; ++ra)
            for (int rb = 0; rb < 5; ++rb)
                by_pattern[std::string(names[ra]) + "|" + names[rb]] =
                    obs.coeff(reps[ra], reps[rb]).convert_to<double>();
    }
    return j;
}

// ---- no-go witness -------------------------------------------------------------

namespace detail {

inline void decode_triple(int idx, int d, std::vector<int>& sym) {
    for (int k = 2; k >= 0; --k) {
        sym[k] = idx % d;
        idx /= d;
    }
}

}  // namespace detail

struct NogoReport {
    int d = 0;
    double target_00 = 0;    // Tr[M_neg (W0 ot W0)] = 2 d^4
    double target_01 = 0;    // Tr[M_neg (W0 ot W1)] = d^2 + d^6
    double gap = 0;          // their difference
    double max_diag_diff = 0;  // max over sampled diagonal O of the same two inner products
};

/// Exhibits the obstruction: M_neg separates (W0,W0) from (W0,W1) while every
/// computational-basis diagonal observable cannot.
inline NogoReport nogo_witness(int d, int samples = 50, std::uint64_t seed = 12345) {
    NogoReport rep;
    rep.d = d;
    const Permutation w0 = w_cycle_123(), w1 = w_cycle_132();
    auto tr_ww = [&](const Permutation& x, const Permutation& y) {
        return std::pow(static_cast<double>(d), cycle_count(compose(x, y)));
    };
    rep.target_00 = tr_ww(w0, w0) * tr_ww(w1, w0) + tr_ww(w1, w0) * tr_ww(w0, w0);
    rep.target_01 = tr_ww(w0, w0) * tr_ww(w1, w1) + tr_ww(w1, w0) * tr_ww(w0, w1);
    rep.gap = std::abs(rep.target_01 - rep.target_00);

    Rng rng(seed);
    const int n3 = d * d * d;
    std::vector<int> sym(3);
    for (int s = 0; s < samples; ++s) {
        // random diagonal O(a,b) evaluated against both permutation pairs
        std::vector<double> coeff(static_cast<std::size_t>(n3) * n3);
        for (auto& c : coeff) c = rng.gauss();
        double t00 = 0, t01 = 0;
        for (int ia = 0; ia < n3; ++ia) {
            detail::decode_triple(ia, d, sym);
            OutcomeString sa(sym, d);
            if (!matrix_element(w0, sa)) continue;
            for (int ib = 0; ib < n3; ++ib) {
                detail::decode_triple(ib, d, sym);
                OutcomeString sb(sym, d);
                const double c = coeff[static_cast<std::size_t>(ia) * n3 + ib];
                if (matrix_element(w0, sb)) t00 += c;
                if (matrix_element(w1, sb)) t01 += c;
            }
        }
        rep.max_diag_diff = std::max(rep.max_diag_diff, std::abs(t00 - t01));
    }
    return rep;
}

}  // namespace negmom
