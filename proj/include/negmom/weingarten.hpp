#pragma once

// Exact Weingarten calculus for t <= 6 copies. The Weingarten matrix entry
// C_{pi,sigma} depends on pi,sigma only through the conjugacy class of
// pi*sigma, so the whole table reduces to one rational per class. That class
// function is obtained inside the (<= 11)-dimensional centre of the group
// algebra: multiplication by the Gram element z_Q = sum_tau d^{#cycles(tau)} tau
// is a small exact-rational matrix there, and the (pseudo-)inverse of z_Q is a
// polynomial in z_Q, which also covers the singular d < t case.

#include <complex>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include <Eigen/Dense>

#include <json.hpp>

#include "negmom/permutation.hpp"

namespace negmom {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline double to_double(const BigRat& r) { return r.convert_to<double>(); }

inline BigInt int_pow(std::int64_t base, int exp) {
    BigInt b = base, r = 1;
    for (int i = 0; i < exp; ++i) r *= b;
    return r;
}

namespace detail {

/// Solve A x = b exactly by Gaussian elimination. A is n x n, row-major.
/// Throws if singular.
inline std::vector<BigRat> solve_rational(std::vector<std::vector<BigRat>> a,
                                          std::vector<BigRat> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (a[r][col] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) throw std::runtime_error("solve_rational: singular matrix");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        const BigRat inv = BigRat(1) / a[col][col];
        for (int c = col; c < n; ++c) a[col][c] *= inv;
        b[col] *= inv;
        for (int r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0) continue;
            const BigRat f = a[r][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    return b;
}

}  // namespace detail

/// Sum of c_sigma W_sigma over S_t; coefficients exact rationals indexed by the
/// canonical element order of PermGroup.
struct PermutationCombination {
    int t = 0;
    std::vector<BigRat> coeff;  // size t!

    static PermutationCombination zero(int t) {
        PermutationCombination c;
        c.t = t;
        c.coeff.assign(static_cast<std::size_t>(factorial(t)), BigRat(0));
        return c;
    }

    static PermutationCombination single(const Permutation& p, const BigRat& v = BigRat(1)) {
        PermutationCombination c = zero(p.size);
        c.coeff[PermGroup::get(p.size).index_of(p)] = v;
        return c;
    }

    BigRat& at(const Permutation& p) { return coeff[PermGroup::get(t).index_of(p)]; }
    const BigRat& at(const Permutation& p) const { return coeff[PermGroup::get(t).index_of(p)]; }

    PermutationCombination& operator+=(const PermutationCombination& o) {
        for (std::size_t i = 0; i < coeff.size(); ++i) coeff[i] += o.coeff[i];
        return *this;
    }
    PermutationCombination& operator*=(const BigRat& s) {
        for (auto& c : coeff) c *= s;
        return *this;
    }

    /// Tr[(sum c_sigma W_sigma) rho^{ot t}] from the moment sequence
    /// moments[k] = Tr[rho^k], k = 1..t.
    double expectation_from_moments(const std::vector<double>& moments) const {
        const PermGroup& g = PermGroup::get(t);
        double v = 0.0;
        for (int i = 0; i < g.order(); ++i) {
            if (coeff[i] == 0) continue;
            double w = 1.0;
            for (const auto& c : cycles_of(g.elements()[i])) w *= moments[c.size()];
            v += to_double(coeff[i]) * w;
        }
        return v;
    }

    /// Exact inner products Tr[(sum c_sigma W_sigma) W_pi] = sum c_sigma d^{#cycles(sigma pi)}.
    std::vector<BigRat> inner_products(int d) const {
        const PermGroup& g = PermGroup::get(t);
        std::vector<BigRat> out(g.order(), BigRat(0));
        for (int p = 0; p < g.order(); ++p) {
            BigRat acc = 0;
            for (int s = 0; s < g.order(); ++s) {
                if (coeff[s] == 0) continue;
                const Partition& ct = g.classes()[g.product_class(s, p)];
                acc += coeff[s] * BigRat(int_pow(d, static_cast<int>(ct.parts.size())));
            }
            out[p] = acc;
        }
        return out;
    }
};

/// Gram matrix Q_{pi,sigma} = d^{#cycles(pi sigma)} and its (pseudo-)inverse C for
/// one (t, d). C is stored as the Weingarten class function; dense matrices are
/// materialised on demand.
class WeingartenTable {
public:
    WeingartenTable(int t, int d) : t_(t), d_(d), group_(&PermGroup::get(t)) {
        if (d < 1) throw std::invalid_argument("WeingartenTable: d must be >= 1");
        build_class_function();
    }

    int t() const { return t_; }
    int d() const { return d_; }
    bool pseudo() const { return d_ < t_; }
    const PermGroup& group() const { return *group_; }

    /// Weingarten class function: wg_class()[c] is C_{pi,sigma} for any pi,sigma
    /// with pi*sigma in class c.
    const std::vector<BigRat>& wg_class() const { return g_; }

    BigInt gram_entry(int i, int j) const {
        const Partition& ct = group_->classes()[group_->product_class(i, j)];
        return int_pow(d_, static_cast<int>(ct.parts.size()));
    }

    const BigRat& wg_entry(int i, int j) const { return g_[group_->product_class(i, j)]; }

    /// Row sum over sigma of C_{pi,sigma}; independent of pi.
    BigRat row_sum() const {
        BigRat s = 0;
        for (int c = 0; c < group_->class_count(); ++c) s += BigRat(group_->class_size(c)) * g_[c];
        return s;
    }

    /// c_sigma = sum_pi C_{pi,sigma} q_pi for a vector of exact traces q_pi = Tr[W_pi O].
    PermutationCombination twirl_from_traces(const std::vector<BigRat>& q) const {
        PermutationCombination out = PermutationCombination::zero(t_);
        const int n = group_->order();
        for (int s = 0; s < n; ++s) {
            BigRat acc = 0;
            for (int p = 0; p < n; ++p) {
                if (q[p] == 0) continue;
                acc += g_[group_->product_class(p, s)] * q[p];
            }
            out.coeff[s] = acc;
        }
        return out;
    }

    /// Verify the Penrose identities inside the class algebra:
    /// z_Q z_C z_Q = z_Q and z_C z_Q z_C = z_C (and z_Q z_C = 1 when d >= t).
    bool penrose_ok() const {
        auto zq = gram_class_vector();
        auto a = algebra_mul(zq, g_);       // z_Q z_C
        auto b = algebra_mul(a, zq);        // z_Q z_C z_Q
        for (int c = 0; c < group_->class_count(); ++c)
            if (b[c] != zq[c]) return false;
        auto e = algebra_mul(a, g_);        // z_Q z_C z_C  (= z_C by commutativity)
        for (int c = 0; c < group_->class_count(); ++c)
            if (e[c] != g_[c]) return false;
        if (!pseudo()) {
            for (int c = 0; c < group_->class_count(); ++c)
                if (a[c] != (c == id_class() ? BigRat(1) : BigRat(0))) return false;
        }
        return true;
    }

    /// Dense twirl Phi(X) = sum_{pi,sigma} C_{pi,sigma} Tr[W_pi X] W_sigma.
    /// Requires X on (C^d)^{ot t}; dim = d^t must not exceed `cap`.
    Eigen::MatrixXcd twirl_dense(const Eigen::MatrixXcd& x, long cap = 4096) const {
        const long dim = dense_dim(cap);
        if (x.rows() != dim || x.cols() != dim)
            throw std::invalid_argument("twirl_dense: operator has wrong dimension");
        const int n = group_->order();
        std::vector<std::complex<double>> q(n);
        for (int p = 0; p < n; ++p) {
            const auto m = slot_map(p);
            std::complex<double> tr = 0;
            for (long i = 0; i < dim; ++i) tr += x(i, m[i]);  // Tr[W_pi X]
            q[p] = tr;
        }
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
        for (int s = 0; s < n; ++s) {
            std::complex<double> c = 0;
            for (int p = 0; p < n; ++p) c += to_double(g_[group_->product_class(p, s)]) * q[p];
            if (c == std::complex<double>(0)) continue;
            const auto m = slot_map(s);
            for (long i = 0; i < dim; ++i) out(m[i], i) += c;
        }
        return out;
    }

    /// Dense W_pi (tests and oracles only).
    Eigen::MatrixXcd permutation_operator(const Permutation& p, long cap = 4096) const {
        const long dim = dense_dim(cap);
        Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(dim, dim);
        const auto m = slot_map(group_->index_of(p));
        for (long i = 0; i < dim; ++i) w(m[i], i) = 1.0;
        return w;
    }

private:
    long dense_dim(long cap) const {
        long dim = 1;
        for (int k = 0; k < t_; ++k) {
            dim *= d_;
            if (dim > cap) throw std::invalid_argument("twirl_dense: d^t exceeds cap");
        }
        return dim;
    }

    /// Composite-index action of W_pi: W_pi |s> = |s o pi>, slot 0 most significant.
    std::vector<long> slot_map(int elem_index) const {
        const Permutation& p = group_->elements()[elem_index];
        long dim = 1;
        for (int k = 0; k < t_; ++k) dim *= d_;
        std::vector<long> m(dim);
        std::array<int, kMaxCopies> s{};
        for (long i = 0; i < dim; ++i) {
            long r = i;
            for (int k = t_ - 1; k >= 0; --k) {
                s[k] = static_cast<int>(r % d_);
                r /= d_;
            }
            long j = 0;
            for (int k = 0; k < t_; ++k) j = j * d_ + s[p.map[k]];
            m[i] = j;
        }
        return m;
    }

    int id_class() const { return group_->class_of(0); }

    std::vector<BigRat> gram_class_vector() const {
        std::vector<BigRat> f(group_->class_count());
        for (int c = 0; c < group_->class_count(); ++c)
            f[c] = BigRat(int_pow(d_, static_cast<int>(group_->classes()[c].parts.size())));
        return f;
    }

    /// Product of two central elements given by class-coefficient vectors:
    /// (z1 z2)(rho) = sum_alpha z1(alpha) z2(alpha^{-1} rho).
    std::vector<BigRat> algebra_mul(const std::vector<BigRat>& z1,
                                    const std::vector<BigRat>& z2) const {
        const int nc = group_->class_count();
        std::vector<BigRat> out(nc, BigRat(0));
        for (int c = 0; c < nc; ++c) {
            const Permutation& rep = group_->class_rep(c);
            BigRat acc = 0;
            for (const auto& alpha : group_->elements()) {
                int pc = group_->class_of(group_->index_of(compose(inverse(alpha), rep)));
                acc += z1[group_->class_of(group_->index_of(alpha))] * z2[pc];
            }
            out[c] = acc;
        }
        return out;
    }

    void build_class_function() {
        const int nc = group_->class_count();
        // L[c][c'] = coefficient matrix of multiplication by z_Q on class functions.
        std::vector<std::vector<BigRat>> L(nc, std::vector<BigRat>(nc, BigRat(0)));
        for (int c = 0; c < nc; ++c) {
            const Permutation& rep = group_->class_rep(c);
            for (const auto& alpha : group_->elements()) {
                int pc = group_->class_of(group_->index_of(compose(inverse(alpha), rep)));
                L[c][pc] += BigRat(int_pow(d_, cycle_count(alpha)));
            }
        }
        std::vector<BigRat> e0(nc, BigRat(0));
        e0[id_class()] = 1;

        if (d_ >= t_) {
            g_ = detail::solve_rational(L, e0);
            return;
        }

        // Pseudo-inverse: z_C = p(z_Q) with p interpolating 1/q on the nonzero
        // spectrum and 0 at 0, built from the minimal polynomial of z_Q.
        auto mul = [&](const std::vector<BigRat>& v) {
            std::vector<BigRat> out(nc, BigRat(0));
            for (int c = 0; c < nc; ++c)
                for (int cp = 0; cp < nc; ++cp)
                    if (v[cp] != 0 && L[c][cp] != 0) out[c] += L[c][cp] * v[cp];
            return out;
        };
        std::vector<std::vector<BigRat>> vs{e0};
        std::vector<BigRat> mono;  // monic minimal polynomial coefficients, low degree first
        for (int k = 1; k <= nc + 1; ++k) {
            vs.push_back(mul(vs.back()));
            // Is vs[k] a combination of vs[0..k-1]?  Solve the overdetermined
            // system column-wise by elimination on the (nc x k) matrix.
            std::vector<std::vector<BigRat>> m(nc, std::vector<BigRat>(k));
            for (int r = 0; r < nc; ++r)
                for (int c = 0; c < k; ++c) m[r][c] = vs[c][r];
            std::vector<BigRat> rhs(nc);
            for (int r = 0; r < nc; ++r) rhs[r] = vs[k][r];
            // Gaussian elimination with column pivoting over rows.
            std::vector<int> pivot_row(k, -1);
            int rank = 0;
            for (int c = 0; c < k && rank < nc; ++c) {
                int pr = -1;
                for (int r = 0; r < nc; ++r) {
                    bool used = false;
                    for (int cc = 0; cc < c; ++cc) used |= (pivot_row[cc] == r);
                    if (!used && m[r][c] != 0) {
                        pr = r;
                        break;
                    }
                }
                if (pr < 0) continue;
                pivot_row[c] = pr;
                const BigRat inv = BigRat(1) / m[pr][c];
                for (int cc = c; cc < k; ++cc) m[pr][cc] *= inv;
                rhs[pr] *= inv;
                for (int r = 0; r < nc; ++r) {
                    if (r == pr || m[r][c] == 0) continue;
                    const BigRat f = m[r][c];
                    for (int cc = c; cc < k; ++cc) m[r][cc] -= f * m[pr][cc];
                    rhs[r] -= f * rhs[pr];
                }
                ++rank;
            }
            // consistent iff rhs vanishes on non-pivot rows
            bool consistent = true;
            for (int r = 0; r < nc; ++r) {
                bool is_pivot = false;
                for (int c = 0; c < k; ++c) is_pivot |= (pivot_row[c] == r);
                if (!is_pivot && rhs[r] != 0) consistent = false;
            }
            if (!consistent) continue;
            std::vector<BigRat> x(k, BigRat(0));
            for (int c = 0; c < k; ++c)
                if (pivot_row[c] >= 0) x[c] = rhs[pivot_row[c]];
            mono.assign(k + 1, BigRat(0));
            for (int c = 0; c < k; ++c) mono[c] = -x[c];
            mono[k] = 1;
            break;
        }
        if (mono.empty()) throw std::runtime_error("WeingartenTable: minimal polynomial not found");
        if (mono[0] != 0) {
            // z_Q invertible after all; solve directly.
            g_ = detail::solve_rational(L, e0);
            return;
        }
        // mono(x) = x * h(x), h(0) != 0 (spectrum of z_Q is simple integers).
        std::vector<BigRat> h(mono.begin() + 1, mono.end());
        const BigRat h0 = h[0];
        // p(x) = -r(x)/h0 with h = h0 + x r;  z_C = p(z_Q) (1 - h(z_Q)/h0).
        std::vector<BigRat> pc(h.size() - 1);
        for (std::size_t j = 0; j < pc.size(); ++j) pc[j] = -h[j + 1] / h0;
        std::vector<BigRat> om(h.size(), BigRat(0));  // 1 - h/h0
        om[0] = 1;
        for (std::size_t j = 0; j < h.size(); ++j) om[j] -= h[j] / h0;
        std::vector<BigRat> prod(pc.size() + om.size() - 1, BigRat(0));
        for (std::size_t i = 0; i < pc.size(); ++i)
            for (std::size_t j = 0; j < om.size(); ++j) prod[i + j] += pc[i] * om[j];
        while (vs.size() < prod.size()) vs.push_back(mul(vs.back()));
        g_.assign(nc, BigRat(0));
        for (std::size_t j = 0; j < prod.size(); ++j) {
            if (prod[j] == 0) continue;
            for (int c = 0; c < nc; ++c) g_[c] += prod[j] * vs[j][c];
        }
    }

    int t_, d_;
    const PermGroup* group_;
    std::vector<BigRat> g_;
};

/// JSON dump of a (t,d) table: exact rationals as numerator/denominator
/// strings, one entry per conjugacy class (the full matrix is
/// C_{pi,sigma} = wg[class(pi sigma)]).
inline nlohmann::json table_json(const WeingartenTable& table) {
    nlohmann::json j;
    j["t"] = table.t();
    j["d"] = table.d();
    j["pseudo"] = table.pseudo();
    auto& classes = j["classes"] = nlohmann::json::array();
    auto& wg = j["wg"] = nlohmann::json::array();
    auto& gram = j["gram"] = nlohmann::json::array();
    const PermGroup& g = table.group();
    for (int c = 0; c < g.class_count(); ++c) {
        classes.push_back(g.classes()[c].str());
        const BigRat& v = table.wg_class()[c];
        wg.push_back({boost::multiprecision::numerator(v).str(),
                      boost::multiprecision::denominator(v).str()});
        gram.push_back(
            int_pow(table.d(), static_cast<int>(g.classes()[c].parts.size())).str());
    }
    const BigRat rs = table.row_sum();
    j["row_sum"] = {boost::multiprecision::numerator(rs).str(),
                    boost::multiprecision::denominator(rs).str()};
    return j;
}

/// Leading 1/d term of the Weingarten function:
/// d^{#cycles(alpha) - 2t} prod_i (-1)^{xi_i - 1} Catalan(xi_i - 1).
inline double wg_asymptotic(const Permutation& alpha, int d) {
    const int t = alpha.size;
    const Partition xi = cycle_type(alpha);
    double v = std::pow(static_cast<double>(d),
                        static_cast<double>(static_cast<int>(xi.parts.size()) - 2 * t));
    for (int part : xi.parts) {
        const int q = part - 1;
        const double cat = static_cast<double>(factorial(2 * q)) /
                           (static_cast<double>(factorial(q)) * static_cast<double>(factorial(q + 1)));
        v *= (q % 2 == 0 ? 1.0 : -1.0) * cat;
    }
    return v;
}

struct ProjectionReport {
    bool pass = false;
    double max_residual = 0.0;
    std::vector<double> residuals;
};

/// Compare two vectors of inner products Tr[O W_...] against a target; the
/// criterion of the twirl-equality test. Tolerance is absolute, scaled by the
/// largest magnitude involved.
inline ProjectionReport projection_criterion(const std::vector<double>& lhs,
                                             const std::vector<double>& rhs,
                                             double tol = 1e-9) {
    if (lhs.size() != rhs.size())
        throw std::invalid_argument("projection_criterion: size mismatch");
    ProjectionReport rep;
    double scale = 1.0;
    for (std::size_t i = 0; i < lhs.size(); ++i)
        scale = std::max({scale, std::abs(lhs[i]), std::abs(rhs[i])});
    rep.residuals.resize(lhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        rep.residuals[i] = std::abs(lhs[i] - rhs[i]);
        rep.max_residual = std::max(rep.max_residual, rep.residuals[i]);
    }
    rep.pass = rep.max_residual <= tol * scale;
    return rep;
}

}  // namespace negmom
