#pragma once

// Qudit density matrices, state factories, Haar sampling, Born-rule
// probabilities, and the exact moment oracles the estimators are checked
// against. Log base for the log-negativity is 2 (conventional in the
// entanglement literature; only this oracle depends on the choice).

#include <cmath>
#include <complex>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

#include "negmom/permutation.hpp"
#include "negmom/random.hpp"

namespace negmom {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Complex = std::complex<double>;

class DensityMatrix {
public:
    /// Validates Hermiticity (1e-12), unit trace (1e-12) and positivity
    /// (eigenvalues >= -1e-10); rejects invalid input at construction.
    explicit DensityMatrix(MatrixXcd m, std::optional<std::pair<int, int>> bipartition = {})
        : m_(std::move(m)), bipartition_(bipartition) {
        if (m_.rows() != m_.cols() || m_.rows() < 1)
            throw std::invalid_argument("DensityMatrix: not square");
        if (bipartition_) {
            auto [da, db] = *bipartition_;
            if (da < 1 || db < 1 || static_cast<long>(da) * db != m_.rows())
                throw std::invalid_argument("DensityMatrix: bipartition does not match dimension");
        }
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("DensityMatrix: not Hermitian");
        if (std::abs(m_.trace().real() - 1.0) > 1e-12 || std::abs(m_.trace().imag()) > 1e-12)
            throw std::invalid_argument("DensityMatrix: trace != 1");
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }

    long dim() const { return m_.rows(); }
    const MatrixXcd& matrix() const { return m_; }
    const std::optional<std::pair<int, int>>& bipartition() const { return bipartition_; }

    std::pair<int, int> dims() const {
        if (!bipartition_) throw std::invalid_argument("DensityMatrix: no bipartition set");
        return *bipartition_;
    }

    DensityMatrix with_bipartition(int da, int db) const { return DensityMatrix(m_, {{da, db}}); }

private:
    MatrixXcd m_;
    std::optional<std::pair<int, int>> bipartition_;
};

/// |Psi+> = d^{-1/2} sum_s |s,s>.
inline VectorXcd bell_vector(int d) {
    VectorXcd v = VectorXcd::Zero(static_cast<long>(d) * d);
    for (int s = 0; s < d; ++s) v(static_cast<long>(s) * d + s) = 1.0 / std::sqrt(double(d));
    return v;
}

inline DensityMatrix bell_state(int d) {
    if (d < 2) throw std::invalid_argument("bell_state: d must be >= 2");
    const VectorXcd v = bell_vector(d);
    return DensityMatrix(v * v.adjoint(), {{d, d}});
}

/// (1-p) |Psi+><Psi+| + p I/d^2.
inline DensityMatrix noisy_bell(int d, double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("noisy_bell: p must be in [0,1]");
    const long D = static_cast<long>(d) * d;
    const VectorXcd v = bell_vector(d);
    MatrixXcd m = (1.0 - p) * (v * v.adjoint());
    m += (p / static_cast<double>(D)) * MatrixXcd::Identity(D, D);
    return DensityMatrix(m, {{d, d}});
}

/// |0>_A |0>_B on d x d.
inline DensityMatrix pure_product(int d) {
    if (d < 2) throw std::invalid_argument("pure_product: d must be >= 2");
    const long D = static_cast<long>(d) * d;
    MatrixXcd m = MatrixXcd::Zero(D, D);
    m(0, 0) = 1.0;
    return DensityMatrix(m, {{d, d}});
}

/// Haar unitary: complex Ginibre -> QR, with the R-diagonal phase correction.
inline MatrixXcd haar_unitary(int d, Rng& rng) {
    if (d < 1) throw std::invalid_argument("haar_unitary: d must be >= 1");
    MatrixXcd z(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) z(i, j) = Complex(rng.gauss(), rng.gauss());
    Eigen::HouseholderQR<MatrixXcd> qr(z);
    MatrixXcd q = qr.householderQ();
    const MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j) {
        const Complex rd = r(j, j);
        const double a = std::abs(rd);
        q.col(j) *= (a > 0 ? rd / a : Complex(1.0));
    }
    return q;
}

inline DensityMatrix haar_pure(int dim, Rng& rng,
                               std::optional<std::pair<int, int>> bipartition = {}) {
    VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = Complex(rng.gauss(), rng.gauss());
    v.normalize();
    return DensityMatrix(v * v.adjoint(), bipartition);
}

/// Partial transpose on subsystem B. Hermiticity and trace are preserved;
/// positivity generally is not, so the result is a plain matrix.
inline MatrixXcd partial_transpose(const MatrixXcd& m, int da, int db) {
    MatrixXcd out(m.rows(), m.cols());
    for (int a = 0; a < da; ++a)
        for (int b = 0; b < db; ++b)
            for (int ap = 0; ap < da; ++ap)
                for (int bp = 0; bp < db; ++bp)
                    out(static_cast<long>(a) * db + bp, static_cast<long>(ap) * db + b) =
                        m(static_cast<long>(a) * db + b, static_cast<long>(ap) * db + bp);
    return out;
}

inline MatrixXcd partial_transpose(const DensityMatrix& rho) {
    auto [da, db] = rho.dims();
    return partial_transpose(rho.matrix(), da, db);
}

inline double moment_of(const MatrixXcd& m, int k) {
    MatrixXcd p = MatrixXcd::Identity(m.rows(), m.cols());
    for (int i = 0; i < k; ++i) p = p * m;
    return p.trace().real();
}

/// Tr[rho^k].
inline double moment(const DensityMatrix& rho, int k) { return moment_of(rho.matrix(), k); }

/// Tr[(rho^{T_B})^3].
inline double negativity_moment(const DensityMatrix& rho) {
    return moment_of(partial_transpose(rho), 3);
}

/// E_N = log2 sum_k |lambda_k| of rho^{T_B}.
inline double log_negativity(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(partial_transpose(rho), Eigen::EigenvaluesOnly);
    return std::log2(es.eigenvalues().cwiseAbs().sum());
}

inline MatrixXcd marginal_a(const DensityMatrix& rho) {
    auto [da, db] = rho.dims();
    MatrixXcd out = MatrixXcd::Zero(da, da);
    for (int a = 0; a < da; ++a)
        for (int ap = 0; ap < da; ++ap)
            for (int b = 0; b < db; ++b)
                out(a, ap) += rho.matrix()(static_cast<long>(a) * db + b,
                                           static_cast<long>(ap) * db + b);
    return out;
}

inline MatrixXcd marginal_b(const DensityMatrix& rho) {
    auto [da, db] = rho.dims();
    MatrixXcd out = MatrixXcd::Zero(db, db);
    for (int b = 0; b < db; ++b)
        for (int bp = 0; bp < db; ++bp)
            for (int a = 0; a < da; ++a)
                out(b, bp) += rho.matrix()(static_cast<long>(a) * db + b,
                                           static_cast<long>(a) * db + bp);
    return out;
}

/// Tr[rho_AB (rho_A ot rho_B)].
inline double correlation_numerator(const DensityMatrix& rho) {
    const MatrixXcd ra = marginal_a(rho), rb = marginal_b(rho);
    const auto [da, db] = rho.dims();
    Complex acc = 0;
    for (int a = 0; a < da; ++a)
        for (int b = 0; b < db; ++b)
            for (int ap = 0; ap < da; ++ap)
                for (int bp = 0; bp < db; ++bp)
                    acc += rho.matrix()(static_cast<long>(a) * db + b,
                                        static_cast<long>(ap) * db + bp) *
                           ra(ap, a) * rb(bp, b);
    return acc.real();
}

/// F2 = Tr[rho_AB (rho_A ot rho_B)] / max(Tr rho_AB^2, Tr rho_A^2 Tr rho_B^2).
inline double fidelity_f2(const DensityMatrix& rho) {
    const double num = correlation_numerator(rho);
    const double pab = moment(rho, 2);
    const double pa = moment_of(marginal_a(rho), 2), pb = moment_of(marginal_b(rho), 2);
    return num / std::max(pab, pa * pb);
}

/// Computational-basis probabilities of U rho U^dag.
inline std::vector<double> born_probabilities(const DensityMatrix& rho, const MatrixXcd& u) {
    if (u.rows() != rho.dim()) throw std::invalid_argument("born_probabilities: dimension mismatch");
    const long n = rho.dim();
    std::vector<double> p(n);
    const MatrixXcd z = u * rho.matrix();
    for (long i = 0; i < n; ++i) p[i] = (z.row(i) * u.row(i).adjoint()).value().real();
    return p;
}

/// Joint computational-basis probabilities under U_A ot U_B, computed with the
/// tensor structure (no D x D unitary is materialised). Index order (a, b).
inline std::vector<double> born_probabilities_bilocal(const DensityMatrix& rho,
                                                      const MatrixXcd& ua, const MatrixXcd& ub) {
    const auto [da, db] = rho.dims();
    if (ua.rows() != da || ub.rows() != db)
        throw std::invalid_argument("born_probabilities_bilocal: dimension mismatch");
    const long D = rho.dim();
    // T1 = (U_A ot U_B) rho: contract A then B on the row index.
    MatrixXcd t1(D, D);
    for (int b = 0; b < db; ++b)
        for (long col = 0; col < D; ++col) {
            for (int a = 0; a < da; ++a) {
                Complex acc = 0;
                for (int ap = 0; ap < da; ++ap)
                    acc += ua(a, ap) * rho.matrix()(static_cast<long>(ap) * db + b, col);
                t1(static_cast<long>(a) * db + b, col) = acc;
            }
        }
    MatrixXcd t2(D, D);
    for (int a = 0; a < da; ++a)
        for (long col = 0; col < D; ++col) {
            for (int b = 0; b < db; ++b) {
                Complex acc = 0;
                for (int bp = 0; bp < db; ++bp)
                    acc += ub(b, bp) * t1(static_cast<long>(a) * db + bp, col);
                t2(static_cast<long>(a) * db + b, col) = acc;
            }
        }
    // P(a,b) = sum_{a'',b''} T2[(a,b),(a'',b'')] conj(U_A(a,a'')) conj(U_B(b,b''))
    std::vector<double> p(D);
    for (int a = 0; a < da; ++a)
        for (int b = 0; b < db; ++b) {
            Complex acc = 0;
            for (int app = 0; app < da; ++app) {
                Complex inner = 0;
                for (int bpp = 0; bpp < db; ++bpp)
                    inner += t2(static_cast<long>(a) * db + b, static_cast<long>(app) * db + bpp) *
                             std::conj(ub(b, bpp));
                acc += inner * std::conj(ua(a, app));
            }
            p[static_cast<long>(a) * db + b] = acc.real();
        }
    return p;
}

/// |Psi_{u,v}> = (1/sqrt d) sum_l exp(2 pi i l v / d) |l, l+u>.
inline VectorXcd bell_label_vector(int d, int u, int v) {
    if (u < 0 || u >= d || v < 0 || v >= d)
        throw std::invalid_argument("bell_label_vector: label out of range");
    VectorXcd psi = VectorXcd::Zero(static_cast<long>(d) * d);
    for (int l = 0; l < d; ++l)
        psi(static_cast<long>(l) * d + (l + u) % d) =
            std::polar(1.0 / std::sqrt(double(d)), 2.0 * 3.14159265358979323846 * l * v / d);
    return psi;
}

/// Bell-state measurement after U_A ot U_B; d^2 probabilities indexed u*d+v.
/// d_A must equal d_B.
inline std::vector<double> bell_probabilities(const DensityMatrix& rho, const MatrixXcd& ua,
                                              const MatrixXcd& ub) {
    const auto [da, db] = rho.dims();
    if (da != db) throw std::invalid_argument("bell_probabilities: needs d_A == d_B");
    if (ua.rows() != da || ub.rows() != db)
        throw std::invalid_argument("bell_probabilities: dimension mismatch");
    const int d = da;
    MatrixXcd v(static_cast<long>(d) * d, static_cast<long>(d) * d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int ap = 0; ap < d; ++ap)
                for (int bp = 0; bp < d; ++bp)
                    v(static_cast<long>(a) * d + b, static_cast<long>(ap) * d + bp) =
                        ua(a, ap) * ub(b, bp);
    const MatrixXcd m = v * rho.matrix() * v.adjoint();
    std::vector<double> p(static_cast<std::size_t>(d) * d);
    for (int u = 0; u < d; ++u)
        for (int w = 0; w < d; ++w) {
            const VectorXcd psi = bell_label_vector(d, u, w);
            p[static_cast<std::size_t>(u) * d + w] = (psi.adjoint() * m * psi).value().real();
        }
    return p;
}

/// Schmidt probabilities of the top eigenvector (pure-state path helper).
inline std::vector<double> schmidt_probabilities(const DensityMatrix& rho) {
    const auto [da, db] = rho.dims();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho.matrix());
    const long top = rho.dim() - 1;
    if (es.eigenvalues()(top) < 1.0 - 1e-10)
        throw std::invalid_argument("schmidt_probabilities: state is not pure");
    MatrixXcd psi(da, db);
    for (int a = 0; a < da; ++a)
        for (int b = 0; b < db; ++b) psi(a, b) = es.eigenvectors()(static_cast<long>(a) * db + b, top);
    Eigen::JacobiSVD<MatrixXcd> svd(psi);
    std::vector<double> lam(svd.singularValues().size());
    for (std::size_t i = 0; i < lam.size(); ++i) {
        const double s = svd.singularValues()(static_cast<long>(i));
        lam[i] = s * s;
    }
    return lam;
}

/// Tr[(W_pi^A ot W_sigma^B) rho^{ot t}] for a pure state, via the Schmidt
/// product over cycles of beta = sigma pi^{-1}: prod_c Tr[Lambda^{len(c)}].
inline double permutation_expectation_pure(const std::vector<double>& schmidt_probs,
                                           const Permutation& pi, const Permutation& sigma) {
    const Permutation beta = compose(sigma, inverse(pi));
    double v = 1.0;
    for (const auto& c : cycles_of(beta)) {
        double s = 0.0;
        for (double p : schmidt_probs) s += std::pow(p, static_cast<double>(c.size()));
        v *= s;
    }
    return v;
}

/// Dense t-copy contraction of Tr[(W_pi^A ot W_sigma^B) rho^{ot t}].
/// Cost D^t terms; the cap guards against runaway loops.
inline double permutation_expectation_dense(const DensityMatrix& rho, const Permutation& pi,
                                            const Permutation& sigma, long cap = 4096) {
    const auto [da, db] = rho.dims();
    const int t = pi.size;
    if (sigma.size != t) throw std::invalid_argument("permutation_expectation: size mismatch");
    long total = 1;
    for (int k = 0; k < t; ++k) {
        total *= rho.dim();
        if (total > cap)
            throw std::invalid_argument("permutation_expectation: D^t exceeds dense cap");
    }
    std::array<int, kMaxCopies> a{}, b{};
    Complex acc = 0;
    for (long idx = 0; idx < total; ++idx) {
        long r = idx;
        for (int k = t - 1; k >= 0; --k) {
            const int joint = static_cast<int>(r % rho.dim());
            a[k] = joint / db;
            b[k] = joint % db;
            r /= rho.dim();
        }
        Complex v = 1.0;
        for (int k = 0; k < t; ++k)
            v *= rho.matrix()(static_cast<long>(a[pi.map[k]]) * db + b[sigma.map[k]],
                              static_cast<long>(a[k]) * db + b[k]);
        acc += v;
    }
    return acc.real();
}

/// Auto-routing version per the module contract: Schmidt path for pure states,
/// dense contraction (within cap) otherwise.
inline double permutation_expectation(const DensityMatrix& rho, const Permutation& pi,
                                      const Permutation& sigma, long cap = 4096) {
    if (moment(rho, 2) > 1.0 - 1e-10)
        return permutation_expectation_pure(schmidt_probabilities(rho), pi, sigma);
    return permutation_expectation_dense(rho, pi, sigma, cap);
}

// ---- JSON import/export -----------------------------------------------------
// {"dim": D, "bipartition": [dA, dB] (optional), "data": [[re, im], ...]}
// with data row-major.

inline nlohmann::json state_to_json(const DensityMatrix& rho) {
    nlohmann::json j;
    j["dim"] = rho.dim();
    if (rho.bipartition()) j["bipartition"] = {rho.bipartition()->first, rho.bipartition()->second};
    auto& data = j["data"] = nlohmann::json::array();
    for (long r = 0; r < rho.dim(); ++r)
        for (long c = 0; c < rho.dim(); ++c)
            data.push_back({rho.matrix()(r, c).real(), rho.matrix()(r, c).imag()});
    return j;
}

inline DensityMatrix state_from_json(const nlohmann::json& j) {
    const long dim = j.at("dim").get<long>();
    const auto& data = j.at("data");
    if (static_cast<long>(data.size()) != dim * dim)
        throw std::invalid_argument("state_from_json: data size mismatch");
    MatrixXcd m(dim, dim);
    long k = 0;
    for (long r = 0; r < dim; ++r)
        for (long c = 0; c < dim; ++c, ++k)
            m(r, c) = Complex(data[k][0].get<double>(), data[k][1].get<double>());
    std::optional<std::pair<int, int>> bip;
    if (j.contains("bipartition"))
        bip = {{j["bipartition"][0].get<int>(), j["bipartition"][1].get<int>()}};
    return DensityMatrix(m, bip);
}

inline DensityMatrix load_state(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_state: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return state_from_json(j);
}

inline void save_state(const DensityMatrix& rho, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_state: cannot open " + path);
    out << state_to_json(rho).dump(2) << "\n";
}

}  // namespace negmom
