#pragma once

// Monte Carlo protocol engines: randomized-measurement rounds, U-statistic
// post-processing for all schemes, and the variance theory (closed forms,
// exact third-order terms, brute-force evaluation through the Weingarten
// table, Bernstein bound, budget planner).
//
// U statistics over distinct index triples are evaluated in closed form from
// outcome counts via inclusion-exclusion over index coincidences:
//   sum_{i!=j!=k} K = T111 - A12 - A13 - A23 + 2 T3,
// where T111/A../T3 are the unrestricted, pair-collapsed and fully-collapsed
// sums. For the product kernels used here each term is a small contraction of
// the count (or probability) matrix.

#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "negmom/observables.hpp"
#include "negmom/state.hpp"

namespace negmom {

enum class Scheme { Single, Global, Bilocal, Bell, Correlation, Neg, NegBell };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Single: return "single";
        case Scheme::Global: return "global";
        case Scheme::Bilocal: return "bilocal";
        case Scheme::Bell: return "bell";
        case Scheme::Correlation: return "correlation";
        case Scheme::Neg: return "neg";
        case Scheme::NegBell: return "neg_bell";
    }
    return "?";
}

inline Scheme scheme_from_name(const std::string& s) {
    if (s == "single") return Scheme::Single;
    if (s == "global") return Scheme::Global;
    if (s == "bilocal") return Scheme::Bilocal;
    if (s == "bell") return Scheme::Bell;
    if (s == "correlation") return Scheme::Correlation;
    if (s == "neg") return Scheme::Neg;
    if (s == "neg_bell") return Scheme::NegBell;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct ProtocolConfig {
    Scheme scheme = Scheme::Single;
    int d_a = 2;
    int d_b = 0;     // 0 for single-system runs
    int n_u = 100;   // unitary rounds
    int n_m = 0;     // shots per round; 0 = exact mode (N_M = infinity)
    int n_u2 = 0;    // secondary budget for composite schemes (0 = same as primary)
    int n_m2 = -1;   // -1 = same as primary
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;  // substream selector (sweeps give each repetition its own)
    int threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (n_u < 1) throw std::invalid_argument("ProtocolConfig: N_U must be >= 1");
        if (n_m != 0 && n_m < 3)
            throw std::invalid_argument("ProtocolConfig: N_M must be >= 3 (or 0 for exact mode)");
        if (n_m2 > 0 && n_m2 < 3)
            throw std::invalid_argument("ProtocolConfig: N_M' must be >= 3 (or 0 for exact mode)");
    }
};

struct EstimateResult {
    double mean = 0.0;
    double std_err = 0.0;
    std::string target;
    bool degenerate_nm = false;  // N_M in {3,4,5}: huge binom^{-1} prefactors
    std::vector<double> per_round;
    std::vector<EstimateResult> components;  // for composite schemes
};

// ---- closed-form kernel statistics --------------------------------------------

namespace kernels {

/// Contraction statistics of a weighted joint-outcome measure (count matrix or
/// probability matrix over (a,b)).
struct JointStats {
    double n = 0;                  // total weight
    double ra2 = 0, ra3 = 0;       // sums of A-marginal weight powers
    double cb2 = 0, cb3 = 0;       // sums of B-marginal weight powers
    double s2 = 0, s3 = 0;         // sums of joint weight powers
    double x = 0;                  // sum_ab w(a,b) r_a c_b
    double xa = 0;                 // sum_a r_a sum_b w(a,b)^2
    double xb = 0;                 // sum_b c_b sum_a w(a,b)^2
};

/// entries: sparse list of (a, b, weight). Marginals are accumulated over the
/// full alphabet sizes implied by the indices present.
inline JointStats joint_stats(const std::vector<std::array<double, 3>>& entries, int da, int db) {
    std::vector<double> r(da, 0.0), c(db, 0.0), q(da, 0.0), p(db, 0.0);
    JointStats st;
    for (const auto& e : entries) {
        const int a = static_cast<int>(e[0]), b = static_cast<int>(e[1]);
        const double w = e[2];
        r[a] += w;
        c[b] += w;
        q[a] += w * w;
        p[b] += w * w;
        st.n += w;
        st.s2 += w * w;
        st.s3 += w * w * w;
    }
    for (const auto& e : entries) {
        const int a = static_cast<int>(e[0]), b = static_cast<int>(e[1]);
        st.x += e[2] * r[a] * c[b];
    }
    for (int a = 0; a < da; ++a) {
        st.ra2 += r[a] * r[a];
        st.ra3 += r[a] * r[a] * r[a];
        st.xa += r[a] * q[a];
    }
    for (int b = 0; b < db; ++b) {
        st.cb2 += c[b] * c[b];
        st.cb3 += c[b] * c[b] * c[b];
        st.xb += c[b] * p[b];
    }
    return st;
}

/// Unrestricted triple sum of O_+^A(a) O_+^B(b) against weights^3.
inline double oplus_product_full(const JointStats& s, int da, int db) {
    const double aA = (da + 1.0) * (da + 2.0), bA = -(da + 1.0), gA = 2.0;
    const double aB = (db + 1.0) * (db + 2.0), bB = -(db + 1.0), gB = 2.0;
    double v = 0.0;
    v += gA * gB * s.n * s.n * s.n;
    v += gA * bB * 3.0 * s.cb2 * s.n + gA * aB * s.cb3;
    v += bA * gB * 3.0 * s.ra2 * s.n + aA * gB * s.ra3;
    v += bA * bB * (3.0 * s.s2 * s.n + 6.0 * s.x);
    v += bA * aB * 3.0 * s.xb + aA * bB * 3.0 * s.xa;
    v += aA * aB * s.s3;
    return v;
}

/// Pair-collapsed sum of the same kernel (symmetric, so one value serves all
/// three collapses): K(y,y,z) = [(1-dA)+(dA^2+dA) delta_a][(1-dB)+(dB^2+dB) delta_b].
inline double oplus_product_pair(const JointStats& s, int da, int db) {
    const double ca0 = 1.0 - da, ca1 = static_cast<double>(da) * da + da;
    const double cb0 = 1.0 - db, cb1 = static_cast<double>(db) * db + db;
    return ca0 * cb0 * s.n * s.n + ca0 * cb1 * s.cb2 + ca1 * cb0 * s.ra2 + ca1 * cb1 * s.s2;
}

inline double oplus_product_diag(const JointStats& s, int da, int db) {
    return (1.0 + static_cast<double>(da) * da) * (1.0 + static_cast<double>(db) * db) * s.n;
}

}  // namespace kernels

// ---- per-round estimators -------------------------------------------------------

/// Symmetric O_+ U-statistic over i<j<k from a histogram: binom^{-1} times the
/// [all-equal, exactly-two-equal, all-distinct] bucket sums. The 1/2 protocol
/// normalization is applied by run_round.
inline double u_statistic_oplus(const std::vector<int>& counts, std::int64_t d) {
    std::int64_t n = 0;
    for (int c : counts) n += c;
    if (n < 3) throw std::invalid_argument("u_statistic_oplus: N_M must be >= 3");
    auto c2 = [](std::int64_t c) { return c * (c - 1) / 2; };
    auto c3 = [](std::int64_t c) { return c * (c - 1) * (c - 2) / 6; };
    std::int64_t eq3 = 0, eq2 = 0;
    for (int c : counts) {
        eq3 += c3(c);
        eq2 += c2(c) * (n - c);
    }
    const std::int64_t total = c3(n);
    const std::int64_t eq1 = total - eq3 - eq2;
    const double o1 = 2.0, o2 = 1.0 - static_cast<double>(d),
                 o3 = 1.0 + static_cast<double>(d) * d;
    return (static_cast<double>(eq3) * o3 + static_cast<double>(eq2) * o2 +
            static_cast<double>(eq1) * o1) /
           static_cast<double>(total);
}

/// Exact-mode value of the same kernel average: alpha p3 + 3 beta p2 + gamma.
inline double exact_oplus(const std::vector<double>& probs, std::int64_t d) {
    double p2 = 0, p3 = 0;
    for (double p : probs) {
        p2 += p * p;
        p3 += p * p * p;
    }
    const double alpha = static_cast<double>(d + 1) * (d + 2), beta = -static_cast<double>(d + 1);
    return alpha * p3 + 3.0 * beta * p2 + 2.0;
}

/// Bilocal O_+ ot O_+ kernel average over i<j<k; expectation
/// 2(Tr[rho^3] + Tr[(rho^TB)^3]). run_round halves it.
inline double u_statistic_oplus_product(const std::vector<std::array<double, 3>>& count_entries,
                                        int da, int db, std::int64_t n) {
    if (n < 3) throw std::invalid_argument("u_statistic_oplus_product: N_M must be >= 3");
    const auto st = kernels::joint_stats(count_entries, da, db);
    const double full = kernels::oplus_product_full(st, da, db);
    const double pair = kernels::oplus_product_pair(st, da, db);
    const double diag = kernels::oplus_product_diag(st, da, db);
    const double ordered = full - 3.0 * pair + 2.0 * diag;
    return ordered /
           (static_cast<double>(n) * static_cast<double>(n - 1) * static_cast<double>(n - 2));
}

inline double exact_oplus_product(const std::vector<std::array<double, 3>>& prob_entries, int da,
                                  int db) {
    return kernels::oplus_product_full(kernels::joint_stats(prob_entries, da, db), da, db);
}

/// Correlation kernel over ordered distinct triples:
/// K = [(dA+1) delta_{a_i a_j} - 1][(dB+1) delta_{b_j b_k} - 1].
inline double u_statistic_corr(const std::vector<std::array<double, 3>>& count_entries, int da,
                               int db, std::int64_t n) {
    if (n < 3) throw std::invalid_argument("u_statistic_corr: N_M must be >= 3");
    const auto s = kernels::joint_stats(count_entries, da, db);
    const double ka = da + 1.0, kb = db + 1.0;
    const double t111 =
        ka * kb * s.x - ka * s.ra2 * s.n - kb * s.cb2 * s.n + s.n * s.n * s.n;
    const double a12 = static_cast<double>(da) * (kb * s.cb2 - s.n * s.n);
    const double a13 = ka * kb * s.s2 - ka * s.ra2 - kb * s.cb2 + s.n * s.n;
    const double a23 = static_cast<double>(db) * (ka * s.ra2 - s.n * s.n);
    const double t3 = static_cast<double>(da) * db * s.n;
    const double ordered = t111 - a12 - a13 - a23 + 2.0 * t3;
    return ordered /
           (static_cast<double>(n) * static_cast<double>(n - 1) * static_cast<double>(n - 2));
}

inline double exact_corr(const std::vector<std::array<double, 3>>& prob_entries, int da, int db) {
    const auto s = kernels::joint_stats(prob_entries, da, db);
    return (da + 1.0) * (db + 1.0) * s.x - (da + 1.0) * s.ra2 - (db + 1.0) * s.cb2 + 1.0;
}

/// Bell U-statistic: generic symmetric class-function kernel over observed
/// label multiset (m^3 loop over distinct observed labels).
inline double u_statistic_bell(const std::vector<std::pair<std::array<int, 2>, double>>& hist,
                               const BellObservable& obs, std::int64_t n) {
    if (n < 3) throw std::invalid_argument("u_statistic_bell: N_M must be >= 3");
    const std::size_t m = hist.size();
    double t111 = 0, a12 = 0, t3 = 0;
    std::array<int, 3> u{}, v{};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t k = 0; k < m; ++k) {
                u = {hist[i].first[0], hist[j].first[0], hist[k].first[0]};
                v = {hist[i].first[1], hist[j].first[1], hist[k].first[1]};
                t111 += hist[i].second * hist[j].second * hist[k].second * obs.coeff(u, v);
            }
            u = {hist[i].first[0], hist[i].first[0], hist[j].first[0]};
            v = {hist[i].first[1], hist[i].first[1], hist[j].first[1]};
            a12 += hist[i].second * hist[j].second * obs.coeff(u, v);
        }
    for (std::size_t i = 0; i < m; ++i) {
        u = {hist[i].first[0], hist[i].first[0], hist[i].first[0]};
        v = {hist[i].first[1], hist[i].first[1], hist[i].first[1]};
        t3 += hist[i].second * obs.coeff(u, v);
    }
    const double ordered = t111 - 3.0 * a12 + 2.0 * t3;
    return ordered /
           (static_cast<double>(n) * static_cast<double>(n - 1) * static_cast<double>(n - 2));
}

inline double exact_bell(const std::vector<std::pair<std::array<int, 2>, double>>& probs,
                         const BellObservable& obs) {
    double acc = 0;
    std::array<int, 3> u{}, v{};
    for (const auto& pi : probs)
        for (const auto& pj : probs)
            for (const auto& pk : probs) {
                u = {pi.first[0], pj.first[0], pk.first[0]};
                v = {pi.first[1], pj.first[1], pk.first[1]};
                acc += pi.second * pj.second * pk.second * obs.coeff(u, v);
            }
    return acc;
}

// ---- round execution --------------------------------------------------------------

namespace detail {

inline std::vector<std::array<double, 3>> joint_entries(const std::vector<double>& w, int da,
                                                        int db) {
    std::vector<std::array<double, 3>> out;
    out.reserve(w.size());
    for (int a = 0; a < da; ++a)
        for (int b = 0; b < db; ++b) {
            const double v = w[static_cast<std::size_t>(a) * db + b];
            if (v != 0.0) out.push_back({static_cast<double>(a), static_cast<double>(b), v});
        }
    return out;
}

inline std::vector<std::array<double, 3>> joint_entries(const std::vector<int>& counts, int da,
                                                        int db) {
    std::vector<std::array<double, 3>> out;
    for (int a = 0; a < da; ++a)
        for (int b = 0; b < db; ++b) {
            const int v = counts[static_cast<std::size_t>(a) * db + b];
            if (v != 0) out.push_back({static_cast<double>(a), static_cast<double>(b),
                                       static_cast<double>(v)});
        }
    return out;
}

/// Deterministic parallel map round -> value; results identical for any thread
/// count because each round owns a child RNG stream and the reduction is by
/// index.
template <class F>
std::vector<double> parallel_rounds(int n_rounds, int threads, F&& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    std::vector<double> out(static_cast<std::size_t>(n_rounds));
    if (threads == 1 || n_rounds < 4) {
        for (int r = 0; r < n_rounds; ++r) out[r] = fn(r);
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= n_rounds) return;
                out[r] = fn(r);
            }
        });
    for (auto& th : pool) th.join();
    return out;
}

inline EstimateResult summarize(std::vector<double> per_round, const std::string& target, int n_m) {
    EstimateResult res;
    res.target = target;
    res.degenerate_nm = (n_m >= 3 && n_m <= 5);
    double mean = 0;
    for (double v : per_round) mean += v;
    mean /= static_cast<double>(per_round.size());
    double var = 0;
    for (double v : per_round) var += (v - mean) * (v - mean);
    if (per_round.size() > 1) var /= static_cast<double>(per_round.size() - 1);
    res.mean = mean;
    res.std_err = std::sqrt(var / static_cast<double>(per_round.size()));
    res.per_round = std::move(per_round);
    return res;
}

}  // namespace detail

/// One unitary round of the given non-composite scheme. `round_rng` must be a
/// dedicated child stream.
inline double run_round(const DensityMatrix& rho, Scheme scheme, int n_m, Rng& round_rng) {
    switch (scheme) {
        case Scheme::Single:
        case Scheme::Global: {
            const int dim = static_cast<int>(rho.dim());
            const MatrixXcd u = haar_unitary(dim, round_rng);
            const std::vector<double> p = born_probabilities(rho, u);
            if (n_m == 0) return 0.5 * exact_oplus(p, dim);
            return 0.5 * u_statistic_oplus(sample_counts(p, n_m, round_rng), dim);
        }
        case Scheme::Bilocal: {
            const auto [da, db] = rho.dims();
            const MatrixXcd ua = haar_unitary(da, round_rng), ub = haar_unitary(db, round_rng);
            const std::vector<double> p = born_probabilities_bilocal(rho, ua, ub);
            if (n_m == 0)
                return 0.5 * exact_oplus_product(detail::joint_entries(p, da, db), da, db);
            const auto counts = sample_counts(p, n_m, round_rng);
            return 0.5 *
                   u_statistic_oplus_product(detail::joint_entries(counts, da, db), da, db, n_m);
        }
        case Scheme::Correlation: {
            const auto [da, db] = rho.dims();
            const MatrixXcd ua = haar_unitary(da, round_rng), ub = haar_unitary(db, round_rng);
            const std::vector<double> p = born_probabilities_bilocal(rho, ua, ub);
            if (n_m == 0) return exact_corr(detail::joint_entries(p, da, db), da, db);
            const auto counts = sample_counts(p, n_m, round_rng);
            return u_statistic_corr(detail::joint_entries(counts, da, db), da, db, n_m);
        }
        case Scheme::Bell: {
            const auto [da, db] = rho.dims();
            if (da != db) throw std::invalid_argument("run_round: bell scheme needs d_A == d_B");
            static thread_local std::map<int, BellObservable> cache;
            auto it = cache.find(da);
            if (it == cache.end()) it = cache.emplace(da, BellObservable(da)).first;
            const BellObservable& obs = it->second;
            const MatrixXcd ua = haar_unitary(da, round_rng), ub = haar_unitary(db, round_rng);
            const std::vector<double> p = bell_probabilities(rho, ua, ub);
            std::vector<std::pair<std::array<int, 2>, double>> entries;
            if (n_m == 0) {
                for (int u = 0; u < da; ++u)
                    for (int v = 0; v < da; ++v) {
                        const double w = p[static_cast<std::size_t>(u) * da + v];
                        if (w > 0) entries.push_back({{u, v}, w});
                    }
                return exact_bell(entries, obs);
            }
            const auto counts = sample_counts(p, n_m, round_rng);
            for (int u = 0; u < da; ++u)
                for (int v = 0; v < da; ++v) {
                    const int c = counts[static_cast<std::size_t>(u) * da + v];
                    if (c) entries.push_back({{u, v}, static_cast<double>(c)});
                }
            return u_statistic_bell(entries, obs, n_m);
        }
        default:
            throw std::invalid_argument("run_round: composite scheme");
    }
}

inline void check_dims(const DensityMatrix& rho, const ProtocolConfig& config) {
    const auto [da, db] = rho.dims();
    if (da != config.d_a || db != config.d_b)
        throw std::invalid_argument("estimate: bipartition does not match config dims");
}

/// Full estimation run. Targets:
///   single      -> Tr[rho^3]
///   global      -> Tr[rho_AB^3]
///   bilocal     -> Tr[rho^3] + Tr[(rho^TB)^3]
///   bell        -> Tr[(M_-^A ot M_-^B) rho^{ot 3}] = 2 Tr rho^3 - 2 Tr (rho^TB)^3
///   correlation -> Tr[rho_AB (rho_A ot rho_B)]
///   neg         -> Tr[(rho^TB)^3] as bilocal - global, independent budgets
///   neg_bell    -> Tr[(rho^TB)^3] as (1/4)(M_++ - M_--), bilocal + bell budgets
inline EstimateResult estimate(const DensityMatrix& rho, const ProtocolConfig& config) {
    config.validate();
    const Rng base(config.seed, config.stream);

    auto run_simple = [&](Scheme s, int n_u, int n_m, std::uint64_t tag,
                          const std::string& target) {
        auto rounds = detail::parallel_rounds(n_u, config.threads, [&](int r) {
            Rng rng = base.substream(tag).substream(static_cast<std::uint64_t>(r));
            return run_round(rho, s, n_m, rng);
        });
        return detail::summarize(std::move(rounds), target, n_m);
    };

    switch (config.scheme) {
        case Scheme::Single:
            if (rho.dim() != config.d_a)
                throw std::invalid_argument("estimate: single scheme dimension mismatch");
            return run_simple(Scheme::Single, config.n_u, config.n_m, 1, "tr_rho3");
        case Scheme::Global:
            check_dims(rho, config);
            return run_simple(Scheme::Global, config.n_u, config.n_m, 1, "tr_rho3_joint");
        case Scheme::Bilocal:
            check_dims(rho, config);
            return run_simple(Scheme::Bilocal, config.n_u, config.n_m, 2,
                              "tr_rho3_plus_pt3");
        case Scheme::Correlation:
            check_dims(rho, config);
            return run_simple(Scheme::Correlation, config.n_u, config.n_m, 3, "corr_numerator");
        case Scheme::Bell:
            check_dims(rho, config);
            return run_simple(Scheme::Bell, config.n_u, config.n_m, 4, "m_minus_minus");
        case Scheme::Neg: {
            check_dims(rho, config);
            const int nu2 = config.n_u2 > 0 ? config.n_u2 : config.n_u;
            const int nm2 = config.n_m2 >= 0 ? config.n_m2 : config.n_m;
            EstimateResult bl = run_simple(Scheme::Bilocal, nu2, nm2, 2, "tr_rho3_plus_pt3");
            EstimateResult gl = run_simple(Scheme::Global, config.n_u, config.n_m, 1,
                                           "tr_rho3_joint");
            EstimateResult res;
            res.target = "pt_moment3";
            res.mean = bl.mean - gl.mean;
            res.std_err = std::sqrt(bl.std_err * bl.std_err + gl.std_err * gl.std_err);
            res.degenerate_nm = bl.degenerate_nm || gl.degenerate_nm;
            res.components = {std::move(bl), std::move(gl)};
            return res;
        }
        case Scheme::NegBell: {
            check_dims(rho, config);
            const int nu2 = config.n_u2 > 0 ? config.n_u2 : config.n_u;
            const int nm2 = config.n_m2 >= 0 ? config.n_m2 : config.n_m;
            EstimateResult bl = run_simple(Scheme::Bilocal, nu2, nm2, 2, "tr_rho3_plus_pt3");
            EstimateResult bell = run_simple(Scheme::Bell, config.n_u, config.n_m, 4,
                                             "m_minus_minus");
            EstimateResult res;
            res.target = "pt_moment3";
            // M_neg = (1/4)(M_++ - M_--); the bilocal estimator carries the 1/2 already.
            res.mean = 0.5 * bl.mean - 0.25 * bell.mean;
            res.std_err = std::sqrt(0.25 * bl.std_err * bl.std_err +
                                    0.0625 * bell.std_err * bell.std_err);
            res.degenerate_nm = bl.degenerate_nm || bell.degenerate_nm;
            res.components = {std::move(bl), std::move(bell)};
            return res;
        }
    }
    throw std::logic_error("estimate: unreachable");
}

/// Result serialization: config echo, aggregate statistics, optional per-round
/// values and oracle.
inline nlohmann::json result_json(const EstimateResult& res, const ProtocolConfig& config,
                                  std::optional<double> oracle = {},
                                  bool include_rounds = false) {
    nlohmann::json j;
    j["config"] = {{"scheme", scheme_name(config.scheme)}, {"d_a", config.d_a},
                   {"d_b", config.d_b},  {"n_u", config.n_u},
                   {"n_m", config.n_m},  {"n_u2", config.n_u2},
                   {"n_m2", config.n_m2}, {"seed", config.seed},
                   {"stream", config.stream}};
    j["target"] = res.target;
    j["mean"] = res.mean;
    j["std_err"] = res.std_err;
    j["degenerate_nm"] = res.degenerate_nm;
    if (oracle) j["oracle"] = *oracle;
    if (include_rounds) j["per_round"] = res.per_round;
    for (const auto& comp : res.components)
        j["components"].push_back({{"target", comp.target},
                                   {"mean", comp.mean},
                                   {"std_err", comp.std_err}});
    return j;
}

/// Oracle value matching the scheme's target.
inline double oracle_value(const DensityMatrix& rho, Scheme scheme) {
    switch (scheme) {
        case Scheme::Single:
        case Scheme::Global: return moment(rho, 3);
        case Scheme::Bilocal: return moment(rho, 3) + negativity_moment(rho);
        case Scheme::Bell: return 2.0 * moment(rho, 3) - 2.0 * negativity_moment(rho);
        case Scheme::Correlation: return correlation_numerator(rho);
        case Scheme::Neg:
        case Scheme::NegBell: return negativity_moment(rho);
    }
    return 0.0;
}

// ---- variance theory -----------------------------------------------------------

struct VarianceTerms {
    double g3 = 0, g4 = 0, g5 = 0, g6 = 0;
    std::string provenance;  // closed-form-pure | exact-g3 | brute-force
};

/// Pure-state closed forms; derived from the class tallies and matching the
/// brute-force evaluation exactly. Order bounds are checked.
inline VarianceTerms gamma_pure(int d) {
    if (d < 2) throw std::invalid_argument("gamma_pure: d must be >= 2");
    const double dd = d;
    VarianceTerms t;
    t.g3 = (6.0 * dd * dd * dd - 2.0 * dd + 8.0) / (dd + 2.0);
    t.g4 = 2.0 * (7.0 * dd * dd * dd + 6.0 * dd * dd + 3.0 * dd + 8.0) / ((dd + 2.0) * (dd + 3.0));
    t.g5 = 4.0 * (12.0 * dd * dd * dd + 17.0 * dd * dd + 15.0 * dd + 16.0) /
           ((dd + 2.0) * (dd + 3.0) * (dd + 4.0));
    t.g6 = 4.0 *
           (dd * dd * dd * dd + 59.0 * dd * dd * dd + 107.0 * dd * dd + 109.0 * dd + 84.0) /
           ((dd + 2.0) * (dd + 3.0) * (dd + 4.0) * (dd + 5.0));
    t.provenance = "closed-form-pure";
    if (!(t.g3 < 6.0 * dd * dd && t.g4 < 14.0 * dd && t.g5 < 48.0 && t.g6 < 10.0))
        throw std::logic_error("gamma_pure: order bound violated");
    return t;
}

/// Per-round variance nu(N_M, d) of the O_+ estimator, with the exact
/// collision-count prefactors (they reduce to 1/4 G6 + (9/4) G5/N_M + ... as
/// N_M -> infinity). n_m = 0 means exact mode.
inline double variance_nu(int n_m, const VarianceTerms& t, double tr_rho3) {
    if (n_m == 0) return 0.25 * t.g6 - tr_rho3 * tr_rho3;
    if (n_m < 3) throw std::invalid_argument("variance_nu: N_M must be >= 3");
    const double n = n_m;
    const double binom3 = n * (n - 1.0) * (n - 2.0) / 6.0;
    const double second =
        0.25 / binom3 *
        ((n - 3.0) * (n - 4.0) * (n - 5.0) / 6.0 * t.g6 + 1.5 * (n - 3.0) * (n - 4.0) * t.g5 +
         3.0 * (n - 3.0) * t.g4 + t.g3);
    return second - tr_rho3 * tr_rho3;
}

/// Bipartite analogue with Delta terms; the subtracted mean is
/// Tr[rho^3] + Tr[(rho^TB)^3].
inline double variance_mu(int n_m, const VarianceTerms& delta, double tr_rho3, double tr_pt3) {
    const double m = tr_rho3 + tr_pt3;
    if (n_m == 0) return 0.25 * delta.g6 - m * m;
    if (n_m < 3) throw std::invalid_argument("variance_mu: N_M must be >= 3");
    const double n = n_m;
    const double binom3 = n * (n - 1.0) * (n - 2.0) / 6.0;
    const double second =
        0.25 / binom3 *
        ((n - 3.0) * (n - 4.0) * (n - 5.0) / 6.0 * delta.g6 +
         1.5 * (n - 3.0) * (n - 4.0) * delta.g5 + 3.0 * (n - 3.0) * delta.g4 + delta.g3);
    return second - m * m;
}

/// Exact Gamma_3 for arbitrary rho:
/// (d+2)^{-1} [(d-1)(d^2+3d+4) + 3d(d-1)(d+1) Tr rho^2 + 2(d^3-d^2+6) Tr rho^3].
inline double gamma3_exact(const DensityMatrix& rho) {
    const double d = static_cast<double>(rho.dim());
    const double m2 = moment(rho, 2), m3 = moment(rho, 3);
    return ((d - 1.0) * (d * d + 3.0 * d + 4.0) + 3.0 * d * (d - 1.0) * (d + 1.0) * m2 +
            2.0 * (d * d * d - d * d + 6.0) * m3) /
           (d + 2.0);
}

/// Exact Delta_3 for arbitrary bipartite rho with d_A = d_B = d.
inline double delta3_exact(const DensityMatrix& rho) {
    const auto [da, db] = rho.dims();
    if (da != db) throw std::invalid_argument("delta3_exact: needs d_A == d_B");
    const double d = da;
    const MatrixXcd ra = marginal_a(rho), rb = marginal_b(rho);
    const double trA2 = moment_of(ra, 2), trA3 = moment_of(ra, 3);
    const double trB2 = moment_of(rb, 2), trB3 = moment_of(rb, 3);
    const double tr2 = moment(rho, 2), tr3 = moment(rho, 3);
    const double corr = correlation_numerator(rho);
    MatrixXcd kra = MatrixXcd::Zero(rho.dim(), rho.dim());
    MatrixXcd krb = MatrixXcd::Zero(rho.dim(), rho.dim());
    for (int a = 0; a < da; ++a)
        for (int ap = 0; ap < da; ++ap)
            for (int b = 0; b < db; ++b)
                kra(static_cast<long>(a) * db + b, static_cast<long>(ap) * db + b) += ra(a, ap);
    for (int b = 0; b < db; ++b)
        for (int bp = 0; bp < db; ++bp)
            for (int a = 0; a < da; ++a)
                krb(static_cast<long>(a) * db + b, static_cast<long>(a) * db + bp) += rb(b, bp);
    const double rab2a = (rho.matrix() * rho.matrix() * kra).trace().real();
    const double rab2b = (rho.matrix() * rho.matrix() * krb).trace().real();
    const double pt3 = negativity_moment(rho);  // Tr[(rho^TA)^3] equals Tr[(rho^TB)^3]
    const double c = 1.0 / ((d + 2.0) * (d + 2.0));
    const double poly = (d - 1.0) * d * d + 6.0;
    return c * ((trA2 + trB2) * (3.0 * d * (d - 1.0) * (d - 1.0) * (d + 1.0) *
                                 (d * d + 3.0 * d + 4.0)) +
                (trA3 + trB3) * (2.0 * (d - 1.0) * poly * (d * d + 3.0 * d + 4.0)) +
                tr2 * (3.0 * d * d * (d * d - 1.0) * (d * d - 1.0)) + tr3 * (2.0 * poly * poly) +
                corr * (6.0 * d * d * (d * d - 1.0) * (d * d - 1.0)) +
                (rab2a + rab2b) * (6.0 * d * (d - 1.0) * (d + 1.0) * poly) +
                2.0 * pt3 * poly * poly +
                (d * (d + 1.0) * (d + 1.0) - 4.0) * (d * (d + 1.0) * (d + 1.0) - 4.0));
}

/// Gamma_t by definition: Tr[Phi^t(Q_t) rho^{ot t}] expanded through the
/// Weingarten class function, with Tr[W_pi Q_t] exact (class counting) and
/// Tr[W_sigma rho^{ot t}] from the moment sequence. Works at any d.
inline double gamma_brute(const DensityMatrix& rho, int which) {
    const int d = static_cast<int>(rho.dim());
    const DiagonalObservable q = variance_kernel(which, d);
    const int t = q.copies();
    const WeingartenTable table(t, d);
    const PermGroup& g = table.group();
    std::vector<double> qv(static_cast<std::size_t>(g.order()));
    for (int i = 0; i < g.order(); ++i)
        qv[i] = trace_with_permutation(q, g.elements()[i]).convert_to<double>();
    std::vector<double> moments(static_cast<std::size_t>(t) + 1, 1.0);
    for (int k = 1; k <= t; ++k) moments[k] = moment(rho, k);
    std::vector<double> rv(static_cast<std::size_t>(g.order()));
    for (int i = 0; i < g.order(); ++i) {
        double w = 1.0;
        for (const auto& c : cycles_of(g.elements()[i])) w *= moments[c.size()];
        rv[i] = w;
    }
    std::vector<double> gc(static_cast<std::size_t>(g.class_count()));
    for (int c = 0; c < g.class_count(); ++c) gc[c] = to_double(table.wg_class()[c]);
    double acc = 0.0;
    for (int i = 0; i < g.order(); ++i) {
        if (qv[i] == 0.0) continue;
        double inner = 0.0;
        for (int j = 0; j < g.order(); ++j) inner += gc[g.product_class(i, j)] * rv[j];
        acc += qv[i] * inner;
    }
    return acc;
}

/// Exact-rational Gamma_t for a pure state: row sums of C are constant, so
/// Gamma = rowsum * sum_pi Tr[W_pi Q_t].
inline BigRat gamma_pure_brute_exact(int d, int which) {
    const DiagonalObservable q = variance_kernel(which, d);
    const int t = q.copies();
    const WeingartenTable table(t, d);
    BigInt qsum = 0;
    for (const auto& p : table.group().elements()) qsum += trace_with_permutation(q, p);
    return table.row_sum() * BigRat(qsum);
}

/// Delta_t by definition for bipartite rho (d_A = d_B), dense contraction for
/// the state side. Practical for t <= 4 at d = 2 (D^t <= 4096 cap).
inline double delta_brute(const DensityMatrix& rho, int which, long cap = 4096) {
    const auto [da, db] = rho.dims();
    if (da != db) throw std::invalid_argument("delta_brute: needs d_A == d_B");
    const DiagonalObservable q = variance_kernel(which, da);
    const int t = q.copies();
    const WeingartenTable table(t, da);
    const PermGroup& g = table.group();
    const int n = g.order();
    std::vector<BigRat> qv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) qv[i] = BigRat(trace_with_permutation(q, g.elements()[i]));
    const PermutationCombination va = table.twirl_from_traces(qv);
    // Delta = sum_{sA,sB} vA(sA) vA(sB) Tr[(W_sA ot W_sB) rho^{ot t}]
    const bool pure = moment(rho, 2) > 1.0 - 1e-10;
    std::vector<double> schmidt;
    if (pure) schmidt = schmidt_probabilities(rho);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ci = to_double(va.coeff[i]);
        if (ci == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            const double cj = to_double(va.coeff[j]);
            if (cj == 0.0) continue;
            const double r =
                pure ? permutation_expectation_pure(schmidt, g.elements()[i], g.elements()[j])
                     : permutation_expectation_dense(rho, g.elements()[i], g.elements()[j], cap);
            acc += ci * cj * r;
        }
    }
    return acc;
}

/// Two-sided Bernstein bound 2 exp[-N_U eps^2 / (2 nu + 2 eps / 3)].
inline double bernstein_bound(double eps, int n_u, double nu) {
    if (eps <= 0) throw std::invalid_argument("bernstein_bound: eps must be > 0");
    return 2.0 * std::exp(-static_cast<double>(n_u) * eps * eps / (2.0 * nu + 2.0 * eps / 3.0));
}

struct BudgetPlan {
    long n_m = 0;
    long n_u = 0;
    long n_total = 0;
};

/// Advisory planner from the asymptotic requirement N_M ~ D^{2/3},
/// N_U ~ 1/eps^2.
inline BudgetPlan asymptotic_requirements(long dim, double eps) {
    if (dim < 2) throw std::invalid_argument("asymptotic_requirements: D must be >= 2");
    if (eps <= 0) throw std::invalid_argument("asymptotic_requirements: eps must be > 0");
    double v = std::cbrt(static_cast<double>(dim) * dim);
    if (std::abs(v - std::round(v)) < 1e-9) v = std::round(v);
    BudgetPlan plan;
    plan.n_m = static_cast<long>(std::ceil(v));
    double u = 1.0 / (eps * eps);
    if (std::abs(u - std::round(u)) < 1e-9) u = std::round(u);
    plan.n_u = static_cast<long>(std::ceil(u));
    plan.n_total = plan.n_m * plan.n_u;
    return plan;
}

}  // namespace negmom
