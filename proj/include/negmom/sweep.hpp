#pragma once

// Experiment sweeps and the named verification suites behind the CLI `verify`
// subcommand and the acceptance tests.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "negmom/estimator.hpp"

namespace negmom {

// ---- verification suites -------------------------------------------------------

struct CheckLine {
    std::string label;
    double value = 0.0;  // residual or |difference|
    bool pass = false;
};

struct VerifyReport {
    std::string name;
    std::vector<CheckLine> checks;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    void print(std::ostream& os) const {
        for (const auto& c : checks) {
            std::array<char, 64> buf{};
            std::snprintf(buf.data(), buf.size(), "%.3e", c.value);
            os << (c.pass ? "[PASS] " : "[FAIL] ") << name << ": " << c.label
               << " (residual " << buf.data() << ")\n";
        }
    }
};

namespace detail {

inline std::vector<double> to_doubles(const std::vector<BigRat>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_double(v[i]);
    return out;
}

/// Inner products Tr[O W_pi] over S_3 for a single-system diagonal observable.
inline std::vector<double> observable_inner_products(const DiagonalObservable& obs) {
    const PermGroup& g = PermGroup::get(obs.copies());
    std::vector<double> out(static_cast<std::size_t>(g.order()));
    for (int i = 0; i < g.order(); ++i)
        out[i] = trace_with_permutation(obs, g.elements()[i]).convert_to<double>();
    return out;
}

inline std::vector<double> observable_inner_products_bipartite(const DiagonalObservable& obs) {
    const PermGroup& g = PermGroup::get(obs.copies());
    std::vector<double> out;
    for (int i = 0; i < g.order(); ++i)
        for (int j = 0; j < g.order(); ++j)
            out.push_back(
                trace_with_permutations(obs, g.elements()[i], g.elements()[j]).convert_to<double>());
    return out;
}

}  // namespace detail

/// Twirl identities: Phi3(O+) = M+, Phi3_A(O_A) = W_(12), Phi3_B(O_B) = W_(23),
/// Phi3_AB(O+^AB) = M+^AB, and (Phi3_A ot Phi3_B)(O--) = M_- ot M_-.
inline VerifyReport verify_twirl(int d_min = 2, int d_max = 5, double tol = 1e-9) {
    VerifyReport rep;
    rep.name = "twirl";
    for (int d = d_min; d <= d_max; ++d) {
        {
            auto r = projection_criterion(detail::observable_inner_products(o_plus(d)),
                                          detail::to_doubles(m_plus_target().inner_products(d)),
                                          tol);
            rep.checks.push_back({"Phi3(O+) = M+ at d=" + std::to_string(d), r.max_residual,
                                  r.pass});
        }
        {
            DiagonalObservable oa(DiagonalObservable::Kind::OCorrA, 3, d, 0);
            auto r = projection_criterion(
                detail::observable_inner_products(oa),
                detail::to_doubles(
                    single_w_target(Permutation::from_cycles(3, {{1, 2}})).inner_products(d)),
                tol);
            rep.checks.push_back({"Phi3_A(O_A) = W_(1,2) at d=" + std::to_string(d),
                                  r.max_residual, r.pass});
        }
        {
            DiagonalObservable ob(DiagonalObservable::Kind::OCorrB, 3, d, 0);
            auto r = projection_criterion(
                detail::observable_inner_products(ob),
                detail::to_doubles(
                    single_w_target(Permutation::from_cycles(3, {{2, 3}})).inner_products(d)),
                tol);
            rep.checks.push_back({"Phi3_B(O_B) = W_(2,3) at d=" + std::to_string(d),
                                  r.max_residual, r.pass});
        }
        {
            // Global twirl on dimension D = d^2: the projection criterion runs
            // over the six joint operators W_pi^{AB} = W_pi^A ot W_pi^B.
            const int dd = d * d;
            const PermGroup& g = PermGroup::get(3);
            const DiagonalObservable oab = o_plus_global(d, d);
            std::vector<double> lhs, rhs;
            const int w0 = g.index_of(w_cycle_123());
            const int w1 = g.index_of(w_cycle_132());
            for (int i = 0; i < g.order(); ++i) {
                lhs.push_back(trace_with_permutations(oab, g.elements()[i], g.elements()[i])
                                  .convert_to<double>());
                auto tr = [&](int wi) {
                    const auto& ct = g.classes()[g.product_class(wi, i)];
                    return std::pow(double(dd), double(ct.parts.size()));
                };
                rhs.push_back(tr(w0) + tr(w1));
            }
            auto r = projection_criterion(lhs, rhs, tol);
            rep.checks.push_back({"Phi3_AB(O+^AB) = M+^AB at d=" + std::to_string(d) +
                                      " (D=" + std::to_string(dd) + ")",
                                  r.max_residual, r.pass});
        }
        {
            const BellObservable omm(d);
            auto r = projection_criterion(
                omm.inner_products(),
                bipartite_target(BipartiteTargetKind::MMinusMinus).inner_products(d, d), tol);
            rep.checks.push_back({"(Phi3_A ot Phi3_B)(O--) = M- ot M- at d=" + std::to_string(d),
                                  r.max_residual, r.pass});
        }
    }
    return rep;
}

namespace golden {

/// Embedding-constant tables gamma_{xi,lambda} for S_3..S_6, rows and columns
/// in ascending partition order ((1,...,1) first, (t) last).
inline const std::map<int, std::vector<std::vector<std::int64_t>>>& gamma_tables() {
    static const std::map<int, std::vector<std::vector<std::int64_t>>> tables = {
        {3, {{1, 1, 1}, {0, 1, 3}, {0, 0, 2}}},
        {4,
         {{1, 1, 1, 1, 1}, {0, 1, 2, 3, 6}, {0, 0, 1, 0, 3}, {0, 0, 0, 2, 8}, {0, 0, 0, 0, 6}}},
        {5,
         {{1, 1, 1, 1, 1, 1, 1},
          {0, 1, 2, 3, 4, 6, 10},
          {0, 0, 1, 0, 3, 3, 15},
          {0, 0, 0, 2, 2, 8, 20},
          {0, 0, 0, 0, 2, 0, 20},
          {0, 0, 0, 0, 0, 6, 30},
          {0, 0, 0, 0, 0, 0, 24}}},
        {6,
         {{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1},
          {0, 1, 2, 3, 3, 4, 6, 6, 7, 10, 15},
          {0, 0, 1, 3, 0, 3, 9, 3, 9, 15, 45},
          {0, 0, 0, 1, 0, 0, 0, 0, 3, 0, 15},
          {0, 0, 0, 0, 2, 2, 4, 8, 8, 20, 40},
          {0, 0, 0, 0, 0, 2, 12, 0, 8, 20, 120},
          {0, 0, 0, 0, 0, 0, 4, 0, 0, 0, 40},
          {0, 0, 0, 0, 0, 0, 0, 6, 6, 30, 90},
          {0, 0, 0, 0, 0, 0, 0, 0, 6, 0, 90},
          {0, 0, 0, 0, 0, 0, 0, 0, 0, 24, 144},
          {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 120}}}};
    return tables;
}

/// Class-counting tallies behind the variance kernels Q_3..Q_6: for each
/// partition lambda and unordered sub-weight pair, the count of strings is
/// k * d(d-1)...(d-#parts(lambda)+1); the table stores k.
using TallyKey = std::pair<std::vector<int>, std::pair<int, int>>;

inline const std::map<int, std::map<TallyKey, std::int64_t>>& q_tallies() {
    static const std::map<int, std::map<TallyKey, std::int64_t>> tables = {
        {3,
         {{{{1, 1, 1}, {1, 1}}, 1}, {{{2, 1}, {2, 2}}, 3}, {{{3}, {3, 3}}, 1}}},
        {4,
         {{{{1, 1, 1, 1}, {1, 1}}, 1},
          {{{2, 1, 1}, {1, 1}}, 1},
          {{{2, 1, 1}, {1, 2}}, 4},
          {{{2, 1, 1}, {2, 2}}, 1},
          {{{2, 2}, {2, 2}}, 3},
          {{{3, 1}, {2, 2}}, 2},
          {{{3, 1}, {2, 3}}, 2},
          {{{4}, {3, 3}}, 1}}},
        {5,
         {{{{1, 1, 1, 1, 1}, {1, 1}}, 1},
          {{{2, 1, 1, 1}, {1, 1}}, 4},
          {{{2, 1, 1, 1}, {1, 2}}, 6},
          {{{2, 2, 1}, {1, 1}}, 2},
          {{{2, 2, 1}, {1, 2}}, 8},
          {{{2, 2, 1}, {2, 2}}, 5},
          {{{3, 1, 1}, {1, 2}}, 4},
          {{{3, 1, 1}, {1, 3}}, 2},
          {{{3, 1, 1}, {2, 2}}, 4},
          {{{3, 2}, {2, 2}}, 8},
          {{{3, 2}, {2, 3}}, 2},
          {{{4, 1}, {2, 2}}, 1},
          {{{4, 1}, {2, 3}}, 4},
          {{{5}, {3, 3}}, 1}}},
        {6,
         {{{{1, 1, 1, 1, 1, 1}, {1, 1}}, 1},
          {{{2, 1, 1, 1, 1}, {1, 1}}, 9},
          {{{2, 1, 1, 1, 1}, {1, 2}}, 6},
          {{{2, 2, 1, 1}, {1, 1}}, 18},
          {{{2, 2, 1, 1}, {1, 2}}, 18},
          {{{2, 2, 1, 1}, {2, 2}}, 9},
          {{{2, 2, 2}, {1, 1}}, 6},
          {{{2, 2, 2}, {2, 2}}, 9},
          {{{3, 1, 1, 1}, {1, 2}}, 18},
          {{{3, 1, 1, 1}, {1, 3}}, 2},
          {{{3, 2, 1}, {1, 2}}, 36},
          {{{3, 2, 1}, {2, 2}}, 18},
          {{{3, 2, 1}, {2, 3}}, 6},
          {{{3, 3}, {2, 2}}, 9},
          {{{3, 3}, {3, 3}}, 1},
          {{{4, 1, 1}, {1, 3}}, 6},
          {{{4, 1, 1}, {2, 2}}, 9},
          {{{4, 2}, {2, 2}}, 9},
          {{{4, 2}, {2, 3}}, 6},
          {{{5, 1}, {2, 3}}, 6},
          {{{6}, {3, 3}}, 1}}}};
    return tables;
}

}  // namespace golden

/// Regenerate the sub-weight pair of a string for the Q_t kernels.
inline std::pair<int, int> q_subweights(const std::vector<int>& a, int t) {
    int s1[3], s2[3];
    if (t == 3) {
        for (int k = 0; k < 3; ++k) s1[k] = s2[k] = a[k];
    } else if (t == 4) {
        s1[0] = a[0]; s1[1] = a[1]; s1[2] = a[2];
        s2[0] = a[0]; s2[1] = a[1]; s2[2] = a[3];
    } else if (t == 5) {
        s1[0] = a[0]; s1[1] = a[1]; s1[2] = a[2];
        s2[0] = a[0]; s2[1] = a[3]; s2[2] = a[4];
    } else {
        s1[0] = a[0]; s1[1] = a[1]; s1[2] = a[2];
        s2[0] = a[3]; s2[1] = a[4]; s2[2] = a[5];
    }
    int w1 = weight_of(s1, 3), w2 = weight_of(s2, 3);
    if (w1 > w2) std::swap(w1, w2);
    return {w1, w2};
}

/// Enumerate the tallies at alphabet size t and verify divisibility by the
/// falling factorial.
inline std::map<golden::TallyKey, std::int64_t> regenerate_q_tallies(int t) {
    const int d0 = t;
    std::map<golden::TallyKey, std::int64_t> raw;
    std::vector<int> a(t, 0);
    long total = 1;
    for (int k = 0; k < t; ++k) total *= d0;
    for (long idx = 0; idx < total; ++idx) {
        long r = idx;
        for (int k = t - 1; k >= 0; --k) {
            a[k] = static_cast<int>(r % d0);
            r /= d0;
        }
        const StringClass sc = string_class(OutcomeString(a, d0));
        ++raw[{sc.lambda.parts, q_subweights(a, t)}];
    }
    std::map<golden::TallyKey, std::int64_t> out;
    for (const auto& [key, cnt] : raw) {
        const int blocks = static_cast<int>(key.first.size());
        std::int64_t ff = 1;
        for (int i = 0; i < blocks; ++i) ff *= (d0 - i);
        if (cnt % ff != 0) throw std::logic_error("regenerate_q_tallies: count not divisible");
        out[key] = cnt / ff;
    }
    return out;
}

/// Table regeneration: embedding constants and Q-kernel class tallies must
/// match the frozen golden data with integer equality.
inline VerifyReport verify_tables() {
    VerifyReport rep;
    rep.name = "tables";
    for (int t = 3; t <= 6; ++t) {
        auto parts = partitions_of(t);
        std::reverse(parts.begin(), parts.end());  // ascending
        const auto& gold = golden::gamma_tables().at(t);
        std::int64_t mism = 0;
        for (std::size_t i = 0; i < parts.size(); ++i)
            for (std::size_t j = 0; j < parts.size(); ++j)
                if (embedding_constant(parts[i], parts[j]) != gold[i][j]) ++mism;
        rep.checks.push_back({"gamma table S" + std::to_string(t),
                              static_cast<double>(mism), mism == 0});
    }
    for (int t = 3; t <= 6; ++t) {
        const auto regenerated = regenerate_q_tallies(t);
        const auto& gold = golden::q_tallies().at(t);
        std::int64_t mism = (regenerated == gold) ? 0 : 1;
        if (mism) {
            mism = 0;
            for (const auto& [k, v] : gold) {
                auto it = regenerated.find(k);
                if (it == regenerated.end() || it->second != v) ++mism;
            }
            mism += static_cast<std::int64_t>(regenerated.size()) -
                    static_cast<std::int64_t>(gold.size());
        }
        rep.checks.push_back({"classQ" + std::to_string(t) + " tallies",
                              static_cast<double>(mism), mism == 0});
    }
    // T_lambda = prod parts! consistency against direct matrix-element sums.
    std::int64_t bad = 0;
    for (int t = 3; t <= 6; ++t) {
        const int d0 = 3;
        std::vector<int> a(t);
        for (int trial = 0; trial < 20; ++trial) {
            for (int k = 0; k < t; ++k) a[k] = (trial * 7 + k * k + k) % d0;
            OutcomeString s(a, d0);
            std::int64_t acc = 0;
            for (const auto& p : enumerate_group(t)) acc += matrix_element(p, s);
            if (acc != symmetry_factor(string_class(s).lambda)) ++bad;
        }
    }
    rep.checks.push_back({"T_lambda = prod(parts!)", static_cast<double>(bad), bad == 0});
    return rep;
}

inline VerifyReport verify_nogo(int d_min = 2, int d_max = 5) {
    VerifyReport rep;
    rep.name = "nogo";
    for (int d = d_min; d <= d_max; ++d) {
        const NogoReport r = nogo_witness(d);
        const double dd = d;
        const bool targets_ok = r.target_00 == 2.0 * std::pow(dd, 4) &&
                                r.target_01 == dd * dd + std::pow(dd, 6);
        rep.checks.push_back({"M_neg targets 2d^4 / d^2+d^6 at d=" + std::to_string(d),
                              std::abs(r.target_00 - 2.0 * std::pow(dd, 4)) +
                                  std::abs(r.target_01 - (dd * dd + std::pow(dd, 6))),
                              targets_ok});
        rep.checks.push_back({"diagonal observables blind to W1 vs W0 at d=" + std::to_string(d),
                              r.max_diag_diff, r.max_diag_diff <= 1e-12});
        rep.checks.push_back({"obstruction gap > 0 at d=" + std::to_string(d), r.gap, r.gap > 0});
    }
    return rep;
}

inline DensityMatrix random_mixed_state(int dim, Rng& rng, int rank = 0) {
    if (rank <= 0) rank = dim;
    MatrixXcd a(dim, rank);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < rank; ++j) a(i, j) = Complex(rng.gauss(), rng.gauss());
    MatrixXcd m = a * a.adjoint();
    m /= m.trace().real();
    m = 0.5 * (m + m.adjoint());
    return DensityMatrix(m);
}

/// Closed-form variance cross-checks (pure Gammas exact; Gamma3/Delta3 exact
/// formulas vs brute force on random mixed states).
inline VerifyReport verify_variance(std::uint64_t seed = 99) {
    VerifyReport rep;
    rep.name = "variance";
    for (int d = 2; d <= 4; ++d) {
        const VarianceTerms t = gamma_pure(d);
        const double closed[4] = {t.g3, t.g4, t.g5, t.g6};
        double worst = 0.0;
        for (int which = 3; which <= 6; ++which) {
            const double brute = to_double(gamma_pure_brute_exact(d, which));
            worst = std::max(worst, std::abs(brute - closed[which - 3]));
        }
        rep.checks.push_back({"gamma_brute(pure) = closed forms at d=" + std::to_string(d), worst,
                              worst <= 1e-9});
    }
    Rng rng(seed);
    double worst3 = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const DensityMatrix rho = random_mixed_state(2, rng);
        worst3 = std::max(worst3, std::abs(gamma3_exact(rho) - gamma_brute(rho, 3)));
    }
    rep.checks.push_back({"gamma3_exact = brute (20 mixed states, d=2)", worst3, worst3 <= 1e-8});
    double worstD = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const DensityMatrix rho = random_mixed_state(4, rng).with_bipartition(2, 2);
        worstD = std::max(worstD, std::abs(delta3_exact(rho) - delta_brute(rho, 3)));
    }
    rep.checks.push_back({"delta3_exact = brute (20 mixed states, dA=dB=2)", worstD,
                          worstD <= 1e-8});
    return rep;
}

inline VerifyReport verify(const std::string& kind) {
    if (kind == "twirl") return verify_twirl();
    if (kind == "tables") return verify_tables();
    if (kind == "nogo") return verify_nogo();
    if (kind == "variance") return verify_variance();
    throw std::invalid_argument("verify: unknown kind '" + kind + "'");
}

// ---- sweeps ---------------------------------------------------------------------

struct SweepSpec {
    std::string family = "noisy_bell";  // bell | noisy_bell | product | haar_pure | file
    std::string state_file;
    Scheme scheme = Scheme::Neg;
    std::vector<std::pair<int, int>> dims = {{3, 3}};
    std::vector<double> noise = {0.3};
    std::vector<int> n_us = {100};
    std::vector<int> n_ms = {0};  // 0 = exact mode
    int n_av = 100;
    std::uint64_t seed = 0;
    int threads = 0;
    bool timings = false;

    void validate() const {
        if (dims.empty() || n_us.empty() || n_ms.empty())
            throw std::invalid_argument("SweepSpec: empty grid (dims/n_u/n_m)");
        if (n_av < 1) throw std::invalid_argument("SweepSpec: repetitions must be >= 1");
        if (family != "bell" && family != "noisy_bell" && family != "product" &&
            family != "haar_pure" && family != "file")
            throw std::invalid_argument("SweepSpec: unknown family '" + family + "'");
        if (family == "file" && state_file.empty())
            throw std::invalid_argument("SweepSpec: family=file requires state_file");
        for (const auto& [da, db] : dims)
            if (da < 2 || (db != 0 && db < 2))
                throw std::invalid_argument("SweepSpec: dims must be >= 2");
        for (int nu : n_us)
            if (nu < 1) throw std::invalid_argument("SweepSpec: n_u must be >= 1");
        for (int nm : n_ms)
            if (nm != 0 && nm < 3)
                throw std::invalid_argument("SweepSpec: n_m must be >= 3 or 0 (exact)");
    }
};

struct SweepRow {
    std::string scheme, family;
    int d_a = 0, d_b = 0;
    double p = 0;
    int n_u = 0, n_m = 0, n_av = 0;
    std::uint64_t seed = 0;
    double oracle = 0, mean_estimate = 0, mean_abs_error = 0, se = 0;
    double wall_ms = 0;
};

inline DensityMatrix make_state(const SweepSpec& spec, int da, int db, double p, Rng& rng) {
    if (spec.family == "bell") return bell_state(da);
    if (spec.family == "noisy_bell") return noisy_bell(da, p);
    if (spec.family == "product") return pure_product(da);
    if (spec.family == "haar_pure") return haar_pure(da * (db > 0 ? db : 1), rng,
                                                     db > 0 ? std::optional{std::pair{da, db}}
                                                            : std::nullopt);
    return load_state(spec.state_file);
}

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<SweepRow> rows;
    std::uint64_t point = 0;
    for (const auto& [da, db] : spec.dims)
        for (double p : spec.noise)
            for (int nu : spec.n_us)
                for (int nm : spec.n_ms) {
                    Rng state_rng = Rng(spec.seed).substream(0xABCDull).substream(point);
                    const DensityMatrix rho = make_state(spec, da, db, p, state_rng);
                    ProtocolConfig cfg;
                    cfg.scheme = spec.scheme;
                    cfg.d_a = da;
                    cfg.d_b = db;
                    cfg.n_u = nu;
                    cfg.n_m = nm;
                    cfg.seed = spec.seed;
                    cfg.threads = spec.threads;
                    const double oracle = oracle_value(rho, spec.scheme);
                    const auto t0 = std::chrono::steady_clock::now();
                    double sum = 0, abs_sum = 0, sq = 0;
                    for (int rep = 0; rep < spec.n_av; ++rep) {
                        cfg.stream = Rng(spec.seed).substream(point).substream(rep).stream();
                        const EstimateResult res = estimate(rho, cfg);
                        sum += res.mean;
                        abs_sum += std::abs(res.mean - oracle);
                        sq += res.mean * res.mean;
                    }
                    const auto t1 = std::chrono::steady_clock::now();
                    SweepRow row;
                    row.scheme = scheme_name(spec.scheme);
                    row.family = spec.family;
                    row.d_a = da;
                    row.d_b = db;
                    row.p = p;
                    row.n_u = nu;
                    row.n_m = nm;
                    row.n_av = spec.n_av;
                    row.seed = spec.seed;
                    row.oracle = oracle;
                    row.mean_estimate = sum / spec.n_av;
                    row.mean_abs_error = abs_sum / spec.n_av;
                    const double var =
                        (sq - sum * sum / spec.n_av) / std::max(1, spec.n_av - 1);
                    row.se = std::sqrt(std::max(var, 0.0) / spec.n_av);
                    row.wall_ms =
                        std::chrono::duration<double, std::milli>(t1 - t0).count();
                    rows.push_back(row);
                    ++point;
                }
    return rows;
}

inline std::string format_double(double v) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.12g", v);
    return buf.data();
}

/// RFC-4180 CSV; one header row. Wall time column only with timings=true so
/// that identical seed + spec gives byte-identical output by default.
inline std::string sweep_csv(const std::vector<SweepRow>& rows, bool timings) {
    std::ostringstream os;
    os << "scheme,family,d_a,d_b,p,n_u,n_m,n_av,seed,oracle,mean_estimate,mean_abs_error,se";
    if (timings) os << ",wall_ms";
    os << "\r\n";
    for (const auto& r : rows) {
        os << r.scheme << ',' << r.family << ',' << r.d_a << ',' << r.d_b << ','
           << format_double(r.p) << ',' << r.n_u << ','
           << (r.n_m == 0 ? std::string("inf") : std::to_string(r.n_m)) << ',' << r.n_av << ','
           << r.seed << ',' << format_double(r.oracle) << ',' << format_double(r.mean_estimate)
           << ',' << format_double(r.mean_abs_error) << ',' << format_double(r.se);
        if (timings) os << ',' << format_double(r.wall_ms);
        os << "\r\n";
    }
    return os.str();
}

inline std::string sweep_jsonl(const std::vector<SweepRow>& rows, bool timings) {
    std::ostringstream os;
    for (const auto& r : rows) {
        nlohmann::json j;
        j["scheme"] = r.scheme;
        j["family"] = r.family;
        j["d_a"] = r.d_a;
        j["d_b"] = r.d_b;
        j["p"] = r.p;
        j["n_u"] = r.n_u;
        j["n_m"] = r.n_m == 0 ? nlohmann::json("inf") : nlohmann::json(r.n_m);
        j["n_av"] = r.n_av;
        j["seed"] = r.seed;
        j["oracle"] = r.oracle;
        j["mean_estimate"] = r.mean_estimate;
        j["mean_abs_error"] = r.mean_abs_error;
        j["se"] = r.se;
        if (timings) j["wall_ms"] = r.wall_ms;
        os << j.dump() << "\n";
    }
    return os.str();
}

}  // namespace negmom
