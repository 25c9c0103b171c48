#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "negmom/observables.hpp"
#include "negmom/state.hpp"
#include "negmom/sweep.hpp"

using namespace negmom;

TEST_CASE("rng reproducibility and stream splitting") {
    Rng a(987654321), b(987654321);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(987654321, 1);
    bool differs = false;
    Rng a2(987654321);
    for (int i = 0; i < 16; ++i) differs |= (a2.next_u64() != c.next_u64());
    CHECK(differs);
    // substream determinism
    Rng base(5);
    CHECK(base.substream(3).next_u64() == Rng(5).substream(3).next_u64());
    CHECK(base.substream(3).next_u64() != base.substream(4).next_u64());
}

TEST_CASE("state validation") {
    CHECK_THROWS_AS(DensityMatrix(MatrixXcd::Identity(2, 2)), std::invalid_argument);  // trace 2
    MatrixXcd bad = MatrixXcd::Zero(2, 2);
    bad(0, 0) = 1.5;
    bad(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix(bad), std::invalid_argument);  // negative eigenvalue
    MatrixXcd nh = MatrixXcd::Zero(2, 2);
    nh(0, 0) = 1.0;
    nh(0, 1) = 0.5;
    CHECK_THROWS_AS(DensityMatrix(nh), std::invalid_argument);  // not Hermitian
    CHECK_THROWS_AS(noisy_bell(2, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(bell_state(3).with_bipartition(2, 2), std::invalid_argument);
}

TEST_CASE("state factories") {
    const DensityMatrix mixed = noisy_bell(3, 1.0);
    CHECK((mixed.matrix() - MatrixXcd::Identity(9, 9) / 9.0).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(moment(noisy_bell(3, 0.0), 2) == Catch::Approx(1.0));
    CHECK(moment(pure_product(4), 2) == Catch::Approx(1.0));
    // bell_state(2): Tr[(rho^TB)^3] = 1/4
    CHECK(negativity_moment(bell_state(2)) == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("haar unitary is unitary and Haar-distributed to first moments") {
    Rng rng(2024);
    for (int d : {1, 2, 5}) {
        const MatrixXcd u = haar_unitary(d, rng);
        CHECK((u.adjoint() * u - MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    }
    // d=3: mean |U_00|^2 = 1/3 within 5 sigma over 1e5 samples
    const int n = 100000;
    double acc = 0;
    for (int i = 0; i < n; ++i) {
        const MatrixXcd u = haar_unitary(3, rng);
        acc += std::norm(u(0, 0));
    }
    acc /= n;
    // Var[|U00|^2] = 2/(d(d+1)) - 1/d^2 = 1/18 at d=3
    const double sigma = std::sqrt((1.0 / 18.0) / n);
    CHECK(std::abs(acc - 1.0 / 3.0) < 5 * sigma);
}

TEST_CASE("partial transpose involution and basic moments") {
    Rng rng(9);
    const DensityMatrix rho = random_mixed_state(6, rng).with_bipartition(2, 3);
    const MatrixXcd pt = partial_transpose(rho);
    CHECK((partial_transpose(pt, 2, 3) - rho.matrix()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(pt.trace().real() - 1.0) < 1e-12);
    CHECK((pt - pt.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(moment(rho, 1) == Catch::Approx(1.0));
    CHECK(moment_of(pt, 2) == Catch::Approx(moment(rho, 2)));
}

TEST_CASE("log negativity") {
    CHECK(log_negativity(noisy_bell(2, 1.0)) == Catch::Approx(0.0).margin(1e-10));
    CHECK(log_negativity(bell_state(2)) == Catch::Approx(1.0));        // log2(2)
    CHECK(log_negativity(bell_state(4)) == Catch::Approx(2.0));        // log2(4)
}

TEST_CASE("total correlation oracles") {
    const DensityMatrix prod = pure_product(3);
    CHECK(fidelity_f2(prod) == Catch::Approx(1.0));
    CHECK(correlation_numerator(bell_state(3)) == Catch::Approx(1.0 / 9.0));
    // brute-force matrix route for noisy_bell(3, 0.3)
    const DensityMatrix rho = noisy_bell(3, 0.3);
    MatrixXcd kron = MatrixXcd::Zero(9, 9);
    const MatrixXcd ra = marginal_a(rho), rb = marginal_b(rho);
    for (int a = 0; a < 3; ++a)
        for (int ap = 0; ap < 3; ++ap)
            for (int b = 0; b < 3; ++b)
                for (int bp = 0; bp < 3; ++bp)
                    kron(a * 3 + b, ap * 3 + bp) = ra(a, ap) * rb(b, bp);
    const double direct = (rho.matrix() * kron).trace().real();
    CHECK(correlation_numerator(rho) == Catch::Approx(direct).epsilon(1e-12));
}

TEST_CASE("born probabilities") {
    const DensityMatrix rho = noisy_bell(2, 0.4);
    const auto p_id = born_probabilities(rho, MatrixXcd::Identity(4, 4));
    for (int i = 0; i < 4; ++i) CHECK(p_id[i] == Catch::Approx(rho.matrix()(i, i).real()));

    Rng rng(31);
    const DensityMatrix mixed = random_mixed_state(9, rng).with_bipartition(3, 3);
    const MatrixXcd ua = haar_unitary(3, rng), ub = haar_unitary(3, rng);
    // bilocal fast path vs explicit Kronecker conjugation
    MatrixXcd v(9, 9);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int ap = 0; ap < 3; ++ap)
                for (int bp = 0; bp < 3; ++bp)
                    v(a * 3 + b, ap * 3 + bp) = ua(a, ap) * ub(b, bp);
    const MatrixXcd conj = v * mixed.matrix() * v.adjoint();
    const auto p = born_probabilities_bilocal(mixed, ua, ub);
    double sum = 0;
    for (int i = 0; i < 9; ++i) {
        CHECK(p[i] == Catch::Approx(conj(i, i).real()).margin(1e-12));
        CHECK(p[i] > -1e-12);
        sum += p[i];
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-10));
    CHECK_THROWS_AS(born_probabilities(rho, MatrixXcd::Identity(3, 3)), std::invalid_argument);
}

TEST_CASE("bell probabilities") {
    const int d = 3;
    const auto p = bell_probabilities(bell_state(d), MatrixXcd::Identity(d, d),
                                      MatrixXcd::Identity(d, d));
    CHECK(p[0] == Catch::Approx(1.0));
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] == Catch::Approx(0.0).margin(1e-12));
    Rng rng(8);
    const DensityMatrix rho = random_mixed_state(9, rng).with_bipartition(3, 3);
    const auto q = bell_probabilities(rho, haar_unitary(3, rng), haar_unitary(3, rng));
    double sum = 0;
    for (double x : q) {
        CHECK(x > -1e-12);
        sum += x;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("sample counts") {
    Rng rng(77);
    const auto sure = sample_counts({1.0, 0.0, 0.0}, 25, rng);
    CHECK(sure[0] == 25);
    CHECK(sure[1] + sure[2] == 0);
    CHECK(sample_counts({0.5, 0.5}, 0, rng) == std::vector<int>{0, 0});
    // multinomial CLT: uniform over 4 outcomes, 1e6 shots, each within 5 sigma
    Rng rng2(78);
    const int n = 1000000;
    const auto counts = sample_counts({0.25, 0.25, 0.25, 0.25}, n, rng2);
    const double sigma = std::sqrt(n * 0.25 * 0.75);
    int total = 0;
    for (int c : counts) {
        CHECK(std::abs(c - n / 4.0) < 5 * sigma);
        total += c;
    }
    CHECK(total == n);
    // bit-exact reproducibility
    Rng r1(123), r2(123);
    CHECK(sample_counts({0.3, 0.3, 0.4}, 1000, r1) == sample_counts({0.3, 0.3, 0.4}, 1000, r2));
}

TEST_CASE("permutation expectation: cyclic pair on any state gives Tr rho^3") {
    Rng rng(21);
    const Permutation w0 = w_cycle_123();
    for (int trial = 0; trial < 5; ++trial) {
        const DensityMatrix rho = random_mixed_state(4, rng).with_bipartition(2, 2);
        CHECK(permutation_expectation(rho, w0, w0) ==
              Catch::Approx(moment(rho, 3)).margin(1e-12));
    }
}

TEST_CASE("permutation expectation on the Bell state") {
    const Permutation w0 = w_cycle_123(), w1 = w_cycle_132();
    for (int d = 2; d <= 6; ++d) {
        const auto schmidt = std::vector<double>(d, 1.0 / d);
        CHECK(permutation_expectation_pure(schmidt, w0, w1) ==
              Catch::Approx(1.0 / (double(d) * d)).epsilon(1e-12));
        CHECK(permutation_expectation_pure(schmidt, w0, w0) == Catch::Approx(1.0));
    }
    for (int d = 2; d <= 3; ++d) {
        const DensityMatrix rho = bell_state(d);
        CHECK(permutation_expectation_dense(rho, w0, w1) ==
              Catch::Approx(1.0 / (double(d) * d)).margin(1e-12));
        CHECK(permutation_expectation_dense(rho, w0, w0) == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("negativity moment via the permutation form matches matrix powers") {
    Rng rng(33);
    for (int d = 2; d <= 3; ++d) {
        const DensityMatrix rho = random_mixed_state(d * d, rng).with_bipartition(d, d);
        const double via_perm = permutation_expectation(rho, w_cycle_123(), w_cycle_132());
        CHECK(via_perm == Catch::Approx(negativity_moment(rho)).margin(1e-10));
    }
}

TEST_CASE("bipartite permutation expectations are bounded by 1") {
    Rng rng(55);
    const PermGroup& g4 = PermGroup::get(4);
    for (int trial = 0; trial < 8; ++trial) {
        const DensityMatrix rho = random_mixed_state(4, rng).with_bipartition(2, 2);
        for (int i = 0; i < g4.order(); i += 3)
            for (int j = 0; j < g4.order(); j += 5) {
                const double v =
                    permutation_expectation_dense(rho, g4.elements()[i], g4.elements()[j]);
                CHECK(std::abs(v) <= 1.0 + 1e-10);
            }
    }
}

TEST_CASE("Renyi sandwich for pure states") {
    Rng rng(66);
    for (int d = 2; d <= 4; ++d) {
        for (int t = 2; t <= 4; ++t) {
            const PermGroup& g = PermGroup::get(t);
            const DensityMatrix psi = haar_pure(d * d, rng, {{d, d}});
            const auto lam = schmidt_probabilities(psi);
            int rank = 0;
            for (double p : lam) rank += (p > 1e-12);
            for (int trial = 0; trial < 10; ++trial) {
                const Permutation& pi = g.elements()[rng.below(g.order())];
                const Permutation& sg = g.elements()[rng.below(g.order())];
                const Permutation beta = compose(sg, inverse(pi));
                const int k = cycle_count(beta);
                const double chi = permutation_expectation_pure(lam, pi, sg);
                double pt = 0;
                for (double p : lam) pt += std::pow(p, t);
                const double d0 = rank;                                // 2^{S_0}
                const double dt = std::pow(pt, -1.0 / (t - 1));        // 2^{S_t}
                CHECK(chi >= std::pow(d0, double(k - t)) - 1e-9);
                CHECK(chi <= std::pow(dt, double(k - t)) + 1e-9);
            }
        }
    }
}

TEST_CASE("dense cap rejections") {
    Rng rng(4);
    const DensityMatrix rho = random_mixed_state(16, rng).with_bipartition(4, 4);
    CHECK_THROWS_AS(permutation_expectation_dense(rho, w_cycle_123(), w_cycle_123(), 4095),
                    std::invalid_argument);
}

TEST_CASE("state JSON round trip") {
    Rng rng(12);
    const DensityMatrix rho = random_mixed_state(6, rng).with_bipartition(2, 3);
    const std::string path = "/tmp/negmom_state_test.json";
    save_state(rho, path);
    const DensityMatrix back = load_state(path);
    CHECK((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(back.bipartition().has_value());
    CHECK(back.bipartition()->first == 2);
    CHECK(back.bipartition()->second == 3);
    std::remove(path.c_str());
}
