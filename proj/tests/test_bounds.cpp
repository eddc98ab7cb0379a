#include <gtest/gtest.h>

#include "qsm/bounds.hpp"

using namespace qsm;

namespace {

// Explicit Kronecker spectra and a prefix-sum comparison.
bool brute_majorizes(const TripartiteState& s, long long K, long long L) {
    std::vector<double> left, right;
    for (double x : spectrum(s.rho_B()))
        for (long long k = 0; k < K; ++k) left.push_back(x / double(K));
    for (double x : spectrum(s.rho_AB()))
        for (long long l = 0; l < L; ++l) right.push_back(x / double(L));
    return majorization_check(left, right);
}

double brute_search(const TripartiteState& s, int kmax, int lmax) {
    double best = std::numeric_limits<double>::infinity();
    for (int K = 1; K <= kmax; ++K)
        for (int L = 1; L <= lmax; ++L)
            if (brute_majorizes(s, K, L)) best = std::min(best, std::log2(double(K) / L));
    return best;
}

// R (x) A maximally entangled, B in a fixed pure state.
TripartiteState bell_with_decoupled_b() {
    Vec v = Vec::Zero(8);
    v(0 * 4 + 0 * 2 + 0) = v(1 * 4 + 1 * 2 + 0) = 1 / std::sqrt(2.0);
    return make_state(2, 2, 2, v);
}

}  // namespace

TEST(Simple, Examples) {
    EXPECT_NEAR(converse_simple(implication3()).catalytic, std::log2(1.5), 1e-12);
    EXPECT_NEAR(converse_simple(implication3()).noncatalytic, 1.0, 1e-12);
    for (int d = 2; d <= 4; ++d) EXPECT_NEAR(converse_simple(ghz(d)).catalytic, 0.0, 1e-12);
    EXPECT_NEAR(converse_simple(qutrit_choi()).catalytic, 0.0, 1e-12);
}

TEST(Simple, UsesCounterpartWhenRIsNotFlat) {
    Vec v = Vec::Zero(8);
    v(0) = std::sqrt(0.9);
    v(7) = std::sqrt(0.1);
    auto s = make_state(2, 2, 2, v);
    auto c = converse_simple(s);
    EXPECT_TRUE(c.used_counterpart);
    // Counterpart is GHZ_2: lambda0^B = 1/2, D = 2.
    EXPECT_NEAR(c.catalytic, 0.0, 1e-12);
}

TEST(Search, Examples) {
    auto g = converse_search(ghz(2));
    EXPECT_EQ(g.catalytic, 0.0);
    EXPECT_EQ(g.K_cat, 1);
    auto d = converse_search(bell_with_decoupled_b());
    EXPECT_NEAR(d.catalytic, 1.0, 1e-12);
    EXPECT_NEAR(d.noncatalytic, 1.0, 1e-12);

    // implication3: K=3, L=2 already passes, so the grid minimum is log2(3/2), not 1.
    auto i3 = converse_search(implication3());
    EXPECT_NEAR(i3.catalytic, std::log2(1.5), 1e-12);
    EXPECT_EQ(i3.K_cat, 3);
    EXPECT_EQ(i3.L_cat, 2);
    EXPECT_NEAR(i3.noncatalytic, 1.0, 1e-12);
    EXPECT_TRUE(brute_majorizes(implication3(), 3, 2));
    EXPECT_FALSE(brute_majorizes(implication3(), 4, 3));
    EXPECT_THROW(converse_search(ghz(2), 0, 4), ValidationError);
}

TEST(Search, MatchesBruteForceGrid) {
    std::mt19937_64 rng(61);
    std::vector<TripartiteState> states{implication3(), qutrit_choi(), appendixD(), ghz(3)};
    for (int t = 0; t < 12; ++t) states.push_back(max_entangled_counterpart(random_tripartite(2, 2 + t % 2, 2, rng)));
    for (const auto& s : states) {
        auto r = converse_search(s, 8, 8);
        EXPECT_NEAR(r.catalytic, brute_search(s, 8, 8), 1e-12) << s.name;
        auto simple = converse_simple(s);
        EXPECT_GE(r.catalytic, simple.catalytic - 1e-6) << s.name;
        EXPECT_GE(r.catalytic, r.eigenvalue_bound - 1e-9) << s.name;
    }
}

TEST(Search, UniformResourceOnlyHelps) {
    std::mt19937_64 rng(62);
    for (int t = 0; t < 20; ++t) {
        auto s = random_tripartite(2, 2, 3, rng);
        auto b = spectrum(s.rho_B()), ab = spectrum(s.rho_AB());
        for (int K = 1; K <= 6; ++K)
            for (int L = 1; L <= 6; ++L)
                if (resource_majorizes(b, ab, K, L)) {
                    for (int c = 2; c <= 4; ++c) EXPECT_TRUE(resource_majorizes(b, ab, c * K, L));
                }
    }
}

TEST(Search, FastCheckMatchesExplicitSpectra) {
    std::mt19937_64 rng(63);
    for (int t = 0; t < 30; ++t) {
        auto s = random_tripartite(2, 2 + t % 2, 2 + t % 3, rng);
        auto b = spectrum(s.rho_B()), ab = spectrum(s.rho_AB());
        for (int K = 1; K <= 5; ++K)
            for (int L = 1; L <= 5; ++L) EXPECT_EQ(resource_majorizes(b, ab, K, L), brute_majorizes(s, K, L));
    }
}

TEST(Hmax, ClosedForms) {
    // Pure product on AB.
    Mat prod = Mat::Zero(4, 4);
    prod(0, 0) = 1;
    EXPECT_NEAR(h_max_conditional(prod, 2, 2).value, 0.0, 1e-6);
    for (int d = 2; d <= 3; ++d) {
        Vec phi = max_entangled(d);
        EXPECT_NEAR(h_max_conditional(phi * phi.adjoint(), d, d).value, -std::log2(double(d)), 1e-6);
    }
    auto i3 = h_max_conditional(implication3());
    EXPECT_GT(i3.value, 0.54);
    EXPECT_LT(i3.value, 0.5432);
    EXPECT_LE(i3.upper - i3.lower, 1e-6 * i3.upper + 1e-12);
}

TEST(Hmax, TrivialBReducesToRenyiHalf) {
    // H_max(A) = 2 log2 tr sqrt(rho_A).
    std::mt19937_64 rng(64);
    for (int t = 0; t < 10; ++t) {
        const int dA = 2 + t % 3;
        Vec v = random_state(3 * dA, rng);
        Mat rho = reshape(v, 3, dA).transpose() * reshape(v, 3, dA).conjugate();
        double s = 0;
        for (double x : spectrum(rho)) s += std::sqrt(x);
        EXPECT_NEAR(h_max_conditional(rho, dA, 1).value, 2 * std::log2(s), 1e-6);
    }
}

TEST(Hmax, ClassicalCorrelationsOracle) {
    // rho = sum_i p_i |ii><ii|: H_max(A|B) = 0 since A is a copy of B.
    std::vector<double> p{0.5, 0.3, 0.2};
    Mat rho = Mat::Zero(9, 9);
    for (int i = 0; i < 3; ++i) rho(i * 3 + i, i * 3 + i) = p[i];
    EXPECT_NEAR(h_max_conditional(rho, 3, 3).value, 0.0, 1e-6);
    // rho_A (x) rho_B: H_max(A|B) = H_max(A).
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = 0.8;
    a(1, 1) = 0.2;
    Mat b = Mat::Identity(2, 2) / 2;
    const double want = 2 * std::log2(std::sqrt(0.8) + std::sqrt(0.2));
    EXPECT_NEAR(h_max_conditional(kron(a, b), 2, 2).value, want, 1e-6);
}

TEST(Compare, HmaxBelowSimpleBelowSearch) {
    std::mt19937_64 rng(65);
    for (int t = 0; t < 100; ++t) {
        auto s = random_tripartite(2, 2, 2, rng);
        ConverseReport r = compare_bounds(s, 16, 16);
        EXPECT_GE(r.simple_catalytic, r.h_max - 1e-6);
        EXPECT_GE(r.search_catalytic, r.simple_catalytic - 1e-6);
    }
}

TEST(Compare, Examples) {
    auto i3 = compare_bounds(implication3());
    EXPECT_GE(i3.gap, 0.0417);
    EXPECT_TRUE(i3.applicable);
    auto g = compare_bounds(ghz(2));
    EXPECT_NEAR(g.simple_catalytic, 0.0, 1e-9);
    EXPECT_NEAR(g.h_max, 0.0, 1e-6);
}

TEST(Qutrit, Report) {
    auto q = qutrit_counterexample_report();
    EXPECT_TRUE(q.r_maximally_mixed);
    EXPECT_TRUE(q.b_maximally_mixed);
    EXPECT_TRUE(q.choi_matches_state);
    EXPECT_TRUE(q.completely_positive);
    EXPECT_TRUE(q.trace_preserving);
    EXPECT_TRUE(q.unital);
    EXPECT_NEAR(q.choi_trace, 3.0, 1e-12);
    EXPECT_NEAR(q.converse, 0.0, 1e-12);
    // J = 1 - F over 2 restricted to its support: the antisymmetric projector, eigenvalue 1 three times.
    ASSERT_EQ(q.choi_eigenvalues.size(), 9u);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(q.choi_eigenvalues[i], 1.0, 1e-12);
    for (int i = 3; i < 9; ++i) EXPECT_NEAR(q.choi_eigenvalues[i], 0.0, 1e-12);
}

TEST(Qutrit, ChannelFormula) {
    std::mt19937_64 rng(66);
    Vec v = random_state(3, rng);
    Mat rho = v * v.adjoint();
    Mat out = qutrit_channel(rho);
    EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
    EXPECT_GE(eigh(out).values.minCoeff(), -1e-12);
}
