#include <gtest/gtest.h>

#include <numeric>

#include "qsm/merge.hpp"

using namespace qsm;

namespace {

// Smallest-denominator fraction in [lo, hi] by exhaustive denominator scan.
std::optional<Rational> scan_rational(double lo, double hi, long long cap) {
    for (long long q = 1; q <= cap; ++q) {
        long long p = (long long)std::ceil(lo * q);
        if (double(p) / q <= hi) return Rational{p, q};
    }
    return std::nullopt;
}

// (1_K/K) (x) psi^B majorized by (1_L/L) (x) psi^{AB}, by explicit Kronecker spectra.
bool majorization_consistent(const TripartiteState& s, long long K, long long L) {
    std::vector<double> left, right;
    for (double x : spectrum(s.rho_B()))
        for (long long k = 0; k < K; ++k) left.push_back(x / double(K));
    for (double x : spectrum(s.rho_AB()))
        for (long long l = 0; l < L; ++l) right.push_back(x / double(L));
    return majorization_check(left, right);
}

TripartiteState rotate(const TripartiteState& s, std::mt19937_64& rng) {
    Mat u = kron(kron(haar_unitary(s.dR(), rng), haar_unitary(s.dA(), rng)), haar_unitary(s.dB(), rng));
    return make_state(s.regs, u * s.amp, s.name);
}

}  // namespace

TEST(Rational, MatchesExhaustiveScan) {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> u(0.01, 1.0), w(1e-7, 1e-2);
    for (int t = 0; t < 300; ++t) {
        double lo = u(rng), hi = lo * (1 + w(rng));
        auto a = simplest_rational(lo, hi, 10000);
        auto b = scan_rational(lo, hi, 10000);
        ASSERT_EQ(a.has_value(), b.has_value()) << lo << " " << hi;
        if (a) {
            EXPECT_EQ(a->den, b->den);
            EXPECT_GE(a->value(), lo);
            EXPECT_LE(a->value(), hi);
        }
    }
    auto half = simplest_rational(0.5, 0.5, 10);
    ASSERT_TRUE(half.has_value());
    EXPECT_EQ(half->num, 1);
    EXPECT_EQ(half->den, 2);
}

TEST(Cost, CatalogExamples) {
    for (int d = 2; d <= 5; ++d) {
        auto k = ki_decompose(ghz(d));
        auto nc = achievable_cost(k, MergeMode::noncatalytic);
        auto cat = achievable_cost(k, MergeMode::catalytic);
        EXPECT_EQ(nc.K, 1);
        EXPECT_EQ(nc.cost_bits, 0.0);
        EXPECT_EQ(cat.K, cat.L);
        EXPECT_LE(cat.cost_bits, 1e-6);
    }
    auto k2 = ki_decompose(implication2());
    EXPECT_NEAR(achievable_cost(k2, MergeMode::catalytic).cost_bits, -1.0, 1e-12);
    EXPECT_EQ(achievable_cost(k2, MergeMode::noncatalytic).cost_bits, 0.0);
    auto k3 = ki_decompose(implication3());
    EXPECT_NEAR(achievable_cost(k3, MergeMode::catalytic).cost_bits, 1.0, 1e-12);
    EXPECT_NEAR(achievable_cost(k3, MergeMode::noncatalytic).cost_bits, 1.0, 1e-12);
    EXPECT_THROW(achievable_cost(k3, MergeMode::catalytic, 0.0), ValidationError);
}

TEST(Cost, FormulasAgainstBlockData) {
    std::mt19937_64 rng(52);
    for (int t = 0; t < 25; ++t) {
        auto s = random_tripartite(2 + t % 2, 2 + t % 3, 2 + (t / 3) % 3, rng);
        auto k = ki_decompose(s);
        double best = 0;
        long long kmax = 1;
        for (const auto& b : k.blocks) {
            if (b.p <= 0) continue;
            best = std::max(best, b.lambda0 * b.dim_R);
            kmax = std::max(kmax, (long long)std::ceil(b.lambda0 * b.dim_R - 1e-8));
        }
        auto nc = achievable_cost(k, MergeMode::noncatalytic);
        EXPECT_EQ(nc.K, kmax);
        EXPECT_EQ(nc.L, 1);
        EXPECT_LE(nc.K, numeric_rank(eigh(s.rho_A()).values));

        const double delta = 1e-6;
        auto cat = achievable_cost(k, MergeMode::catalytic, delta);
        EXPECT_LE(cat.cost_bits, std::log2(best) + delta + 1e-12);
        EXPECT_GE(cat.cost_bits, std::log2(best) - 1e-8);
        for (const auto& bc : cat.per_block) EXPECT_EQ(cat.K % (bc.K_j * bc.dim_R), 0);
        EXPECT_TRUE(majorization_consistent(s, nc.K, nc.L));
        EXPECT_TRUE(majorization_consistent(s, cat.K, cat.L));
    }
}

TEST(Cost, LcmOverflowIsReported) {
    // Blocks with prime R-dimensions push the LCM past 2^63.
    KIDecomposition d;
    const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    int j = 0;
    for (int pr : primes) {
        KIBlock b;
        b.j = j++;
        b.p = 1.0 / 16;
        b.lambda0 = 1.0;
        b.dim_R = pr;
        d.blocks.push_back(b);
    }
    EXPECT_THROW(achievable_cost(d, MergeMode::catalytic), CostOverflow);
    EXPECT_EQ(achievable_cost(d, MergeMode::noncatalytic).K, 53);
}

TEST(Protocol, GhzThree) {
    auto s = ghz(3);
    auto k = ki_decompose(s);
    for (auto mode : {MergeMode::noncatalytic, MergeMode::catalytic}) {
        auto m = build_merge_protocol(s, k, mode);
        auto r = verify_merge(s, m);
        EXPECT_TRUE(r.pass);
        EXPECT_GE(r.min_fidelity, 1 - 10 * tol());
        EXPECT_EQ(m.K, m.L);
    }
}

TEST(Protocol, CatalogStates) {
    for (const auto& s : {appendixD(), implication3(), implication4_psi(), implication4_psi_prime(), qutrit_choi()}) {
        auto k = ki_decompose(s);
        for (auto mode : {MergeMode::noncatalytic, MergeMode::catalytic}) {
            auto cost = achievable_cost(k, mode);
            auto m = build_merge_protocol(s, k, cost);
            auto r = verify_merge(s, m);
            EXPECT_TRUE(r.pass) << s.name << " " << to_string(mode);
            EXPECT_LE(r.completeness_residual, 1e-8);
        }
    }
    auto k = ki_decompose(appendixD());
    EXPECT_EQ(achievable_cost(k, MergeMode::noncatalytic).K, 1);
    // implication4_psi needs one ebit here, consumed by teleporting the quantum part.
    EXPECT_EQ(achievable_cost(ki_decompose(implication4_psi()), MergeMode::noncatalytic).K, 2);
}

TEST(Protocol, ZeroWeightBlocksAfterRotation) {
    std::mt19937_64 rng(53);
    auto s = rotate(appendixD(), rng);
    auto k = ki_decompose(s);
    auto m = build_merge_protocol(s, k, MergeMode::noncatalytic);
    EXPECT_EQ(m.K, 1);
    EXPECT_TRUE(verify_merge(s, m).pass);
}

TEST(Protocol, RandomStatesMergeExactly) {
    std::mt19937_64 rng(54);
    for (int t = 0; t < 12; ++t) {
        auto s = random_tripartite(2, 2 + t % 2, 2 + t % 3, rng);
        auto k = ki_decompose(s);
        auto m = build_merge_protocol(s, k, t % 2 ? MergeMode::catalytic : MergeMode::noncatalytic);
        EXPECT_TRUE(verify_merge(s, m).pass);
    }
}

TEST(Protocol, SameProtocolMergesCounterpartAndFamily) {
    std::mt19937_64 rng(55);
    std::normal_distribution<double> g;
    for (const auto& s : {implication3(), appendixD(), random_tripartite(3, 2, 2, rng)}) {
        auto m = build_merge_protocol(s, ki_decompose(s), MergeMode::noncatalytic);
        EXPECT_TRUE(verify_merge(max_entangled_counterpart(s), m).pass) << s.name;
        for (int t = 0; t < 3; ++t) {
            Mat X(s.dR(), s.dR());
            for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = cd(g(rng), g(rng));
            Vec v = kron(X, Mat::Identity(long(s.dA()) * s.dB(), long(s.dA()) * s.dB())) * s.amp;
            auto member = make_state(s.regs, v / v.norm());
            EXPECT_TRUE(verify_merge(member, m).pass) << s.name;
        }
    }
}

TEST(Protocol, TeleportBaseline) {
    for (const auto& s : {implication4_psi(), appendixD()}) {
        auto m = teleport_merge_protocol(s);
        EXPECT_EQ(m.K, s.dA());
        EXPECT_TRUE(verify_merge(s, m).pass);
    }
}

TEST(MixedUnitary, IdentityAndDephasing) {
    Vec phi = max_entangled(2);
    auto id = mixed_unitary_decomposition_qubit(phi * phi.adjoint());
    ASSERT_EQ(id.p.size(), 1u);
    EXPECT_NEAR(id.p[0], 1.0, 1e-12);
    EXPECT_LE((id.U[0] - Mat::Identity(2, 2)).norm(), 1e-9);

    Vec zphi = kron(Mat::Identity(2, 2), paulis()[3]) * phi;
    Mat deph = (phi * phi.adjoint() + zphi * zphi.adjoint()) / 2;
    auto dz = mixed_unitary_decomposition_qubit(deph);
    ASSERT_EQ(dz.p.size(), 2u);
    EXPECT_NEAR(dz.p[0], 0.5, 1e-12);
    EXPECT_NEAR(dz.p[1], 0.5, 1e-12);
    // Up to phase, the unitaries are I and Z.
    for (const Mat& u : dz.U) {
        const double ov = std::max(std::abs((u.adjoint() * Mat::Identity(2, 2)).trace()), std::abs((u.adjoint() * paulis()[3]).trace()));
        EXPECT_NEAR(ov, 2.0, 1e-9);
    }
}

TEST(MixedUnitary, RandomMixtureRoundTrip) {
    std::mt19937_64 rng(56);
    std::uniform_real_distribution<double> u(0.1, 1);
    for (int t = 0; t < 20; ++t) {
        MixedUnitaryDecomposition m;
        double tot = 0;
        for (int i = 0; i < 3; ++i) {
            m.p.push_back(u(rng));
            tot += m.p.back();
            m.U.push_back(haar_unitary(2, rng));
        }
        for (double& x : m.p) x /= tot;
        Mat c = choi_of(m);
        auto back = mixed_unitary_decomposition_qubit(c);
        EXPECT_LE(back.p.size(), 4u);
        EXPECT_LE((choi_of(back) - c).cwiseAbs().maxCoeff(), 1e-8);
        for (const Mat& x : back.U) EXPECT_TRUE(is_unitary(x));
    }
}

TEST(MixedUnitary, RejectsNonUnital) {
    // Amplitude damping to |0>: trace preserving, not unital.
    Mat c = Mat::Zero(4, 4);
    c(0, 0) = c(2, 2) = 0.5;
    EXPECT_THROW(mixed_unitary_decomposition_qubit(c), ValidationError);
}

TEST(QubitOptimal, CatalogPairAndGhz) {
    auto prime = qubit_optimal_merge(implication4_psi_prime());
    EXPECT_EQ(prime.cost_bits, 0.0);
    EXPECT_EQ(prime.protocol.K, 1);
    EXPECT_TRUE(verify_merge(implication4_psi_prime(), prime.protocol).pass);

    auto psi = qubit_optimal_merge(implication4_psi());
    EXPECT_EQ(psi.cost_bits, 1.0);
    EXPECT_TRUE(verify_merge(implication4_psi(), psi.protocol).pass);

    auto g = qubit_optimal_merge(ghz(2));
    EXPECT_EQ(g.cost_bits, 0.0);
    EXPECT_TRUE(verify_merge(ghz(2), g.protocol).pass);

    Vec v = Vec::Zero(8);
    v(0) = std::sqrt(0.9);
    v(7) = std::sqrt(0.1);
    EXPECT_THROW(qubit_optimal_merge(make_state(2, 2, 2, v)), ValidationError);
}

TEST(QubitOptimal, RandomUnitalInstances) {
    // psi with psi^R = psi^B = I/2: purify a random mixed-unitary Choi state.
    std::mt19937_64 rng(57);
    for (int t = 0; t < 10; ++t) {
        MixedUnitaryDecomposition m;
        m.p = {0.6, 0.4};
        m.U = {haar_unitary(2, rng), haar_unitary(2, rng)};
        SpectralData sd = eigh(choi_of(m));
        Vec amp = Vec::Zero(8);  // (R, A, B) with A purifying (R B)
        for (int a = 0; a < 2; ++a)
            for (int r = 0; r < 2; ++r)
                for (int b = 0; b < 2; ++b)
                    amp((r * 2 + a) * 2 + b) = std::sqrt(std::max(0.0, sd.values(a))) * sd.vectors(r * 2 + b, a);
        auto s = make_state(2, 2, 2, amp);
        auto res = qubit_optimal_merge(s);
        EXPECT_EQ(res.cost_bits, 0.0);
        EXPECT_TRUE(verify_merge(s, res.protocol).pass);
    }
}

TEST(Mode, Parsing) {
    EXPECT_EQ(parse_mode("catalytic"), MergeMode::catalytic);
    EXPECT_EQ(parse_mode("noncatalytic"), MergeMode::noncatalytic);
    EXPECT_THROW(parse_mode("both"), ValidationError);
}
