#include <gtest/gtest.h>

#include "qsm/approx.hpp"

using namespace qsm;

namespace {

// psi rotated by exp(-i theta Y) on A, so |<psi|cand>|^2 is set by theta alone when
// A's reduced state is fixed.
TripartiteState rotate_A(const TripartiteState& s, double theta) {
    Mat u(2, 2);
    u << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Mat full = kron(kron(Mat::Identity(s.dR(), s.dR()), u), Mat::Identity(s.dB(), s.dB()));
    return make_state(s.regs, full * s.amp, s.name + "-rotated");
}

// Perturbation at exactly F^2 = target along a random orthogonal direction.
TripartiteState at_fidelity(const TripartiteState& s, double f2, std::mt19937_64& rng) {
    Vec perp = random_state(int(s.amp.size()), rng);
    perp -= s.amp.dot(perp) * s.amp;
    perp /= perp.norm();
    return make_state(s.regs, std::sqrt(f2) * s.amp + std::sqrt(1 - f2) * perp);
}

}  // namespace

TEST(Smoothing, IdenticalCandidateIsExact) {
    for (const auto& s : {implication3(), ghz(3), appendixD()}) {
        auto c = verify_approximate_merge(s, s, 0.0, MergeMode::noncatalytic);
        EXPECT_TRUE(c.pass);
        EXPECT_GE(c.output_fidelity_sq, 1 - 10 * tol());
        EXPECT_NEAR(c.fidelity_sq, 1.0, 1e-12);
    }
}

TEST(Smoothing, LocalRotationAtBallEdge) {
    const double eps = 0.1;
    auto psi = implication3();
    // Bisect theta so that F^2 sits at 1 - (eps/2)^2.
    double lo = 0, hi = 0.5;
    for (int i = 0; i < 100; ++i) {
        double mid = (lo + hi) / 2;
        (state_fidelity_sq(psi, rotate_A(psi, mid)) > 1 - eps * eps / 4 ? lo : hi) = mid;
    }
    auto cand = rotate_A(psi, lo);
    EXPECT_NEAR(state_fidelity_sq(psi, cand), 1 - eps * eps / 4, 1e-9);
    for (auto mode : {MergeMode::noncatalytic, MergeMode::catalytic}) {
        auto c = verify_approximate_merge(psi, cand, eps, mode);
        EXPECT_TRUE(c.pass);
        EXPECT_GE(c.output_fidelity_sq, 1 - eps * eps);
    }
}

TEST(Smoothing, PreconditionRejectsFarCandidates) {
    std::mt19937_64 rng(81);
    const double eps = 0.2;
    auto psi = implication3();
    auto far = at_fidelity(psi, 1 - eps * eps, rng);
    EXPECT_THROW(verify_approximate_merge(psi, far, eps, MergeMode::noncatalytic), ValidationError);
    EXPECT_THROW(verify_approximate_merge(psi, psi, -0.1, MergeMode::noncatalytic), ValidationError);
    EXPECT_THROW(verify_approximate_merge(psi, ghz(2), 0.1, MergeMode::noncatalytic), ValidationError);
}

TEST(Smoothing, ChainHoldsOnRandomDirections) {
    std::mt19937_64 rng(82);
    std::uniform_real_distribution<double> u(0, 1);
    for (double eps : {0.05, 0.1, 0.2}) {
        for (const auto& psi : {implication3(), ghz(2), appendixD()}) {
            for (int t = 0; t < 5; ++t) {
                auto cand = at_fidelity(psi, 1 - eps * eps / 4 * u(rng), rng);
                auto c = verify_approximate_merge(psi, cand, eps, MergeMode::noncatalytic);
                EXPECT_GE(c.output_fidelity_sq, 1 - eps * eps - 10 * tol()) << psi.name << " eps " << eps;
            }
        }
    }
}

TEST(Heuristic, DeterministicAndNoWorseThanExact) {
    auto psi = implication3();
    auto a = approx_heuristic(psi, 0.2, MergeMode::noncatalytic, 8, 5);
    auto b = approx_heuristic(psi, 0.2, MergeMode::noncatalytic, 8, 5);
    EXPECT_EQ(a.best.cost.cost_bits, b.best.cost.cost_bits);
    EXPECT_EQ(a.best.output_fidelity_sq, b.best.output_fidelity_sq);
    EXPECT_EQ(a.candidates_tried, b.candidates_tried);
    const double exact = achievable_cost(ki_decompose(psi), MergeMode::noncatalytic).cost_bits;
    EXPECT_LE(a.best.cost.cost_bits, exact);
    EXPECT_TRUE(a.best.pass);
    EXPECT_NE(a.note.find("heuristic"), std::string::npos);
}

TEST(Ensemble, SingletonReducesToExactCondition) {
    std::vector<TripartiteState> states{implication3(), ghz(2), qutrit_choi(), appendixD()};
    for (const auto& s : states)
        for (long long K = 1; K <= 4; ++K)
            for (long long L = 1; L <= 4; ++L)
                EXPECT_EQ(check_ensemble_certificate(s, singleton_certificate(s, K, L)), exact_converse_holds(s, K, L))
                    << s.name << " K=" << K << " L=" << L;
}

TEST(Ensemble, CertificateFromRunAndDecrementedK) {
    auto psi = implication3();
    auto k = ki_decompose(psi);
    auto m = build_merge_protocol(psi, k, MergeMode::noncatalytic);
    auto cert = certificate_from_run(psi, m, 0.0);
    EXPECT_TRUE(check_ensemble_certificate(psi, cert));
    // The exact converse needs K >= 2 here; K = 1 breaks the majorization prefix.
    cert.K = 1;
    EXPECT_FALSE(check_ensemble_certificate(psi, cert));
}

TEST(Ensemble, ApproximateRunCertifies) {
    std::mt19937_64 rng(83);
    auto psi = implication3();
    const double eps = 0.1;
    auto cand = at_fidelity(psi, 1 - eps * eps / 8, rng);
    auto m = build_merge_protocol(cand, ki_decompose(cand), MergeMode::noncatalytic);
    auto cert = certificate_from_run(psi, m, eps);
    EXPECT_TRUE(check_ensemble_certificate(psi, cert));
}

TEST(Ensemble, MalformedInputs) {
    auto psi = implication3();
    EnsembleCertificate c = singleton_certificate(psi, 2, 1);
    c.weights = {0.5};
    EXPECT_THROW(check_ensemble_certificate(psi, c), ValidationError);
    c = singleton_certificate(psi, 2, 1);
    c.members[0] = Vec::Zero(3);
    EXPECT_THROW(check_ensemble_certificate(psi, c), ValidationError);
    c = singleton_certificate(psi, 2, 1);
    c.weights.push_back(0.0);
    EXPECT_THROW(check_ensemble_certificate(psi, c), ValidationError);
}
