#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "qsm/statespace.hpp"

using namespace qsm;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("qsm_test_" + name)).string();
}

void write(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

bool is_maximally_mixed(const Mat& rho, double eps = 1e-9) {
    const long n = rho.rows();
    return (rho - Mat::Identity(n, n) / double(n)).cwiseAbs().maxCoeff() <= eps;
}

}  // namespace

TEST(StateFile, RoundTripIsExact) {
    std::mt19937_64 rng(21);
    for (const auto& s : {ghz(3), implication2(), appendixD(), random_tripartite(2, 3, 2, rng)}) {
        const std::string p = tmp_path("roundtrip.json");
        save_state(s, p);
        TripartiteState back = load_state(p);
        EXPECT_EQ(back.dims(), s.dims());
        EXPECT_EQ(back.regs.factorsA, s.regs.factorsA);
        EXPECT_EQ(back.name, s.name);
        EXPECT_EQ((back.amp - s.amp).cwiseAbs().maxCoeff(), 0.0);
        std::remove(p.c_str());
    }
}

TEST(StateFile, AcceptsHandWrittenFiles) {
    const std::string p = tmp_path("ghz2.json");
    write(p, R"({"version":1,"dims":{"R":2,"A":2,"B":2},
        "amps":[[0,0,0,0.70710678118654752,0],[1,1,1,0.70710678118654752,0]],"name":"g"})");
    auto s = load_state(p);
    EXPECT_NEAR(std::abs(s.amp(s.index(1, 1, 1))), 1 / std::sqrt(2.0), 1e-15);

    write(p, R"({"version":1,"dims":{"R":2,"A":2,"B":2},
        "amps":[[0,0,1,0.5,0],[0,1,0,0.5,0],[1,0,0,0.70710678118654752,0]]})");
    auto i3 = load_state(p);
    EXPECT_NEAR(std::abs(i3.amp.dot(implication3().amp)), 1.0, 1e-12);
    std::remove(p.c_str());
}

TEST(StateFile, RejectsInvalidFiles) {
    const std::string p = tmp_path("bad.json");
    auto rejects = [&](const std::string& text) {
        write(p, text);
        EXPECT_THROW(load_state(p), ValidationError) << text;
    };
    rejects(R"({"version":1,"dims":{"R":1,"A":1,"B":2},"amps":[[0,0,0,1,0],[0,0,0,0,0]]})");  // duplicate
    rejects(R"({"version":1,"dims":{"R":1,"A":1,"B":2},"amps":[[0,0,2,1,0]]})");               // out of range
    rejects(R"({"version":1,"dims":{"R":1,"A":1,"B":2},"amps":[[0,0,0,0.5,0]]})");             // norm
    rejects(R"({"version":1,"dims":{"R":1,"A":4,"B":1},"factorsA":[3,2],"amps":[[0,0,0,1,0]]})");
    rejects(R"({"version":2,"dims":{"R":1,"A":1,"B":1},"amps":[[0,0,0,1,0]]})");
    rejects("not json");
    EXPECT_THROW(load_state(tmp_path("missing.json")), ValidationError);
    std::remove(p.c_str());
}

TEST(StateFile, NormalizesNearUnitInput) {
    Vec v = basis(2, 0) * (1 + 5e-7);
    auto s = make_state(1, 1, 2, v);
    EXPECT_NEAR(s.amp.norm(), 1.0, 1e-15);
    EXPECT_THROW(make_state(1, 1, 2, Vec(basis(2, 0) * 1.1)), ValidationError);
}

TEST(Catalog, GhzAmplitudes) {
    for (int d = 2; d <= 5; ++d) {
        auto s = catalog("ghz", {{"d", d}});
        for (int l = 0; l < d; ++l) EXPECT_NEAR(s.amp(s.index(l, l, l)).real(), 1 / std::sqrt(double(d)), 1e-15);
        EXPECT_NEAR(s.amp.norm(), 1.0, 1e-15);
        EXPECT_TRUE(is_maximally_mixed(s.rho_R()));
    }
}

TEST(Catalog, Implication2Factors) {
    auto s = implication2();
    EXPECT_EQ(s.dA(), 12);
    EXPECT_EQ(s.dB(), 12);
    EXPECT_EQ(s.regs.factorsA, (std::vector<int>{3, 2, 2}));
    EXPECT_NEAR(s.amp.norm(), 1.0, 1e-12);
    EXPECT_TRUE(is_maximally_mixed(s.rho_R()));
}

TEST(Catalog, MarginalsMatchClaims) {
    EXPECT_TRUE(is_maximally_mixed(qutrit_choi().rho_R()));
    EXPECT_TRUE(is_maximally_mixed(qutrit_choi().rho_B()));
    EXPECT_TRUE(is_maximally_mixed(implication4_psi_prime().rho_B()));
    EXPECT_FALSE(is_maximally_mixed(implication4_psi().rho_B()));
    auto d = appendixD();
    EXPECT_EQ(d.dims(), (std::vector<int>{3, 6, 3}));
    EXPECT_NEAR(d.amp.norm(), 1.0, 1e-12);
    EXPECT_THROW(catalog("nope"), ValidationError);
}

TEST(Catalog, Implication3Schmidt) {
    auto sd = schmidt_decompose(implication3().amp, 2, 4);
    ASSERT_EQ(sd.rank, 2);
    EXPECT_NEAR(sd.coefficients[0], 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(sd.coefficients[1], 1 / std::sqrt(2.0), 1e-12);
}

TEST(Counterpart, Examples) {
    auto g = ghz(3);
    EXPECT_NEAR(std::abs(max_entangled_counterpart(g).amp.dot(g.amp)), 1.0, 1e-12);
    auto i3 = implication3();
    EXPECT_NEAR(std::abs(max_entangled_counterpart(i3).amp.dot(i3.amp)), 1.0, 1e-12);

    // sqrt(.9)|0>|00> + sqrt(.1)|1>|11>  ->  (|0>|00> + |1>|11>)/sqrt(2)
    Vec v = Vec::Zero(8), w = Vec::Zero(8);
    v(0) = std::sqrt(0.9);
    v(7) = std::sqrt(0.1);
    w(0) = w(7) = 1 / std::sqrt(2.0);
    auto c = max_entangled_counterpart(make_state(2, 2, 2, v));
    EXPECT_NEAR(std::abs(c.amp.dot(w)), 1.0, 1e-12);
}

TEST(Counterpart, IdempotentWithFlatR) {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 10; ++t) {
        auto s = random_tripartite(2 + t % 2, 2, 3, rng);
        auto c = max_entangled_counterpart(s);
        EXPECT_TRUE(is_maximally_mixed(c.rho_R(), 1e-9));
        auto cc = max_entangled_counterpart(c);
        EXPECT_NEAR(std::abs(cc.amp.dot(c.amp)), 1.0, 1e-9);
    }
}
