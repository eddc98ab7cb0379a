#pragma once

#include "qsm/numerics.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

namespace qsm {

struct Registers {
    int dR = 1, dA = 1, dB = 1;
    std::vector<int> factorsA, factorsB;
};

struct TripartiteState {
    Registers regs;
    Vec amp;  // index (iR * dA + iA) * dB + iB
    std::string name;

    int dR() const { return regs.dR; }
    int dA() const { return regs.dA; }
    int dB() const { return regs.dB; }
    std::vector<int> dims() const { return {regs.dR, regs.dA, regs.dB}; }
    long index(int r, int a, int b) const { return (long(r) * regs.dA + a) * regs.dB + b; }

    Mat rho_R() const { return reduced(amp, dims(), {0}); }
    Mat rho_A() const { return reduced(amp, dims(), {1}); }
    Mat rho_B() const { return reduced(amp, dims(), {2}); }
    Mat rho_RA() const { return reduced(amp, dims(), {0, 1}); }
    Mat rho_RB() const { return reduced(amp, dims(), {0, 2}); }
    Mat rho_AB() const { return reduced(amp, dims(), {1, 2}); }
};

inline void validate_registers(const Registers& g) {
    if (g.dR < 1 || g.dA < 1 || g.dB < 1) throw ValidationError("register dimensions must be positive");
    if (!g.factorsA.empty() && product(g.factorsA) != g.dA)
        throw ValidationError("factorsA product does not match dim A");
    if (!g.factorsB.empty() && product(g.factorsB) != g.dB)
        throw ValidationError("factorsB product does not match dim B");
}

// Normalizes within 1e-6 of unit norm; rejects anything farther. Norms already
// within rounding of 1 are left alone.
inline TripartiteState make_state(Registers g, Vec amp, std::string name = "") {
    validate_registers(g);
    if (amp.size() != long(g.dR) * g.dA * g.dB) throw ValidationError("amplitude length does not match dims");
    if (!amp.allFinite()) throw ValidationError("non-finite amplitude");
    double n = amp.norm();
    if (std::abs(n - 1.0) > 1e-6) throw ValidationError("state norm " + std::to_string(n) + " is not within 1e-6 of 1");
    if (std::abs(n - 1.0) > 1e-14) amp /= n;  // leaves saved states bit-identical on reload
    return TripartiteState{std::move(g), std::move(amp), std::move(name)};
}

inline TripartiteState make_state(int dR, int dA, int dB, Vec amp, std::string name = "") {
    Registers g;
    g.dR = dR;
    g.dA = dA;
    g.dB = dB;
    return make_state(std::move(g), std::move(amp), std::move(name));
}

// Exchange the A and B registers.
inline TripartiteState swap_AB(const TripartiteState& s) {
    Registers g = s.regs;
    std::swap(g.dA, g.dB);
    std::swap(g.factorsA, g.factorsB);
    return TripartiteState{g, permute(s.amp, s.dims(), {0, 2, 1}), s.name};
}

// ---------- file I/O ----------

inline nlohmann::json to_json(const TripartiteState& s) {
    nlohmann::json j;
    j["version"] = 1;
    j["dims"] = {{"R", s.dR()}, {"A", s.dA()}, {"B", s.dB()}};
    if (!s.regs.factorsA.empty()) j["factorsA"] = s.regs.factorsA;
    if (!s.regs.factorsB.empty()) j["factorsB"] = s.regs.factorsB;
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < s.dR(); ++r)
        for (int a = 0; a < s.dA(); ++a)
            for (int b = 0; b < s.dB(); ++b) {
                cd z = s.amp(s.index(r, a, b));
                if (z == cd(0.0, 0.0)) continue;
                rows.push_back({r, a, b, z.real(), z.imag()});
            }
    j["amps"] = rows;
    j["name"] = s.name;
    return j;
}

inline TripartiteState from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw ValidationError("state file must be a JSON object");
        if (j.value("version", 0) != 1) throw ValidationError("unsupported state file version");
        Registers g;
        const auto& d = j.at("dims");
        g.dR = d.at("R").get<int>();
        g.dA = d.at("A").get<int>();
        g.dB = d.at("B").get<int>();
        if (j.contains("factorsA")) g.factorsA = j["factorsA"].get<std::vector<int>>();
        if (j.contains("factorsB")) g.factorsB = j["factorsB"].get<std::vector<int>>();
        validate_registers(g);
        Vec amp = Vec::Zero(long(g.dR) * g.dA * g.dB);
        std::set<std::tuple<int, int, int>> seen;
        for (const auto& row : j.at("amps")) {
            if (!row.is_array() || row.size() != 5) throw ValidationError("amplitude row must have 5 entries");
            int r = row[0].get<int>(), a = row[1].get<int>(), b = row[2].get<int>();
            if (r < 0 || r >= g.dR || a < 0 || a >= g.dA || b < 0 || b >= g.dB)
                throw ValidationError("amplitude index out of range");
            if (!seen.insert({r, a, b}).second) throw ValidationError("duplicate amplitude index");
            amp((long(r) * g.dA + a) * g.dB + b) = cd(row[3].get<double>(), row[4].get<double>());
        }
        return make_state(g, amp, j.value("name", std::string()));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed state file: ") + e.what());
    }
}

inline TripartiteState load_state(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

inline void save_state(const TripartiteState& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << to_json(s).dump(2) << "\n";
}

// ---------- catalog ----------

namespace detail {

struct Builder {
    Registers g;
    Vec amp;
    explicit Builder(Registers regs) : g(std::move(regs)), amp(Vec::Zero(long(g.dR) * g.dA * g.dB)) {}
    void add(int r, int a, int b, cd z) { amp((long(r) * g.dA + a) * g.dB + b) += z; }
    TripartiteState done(const std::string& name) { return make_state(g, amp, name); }
};

}  // namespace detail

inline TripartiteState ghz(int d) {
    if (d < 1) throw ValidationError("ghz: d must be positive");
    detail::Builder b({d, d, d, {}, {}});
    for (int l = 0; l < d; ++l) b.add(l, l, l, 1.0 / std::sqrt(double(d)));
    return b.done("ghz" + std::to_string(d));
}

// A = A1 x A2 x A3 with dims 3, 2, 2; the same for B.
inline TripartiteState implication2() {
    const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
    Registers g{3, 12, 12, {3, 2, 2}, {3, 2, 2}};
    detail::Builder bld(g);
    auto idx = [](int x1, int x2, int x3) { return (x1 * 2 + x2) * 2 + x3; };
    // Two-qubit-like factors as lists of (x, y, amplitude).
    using Pair = std::vector<std::tuple<int, int, double>>;
    const Pair psi_plus{{0, 1, 1 / s2}, {1, 0, 1 / s2}};
    const Pair psi_minus{{0, 1, 1 / s2}, {1, 0, -1 / s2}};
    const Pair phi_plus{{0, 0, 1 / s2}, {1, 1, 1 / s2}};
    const Pair phi_minus{{0, 0, 1 / s2}, {1, 1, -1 / s2}};
    auto term = [&](int r, const Pair& f1, const Pair& f2, const Pair& f3) {
        for (auto [a1, b1, c1] : f1)
            for (auto [a2, b2, c2] : f2)
                for (auto [a3, b3, c3] : f3) bld.add(r, idx(a1, a2, a3), idx(b1, b2, b3), c1 * c2 * c3 / s3);
    };
    term(0, psi_plus, phi_minus, phi_plus);
    term(1, {{0, 0, 1.0}}, phi_minus, phi_plus);
    term(2, {{2, 2, 1.0}}, {{0, 0, 1.0}}, psi_minus);
    return bld.done("implication2");
}

inline TripartiteState implication3() {
    detail::Builder b({2, 2, 2, {}, {}});
    b.add(0, 0, 1, 0.5);
    b.add(0, 1, 0, 0.5);
    b.add(1, 0, 0, 1.0 / std::sqrt(2.0));
    return b.done("implication3");
}

inline TripartiteState implication4_psi() {
    detail::Builder b({2, 2, 2, {}, {}});
    b.add(0, 0, 0, 1.0 / std::sqrt(2.0));
    b.add(1, 1, 0, 0.5);
    b.add(1, 1, 1, 0.5);
    return b.done("implication4_psi");
}

inline TripartiteState implication4_psi_prime() {
    detail::Builder b({2, 2, 2, {}, {}});
    b.add(0, 0, 0, 1.0 / std::sqrt(2.0));
    b.add(1, 0, 1, 0.5);
    b.add(1, 1, 1, 0.5);
    return b.done("implication4_psi_prime");
}

// R dim 3, A = A1 x A2 (3 x 2), B dim 3.
inline TripartiteState appendixD() {
    detail::Builder b({3, 6, 3, {3, 2}, {}});
    const double c = 1.0 / (2.0 * std::sqrt(2.0));
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) b.add(x, x * 2 + y, y, c);
    b.add(2, 2 * 2 + 0, 2, 1.0 / std::sqrt(2.0));
    return b.done("appendixD");
}

// Purification of J(N)/3 for N(rho) = (tr rho) 1/2 - rho^T/2.
inline TripartiteState qutrit_choi() {
    detail::Builder b({3, 3, 3, {}, {}});
    const double c = 1.0 / std::sqrt(6.0);
    b.add(2, 0, 1, c);
    b.add(1, 0, 2, -c);
    b.add(0, 1, 2, c);
    b.add(2, 1, 0, -c);
    b.add(1, 2, 0, c);
    b.add(0, 2, 1, -c);
    return b.done("qutrit_choi");
}

inline const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names{"ghz",          "implication2",           "implication3", "implication4_psi",
                                                "implication4_psi_prime", "appendixD", "qutrit_choi"};
    return names;
}

inline TripartiteState catalog(const std::string& name, const std::map<std::string, int>& params = {}) {
    if (name == "ghz") {
        auto it = params.find("d");
        return ghz(it == params.end() ? 2 : it->second);
    }
    if (name == "implication2") return implication2();
    if (name == "implication3") return implication3();
    if (name == "implication4_psi") return implication4_psi();
    if (name == "implication4_psi_prime") return implication4_psi_prime();
    if (name == "appendixD") return appendixD();
    if (name == "qutrit_choi") return qutrit_choi();
    throw ValidationError("unknown catalog state: " + name);
}

// Same R-Schmidt basis with flat coefficients 1/sqrt(D).
inline TripartiteState max_entangled_counterpart(const TripartiteState& s) {
    SchmidtData sd = schmidt_decompose(s.amp, s.dR(), s.dA() * s.dB());
    Vec out = Vec::Zero(s.amp.size());
    const double w = 1.0 / std::sqrt(double(sd.rank));
    for (int l = 0; l < sd.rank; ++l) out += w * kron(Vec(sd.left.col(l)), Vec(sd.right.col(l)));
    return make_state(s.regs, out, s.name);
}

inline TripartiteState random_tripartite(int dR, int dA, int dB, std::mt19937_64& rng) {
    return make_state(dR, dA, dB, random_state(dR * dA * dB, rng), "random");
}

}  // namespace qsm
