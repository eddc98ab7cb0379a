#pragma once

#include "qsm/approx.hpp"
#include "qsm/bounds.hpp"
#include "qsm/ki.hpp"
#include "qsm/merge.hpp"
#include "qsm/split.hpp"

#include <functional>
#include <sstream>

namespace qsm {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace corpus {

inline std::string fmt(double x) {
    std::ostringstream o;
    o.precision(10);
    o << x;
    return o.str();
}

inline bool near(double a, double b, double eps) { return std::abs(a - b) <= eps; }

// Projector onto the columns of w.
inline Mat projector(const Mat& w) { return w * w.adjoint(); }

inline double merge_fidelity(const TripartiteState& s, const KIDecomposition& d, MergeMode mode, CostReport* cost = nullptr) {
    CostReport c = achievable_cost(d, mode);
    if (cost) *cost = c;
    return verify_merge(s, build_merge_protocol(s, d, c)).min_fidelity;
}

// Random R-side operator applied to psi: a member of the family sharing psi's AB Schmidt span.
inline TripartiteState steered_member(const TripartiteState& s, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat X(s.dR(), s.dR());
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = cd(g(rng), g(rng));
    Vec out = kron(X, Mat::Identity(long(s.dA()) * s.dB(), long(s.dA()) * s.dB())) * s.amp;
    return make_state(s.regs, out / out.norm(), s.name + "-member");
}

inline std::vector<double> random_distribution(int n, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(n);
    double t = 0;
    for (double& x : p) t += (x = e(rng));
    for (double& x : p) x /= t;
    return p;
}

inline TripartiteState perturb(const TripartiteState& s, double eps, std::mt19937_64& rng) {
    Vec perp = random_state(int(s.amp.size()), rng);
    perp -= s.amp.dot(perp) * s.amp;
    perp /= perp.norm();
    const double th = std::asin(eps / 2) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return make_state(s.regs, std::cos(th) * s.amp + std::sin(th) * perp, s.name + "-perturbed");
}

}  // namespace corpus

inline CheckResult check_ghz_family() {
    CheckResult r{1, "GHZ_d merge costs and protocols", true, ""};
    for (int d = 2; d <= 5; ++d) {
        TripartiteState s = ghz(d);
        KIDecomposition k = ki_decompose(s);
        CostReport nc, cat;
        const double fn = corpus::merge_fidelity(s, k, MergeMode::noncatalytic, &nc);
        const double fc = corpus::merge_fidelity(s, k, MergeMode::catalytic, &cat);
        const bool ok = nc.K == 1 && nc.cost_bits == 0 && cat.cost_bits <= 1e-6 && fn >= 1 - 1e-8 && fc >= 1 - 1e-8;
        r.pass = r.pass && ok;
        r.detail += "d=" + std::to_string(d) + " K=" + std::to_string(nc.K) + " cat=" + corpus::fmt(cat.cost_bits) +
                    " F=" + corpus::fmt(std::min(fn, fc)) + "; ";
    }
    return r;
}

inline CheckResult check_implication2() {
    CheckResult r{2, "Catalytic gain state: catalytic -1, non-catalytic 0", false, ""};
    TripartiteState s = implication2();
    KIDecomposition k = ki_decompose(s);
    CostReport nc, cat;
    const double fn = corpus::merge_fidelity(s, k, MergeMode::noncatalytic, &nc);
    const double fc = corpus::merge_fidelity(s, k, MergeMode::catalytic, &cat);
    r.pass = corpus::near(cat.cost_bits, -1, 1e-12) && nc.cost_bits == 0 && fn >= 1 - 1e-8 && fc >= 1 - 1e-8;
    r.detail = "catalytic K=" + std::to_string(cat.K) + " L=" + std::to_string(cat.L) + " cost=" + corpus::fmt(cat.cost_bits) +
               " noncatalytic cost=" + corpus::fmt(nc.cost_bits) + " F=" + corpus::fmt(std::min(fn, fc));
    return r;
}

inline CheckResult check_implication3() {
    CheckResult r{3, "Gap state: costs, converse and H_max gap", false, ""};
    TripartiteState s = implication3();
    KIDecomposition k = ki_decompose(s);
    CostReport nc = achievable_cost(k, MergeMode::noncatalytic), cat = achievable_cost(k, MergeMode::catalytic);
    ConverseReport b = compare_bounds(s);
    const bool costs = corpus::near(nc.cost_bits, 1, 1e-12) && corpus::near(cat.cost_bits, 1, 1e-12);
    const bool conv = corpus::near(b.simple_catalytic, std::log2(1.5), 1e-9);
    const bool hm = b.h_max > 0.54 && b.h_max < 0.5432;
    const bool gap = b.simple_catalytic - b.h_max >= 0.0417;
    r.pass = costs && conv && hm && gap;
    r.detail = "costs=" + corpus::fmt(cat.cost_bits) + "/" + corpus::fmt(nc.cost_bits) + " converse=" +
               corpus::fmt(b.simple_catalytic) + " h_max=" + corpus::fmt(b.h_max) + " gap=" + corpus::fmt(b.gap);
    return r;
}

inline CheckResult check_implication4() {
    CheckResult r{4, "Three-qubit pair: optimal costs 1 and 0", false, ""};
    TripartiteState psi = implication4_psi(), prime = implication4_psi_prime();
    QubitMergeResult a = qubit_optimal_merge(psi), b = qubit_optimal_merge(prime);
    const ProtocolReport va = verify_merge(psi, a.protocol), vb = verify_merge(prime, b.protocol);
    // A measures in the basis printed for psi'.
    const double s2 = std::sqrt(2.0);
    Vec v0(2), v1(2);
    v0 << 1 + s2, 1;
    v1 << 1 - s2, 1;
    v0 /= v0.norm();
    v1 /= v1.norm();
    bool maximal = true;
    std::string coeffs;
    for (const Vec& v : {v0, v1}) {
        Vec rb = Vec::Zero(4);
        for (int rr = 0; rr < 2; ++rr)
            for (int aa = 0; aa < 2; ++aa)
                for (int bb = 0; bb < 2; ++bb) rb(rr * 2 + bb) += std::conj(v(aa)) * prime.amp(prime.index(rr, aa, bb));
        rb /= rb.norm();
        SchmidtData sd = schmidt_decompose(rb, 2, 2);
        maximal = maximal && sd.rank == 2 && corpus::near(sd.coefficients[0], 1 / s2, 1e-9) &&
                  corpus::near(sd.coefficients[1], 1 / s2, 1e-9);
        for (double c : sd.coefficients) coeffs += corpus::fmt(c) + " ";
    }
    r.pass = a.cost_bits == 1 && b.cost_bits == 0 && va.pass && vb.pass && b.protocol.K == 1 && maximal;
    r.detail = "psi cost=" + corpus::fmt(a.cost_bits) + " psi' cost=" + corpus::fmt(b.cost_bits) +
               " psi' F=" + corpus::fmt(vb.min_fidelity) + " branch Schmidt coefficients " + coeffs;
    return r;
}

inline CheckResult check_appendixD() {
    CheckResult r{5, "Two-block example: decomposition, trajectory and merge", false, ""};
    TripartiteState s = appendixD();
    KIDecomposition k = ki_decompose(s);
    bool dims = k.J() == 2 && k.blocks[0].dim_L == 2 && k.blocks[0].dim_R == 2 && k.blocks[1].dim_L == 2 &&
                k.blocks[1].dim_R == 1;
    double dist = 1;
    if (dims) {
        Mat p0 = Mat::Zero(6, 6), p1 = Mat::Zero(6, 6);
        for (int i = 0; i < 4; ++i) p0(i, i) = 1;
        for (int i = 4; i < 6; ++i) p1(i, i) = 1;
        dist = std::max((corpus::projector(k.blocks[0].W) - p0).norm(), (corpus::projector(k.blocks[1].W) - p1).norm());
    }
    const int rmax = k.trajectory.empty() ? 0 : *std::max_element(k.trajectory.begin(), k.trajectory.end());
    CostReport nc;
    const double f = corpus::merge_fidelity(s, k, MergeMode::noncatalytic, &nc);
    r.pass = dims && dist <= 1e-8 && rmax == 5 && nc.cost_bits == 0 && f >= 1 - 1e-8;
    r.detail = "J=" + std::to_string(k.J()) + " span distance=" + corpus::fmt(dist) + " r=" + std::to_string(rmax) +
               " cost=" + corpus::fmt(nc.cost_bits) + " F=" + corpus::fmt(f);
    return r;
}

inline TripartiteState rank2_in_dim4() {
    Vec v = Vec::Zero(2 * 2 * 4);
    v(0 * 8 + 0 * 4 + 1) = std::sqrt(0.7);
    v(1 * 8 + 1 * 4 + 3) = std::sqrt(0.3);
    return make_state(2, 2, 4, v, "rank2_in_dim4");
}

inline CheckResult check_split() {
    CheckResult r{6, "Splitting costs, protocol and rank monotonicity", true, ""};
    for (int d = 2; d <= 5; ++d) {
        TripartiteState s = ghz(d);
        SplitProtocol sp = build_split_protocol(s);
        const bool ok = corpus::near(split_cost(s).cost_bits, std::log2(double(d)), 1e-12) &&
                        verify_split(s, sp).pass && split_rank_monotone(s, sp);
        r.pass = r.pass && ok;
    }
    TripartiteState s = rank2_in_dim4();
    SplitProtocol sp = build_split_protocol(s);
    const ProtocolReport v = verify_split(s, sp);
    r.pass = r.pass && corpus::near(split_cost(s).cost_bits, 1, 1e-12) && sp.K == 2 && v.pass && split_rank_monotone(s, sp);
    r.detail = "GHZ_2..5 ok; rank-2-in-dim-4 cost=" + corpus::fmt(split_cost(s).cost_bits) + " F=" + corpus::fmt(v.min_fidelity);
    return r;
}

inline CheckResult check_qutrit() {
    CheckResult r{7, "Qutrit channel artifacts", false, ""};
    QutritReport q = qutrit_counterexample_report();
    TripartiteState s = qutrit_choi();
    const Mat I3 = Mat::Identity(3, 3) / 3;
    const bool marg = (s.rho_R() - I3).cwiseAbs().maxCoeff() <= 1e-9 && (s.rho_B() - I3).cwiseAbs().maxCoeff() <= 1e-9;
    r.pass = marg && q.choi_matches_state && q.unital && q.trace_preserving && q.completely_positive &&
             std::abs(q.converse) <= 1e-9;
    r.detail = "converse=" + corpus::fmt(q.converse) + " unital=" + std::to_string(q.unital) +
               " Choi trace=" + corpus::fmt(q.choi_trace);
    return r;
}

inline CheckResult check_property_suite(std::uint64_t seed, int count = 200) {
    CheckResult r{8, "Random-state property suite", true, ""};
    std::mt19937_64 rng(seed);
    int fa = 0, fb = 0, fc = 0, fd = 0, fe = 0;
    double worst_res = 0;
    for (int i = 0; i < count; ++i) {
        const int dR = 2 + int(rng() % 2), dA = 2 + int(rng() % 3), dB = 2 + int(rng() % 3);
        TripartiteState s = random_tripartite(dR, dA, dB, rng);
        KIDecomposition k = ki_decompose(s);
        CostReport nc = achievable_cost(k, MergeMode::noncatalytic);
        CostReport cat = achievable_cost(k, MergeMode::catalytic);
        MergeProtocol m = build_merge_protocol(s, k, nc);
        const double res = completeness_residual(m.protocol);
        worst_res = std::max(worst_res, res);
        if (res > 1e-8) ++fa;
        if (nc.cost_bits < converse_search(s).noncatalytic - 1e-9) ++fb;
        const double rank_bound = std::log2(double(numeric_rank(eigh(s.rho_A()).values)));
        if (nc.cost_bits > rank_bound + 1e-9 || cat.cost_bits > rank_bound + 1e-6) ++fc;
        ConverseReport b = compare_bounds(s);
        if (b.simple_catalytic < b.h_max - 1e-6) ++fd;
        bool eq = verify_merge(s, m).pass && verify_merge(max_entangled_counterpart(s), m).pass;
        for (int t = 0; t < 5 && eq; ++t) eq = verify_merge(corpus::steered_member(s, rng), m).pass;
        if (!eq) ++fe;
    }
    r.pass = fa + fb + fc + fd + fe == 0;
    r.detail = std::to_string(count) + " states; failures a=" + std::to_string(fa) + " b=" + std::to_string(fb) +
               " c=" + std::to_string(fc) + " d=" + std::to_string(fd) + " e=" + std::to_string(fe) +
               "; worst completeness residual " + corpus::fmt(worst_res);
    return r;
}

inline CheckResult check_approximate_chain(std::uint64_t seed) {
    CheckResult r{9, "Approximate merging chain and singleton certificates", true, ""};
    std::mt19937_64 rng(seed);
    int fails = 0, runs = 0;
    double worst = 0;
    for (double eps : {0.05, 0.1, 0.2})
        for (int i = 0; i < 50; ++i) {
            TripartiteState base = i % 4 == 0   ? implication3()
                                   : i % 4 == 1 ? implication4_psi()
                                   : i % 4 == 2 ? ghz(2)
                                                : random_tripartite(2, 2, 2, rng);
            TripartiteState cand = corpus::perturb(base, eps, rng);
            SmoothingCertificate c = verify_approximate_merge(base, cand, eps, MergeMode::noncatalytic);
            ++runs;
            const double infid = 1 - c.output_fidelity_sq;
            worst = std::max(worst, infid / (eps * eps));
            if (infid > eps * eps) ++fails;
        }
    int mism = 0;
    for (int i = 0; i < 50; ++i) {
        TripartiteState s = random_tripartite(2, 2 + int(rng() % 2), 2 + int(rng() % 2), rng);
        const long long K = 1 + (long long)(rng() % 4), L = 1 + (long long)(rng() % 4);
        if (check_ensemble_certificate(s, singleton_certificate(s, K, L)) != exact_converse_holds(s, K, L)) ++mism;
    }
    r.pass = fails == 0 && mism == 0;
    r.detail = std::to_string(runs) + " perturbations, failures=" + std::to_string(fails) +
               " worst infidelity/eps^2=" + corpus::fmt(worst) + "; singleton mismatches=" + std::to_string(mism) + "/50";
    return r;
}

inline CheckResult check_flattening(std::uint64_t seed) {
    CheckResult r{10, "Flattening oracle", true, ""};
    std::mt19937_64 rng(seed);
    int bad = 0, over = 0, missed = 0;
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + int(rng() % 7);
        const int L = 1 + int(rng() % n);
        std::vector<double> p = corpus::random_distribution(n, rng);
        const double mx = *std::max_element(p.begin(), p.end());
        if (mx > 1.0 / L) {
            const double t = (mx - 1.0 / L) / (mx - 1.0 / n);
            for (double& x : p) x = (1 - t) * x + t / n;
        }
        OneWayProtocol f = flatten_to_uniform(p, L);
        if (verify_protocol(f, flatten_source(p), flatten_target(L, n)).min_fidelity < 1 - 1e-8) ++bad;
        if (int(f.branches.size()) > n) ++over;
    }
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + int(rng() % 7);
        const int L = 2 + int(rng() % (n - 1));
        std::vector<double> p = corpus::random_distribution(n, rng);
        // Push one weight above 1/L.
        const double target = 1.0 / L + 0.01 + 0.5 * (1 - 1.0 / L - 0.01) * std::uniform_real_distribution<double>(0, 1)(rng);
        const double rest = std::accumulate(p.begin() + 1, p.end(), 0.0);
        for (std::size_t k = 1; k < p.size(); ++k) p[k] *= (1 - target) / rest;
        p[0] = target;
        try {
            flatten_to_uniform(p, L);
            ++missed;
        } catch (const ValidationError&) {
        }
    }
    r.pass = bad == 0 && over == 0 && missed == 0;
    r.detail = "fidelity failures=" + std::to_string(bad) + " branch-count excess=" + std::to_string(over) +
               " missed precondition errors=" + std::to_string(missed);
    return r;
}

inline std::vector<CheckResult> run_acceptance(std::uint64_t seed = 7) {
    std::vector<std::function<CheckResult()>> checks{
        check_ghz_family, check_implication2, check_implication3, check_implication4, check_appendixD, check_split,
        check_qutrit,     [seed] { return check_property_suite(seed); },  [seed] { return check_approximate_chain(seed); },
        [seed] { return check_flattening(seed); }};
    std::vector<CheckResult> out;
    int id = 1;
    for (auto& c : checks) {
        try {
            out.push_back(c());
        } catch (const std::exception& e) {
            out.push_back({id, "exception", false, e.what()});
        }
        ++id;
    }
    return out;
}

}  // namespace qsm
