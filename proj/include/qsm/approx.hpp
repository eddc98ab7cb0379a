#pragma once

#include "qsm/bounds.hpp"
#include "qsm/merge.hpp"

namespace qsm {

struct SmoothingCertificate {
    TripartiteState candidate;
    double epsilon = 0;
    double fidelity_sq = 0;  // |<psi|candidate>|^2
    CostReport cost;
    double output_fidelity_sq = 0;  // target overlap of the branch mixture
    bool pass = false;
};

inline double state_fidelity_sq(const TripartiteState& a, const TripartiteState& b) {
    if (a.amp.size() != b.amp.size() || a.dims() != b.dims()) throw ValidationError("states have different registers");
    return std::norm(a.amp.dot(b.amp));
}

// Builds the exact protocol for the candidate, runs it on psi, and checks the
// output against psi^{RB'B} (x) Phi_L+.
inline SmoothingCertificate verify_approximate_merge(const TripartiteState& psi, const TripartiteState& cand, double eps,
                                                     MergeMode mode, double delta = 1e-6) {
    if (eps < 0) throw ValidationError("epsilon must be non-negative");
    SmoothingCertificate c{cand, eps, state_fidelity_sq(psi, cand), {}, 0, false};
    if (c.fidelity_sq < 1 - eps * eps / 4 - 10 * tol())
        throw ValidationError("candidate lies outside the epsilon/2 ball around the state");
    KIDecomposition d = ki_decompose(cand);
    c.cost = achievable_cost(d, mode, delta);
    MergeProtocol m = build_merge_protocol(cand, d, c.cost);
    auto outs = apply_protocol(m.protocol, merge_input(psi, m.K), psi.dR());
    c.output_fidelity_sq = mixture_fidelity_sq(outs, merge_target(psi, m.L, m.g));
    c.pass = c.output_fidelity_sq >= 1 - eps * eps - 10 * tol();
    return c;
}

namespace detail {

inline TripartiteState truncate_cut(const TripartiteState& s, int cut, int keep) {
    // cut 0: R | AB, 1: A | RB, 2: B | RA.
    const std::vector<int> dims = s.dims();
    std::vector<int> perm{cut};
    for (int k = 0; k < 3; ++k)
        if (k != cut) perm.push_back(k);
    Vec v = permute(s.amp, dims, perm);
    const int dl = dims[cut];
    SchmidtData sd = schmidt_decompose(v, dl, int(v.size() / dl));
    Vec w = Vec::Zero(v.size());
    for (int l = 0; l < std::min(keep, sd.rank); ++l)
        w += sd.coefficients[l] * kron(Vec(sd.left.col(l)), Vec(sd.right.col(l)));
    w /= w.norm();
    std::vector<int> pd{dims[perm[0]], dims[perm[1]], dims[perm[2]]}, inv(3);
    for (int k = 0; k < 3; ++k) inv[perm[k]] = k;
    return make_state(s.regs, permute(w, pd, inv), s.name + "-truncated");
}

}  // namespace detail

struct HeuristicResult {
    SmoothingCertificate best;
    int candidates_tried = 0;
    std::string note = "heuristic: best of seeded candidates, not a search of the full ball";
};

// Seeded best-of-N over the state itself, Schmidt truncations, and random
// perturbations inside the epsilon/2 ball. Lowest cost wins; ties go to fidelity.
inline HeuristicResult approx_heuristic(const TripartiteState& psi, double eps, MergeMode mode, int n, std::uint64_t seed,
                                        double delta = 1e-6) {
    std::vector<TripartiteState> cands{psi};
    for (int cut = 0; cut < 3; ++cut)
        for (int keep = 1; keep < psi.dims()[cut]; ++keep) {
            TripartiteState t = detail::truncate_cut(psi, cut, keep);
            if (state_fidelity_sq(psi, t) >= 1 - eps * eps / 4) cands.push_back(t);
        }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double theta_max = std::asin(std::min(1.0, eps / 2));
    for (int i = 0; i < n; ++i) {
        Vec perp = random_state(int(psi.amp.size()), rng);
        perp -= psi.amp.dot(perp) * psi.amp;
        if (perp.norm() < 1e-12) continue;
        perp /= perp.norm();
        const double th = theta_max * u(rng);
        cands.push_back(make_state(psi.regs, std::cos(th) * psi.amp + std::sin(th) * perp, psi.name + "-perturbed"));
    }
    HeuristicResult res;
    bool have = false;
    for (const auto& c : cands) {
        SmoothingCertificate cert;
        try {
            cert = verify_approximate_merge(psi, c, eps, mode, delta);
        } catch (const std::exception&) {
            continue;
        }
        ++res.candidates_tried;
        if (!cert.pass) continue;
        const bool better = !have || cert.cost.cost_bits < res.best.cost.cost_bits - 1e-12 ||
                            (std::abs(cert.cost.cost_bits - res.best.cost.cost_bits) <= 1e-12 &&
                             cert.output_fidelity_sq > res.best.output_fidelity_sq);
        if (better) {
            res.best = cert;
            have = true;
        }
    }
    if (!have) throw NumericalError("approx_heuristic: no candidate passed");
    return res;
}

// ---------- ensemble certificates ----------

// Members live on R (x) Abar(L) (x) [B' B Bbar], with Bbar of dimension L g.
struct EnsembleCertificate {
    std::vector<double> weights;
    std::vector<Vec> members;
    long long K = 1, L = 1;
    int g = 1;
    double epsilon = 0;
};

inline bool check_ensemble_certificate(const TripartiteState& s, const EnsembleCertificate& c) {
    if (c.weights.size() != c.members.size() || c.members.empty()) throw ValidationError("malformed ensemble");
    if (c.K < 1 || c.L < 1 || c.g < 1) throw ValidationError("resource dimensions must be positive");
    const long nb = long(s.dA()) * s.dB() * c.L * c.g;
    const long n = long(s.dR()) * c.L * nb;
    double wsum = 0;
    for (std::size_t j = 0; j < c.members.size(); ++j) {
        if (c.weights[j] < -tol()) throw ValidationError("negative ensemble weight");
        if (c.members[j].size() != n) throw ValidationError("ensemble member has wrong dimension");
        if (std::abs(c.members[j].norm() - 1) > 1e-6) throw ValidationError("ensemble member is not normalized");
        wsum += c.weights[j];
    }
    if (std::abs(wsum - 1) > 1e-6) throw ValidationError("ensemble weights do not sum to 1");

    // Left: spectrum of psi^B (x) 1_K/K. Right: averaged B-side spectra.
    std::vector<double> left;
    for (double x : spectrum(s.rho_B()))
        for (long long k = 0; k < c.K; ++k) left.push_back(x / double(c.K));
    std::vector<double> right(std::size_t(nb), 0.0);
    for (std::size_t j = 0; j < c.members.size(); ++j) {
        Mat m = reshape(c.members[j], long(s.dR()) * c.L, nb);
        Eigen::JacobiSVD<Mat> svd(m);
        RVec sv = svd.singularValues();
        for (long i = 0; i < sv.size(); ++i) right[i] += c.weights[j] * sv(i) * sv(i);
    }
    const bool major = majorization_check(left, right);
    double f = 0;
    const Vec target = merge_target(s, c.L, c.g);
    for (std::size_t j = 0; j < c.members.size(); ++j) f += c.weights[j] * std::norm(target.dot(c.members[j]));
    return major && f >= 1 - c.epsilon * c.epsilon - tol();
}

// Exact converse test on the state as given (no counterpart substitution).
inline bool exact_converse_holds(const TripartiteState& s, long long K, long long L) {
    return resource_majorizes(spectrum(s.rho_B()), spectrum(s.rho_AB()), K, L);
}

inline EnsembleCertificate singleton_certificate(const TripartiteState& s, long long K, long long L) {
    EnsembleCertificate c;
    c.weights = {1.0};
    c.members = {merge_target(s, L, 1)};
    c.K = K;
    c.L = L;
    return c;
}

inline EnsembleCertificate certificate_from_run(const TripartiteState& psi, const MergeProtocol& m, double eps) {
    EnsembleCertificate c;
    for (const auto& o : apply_protocol(m.protocol, merge_input(psi, m.K), psi.dR())) {
        c.weights.push_back(o.probability);
        c.members.push_back(o.state);
    }
    double t = 0;
    for (double w : c.weights) t += w;
    for (double& w : c.weights) w /= t;
    c.K = m.K;
    c.L = m.L;
    c.g = m.g;
    c.epsilon = eps;
    return c;
}

}  // namespace qsm
