#pragma once

#include "qsm/numerics.hpp"

#include <json.hpp>

#include <string>

namespace qsm {

struct Branch {
    Mat a_op;  // A input -> A residual
    Mat b_op;  // B input -> B output, isometry
    std::vector<int> label;
};

struct OneWayProtocol {
    int dimAin = 1, dimAout = 1, dimBin = 1, dimBout = 1;
    std::vector<Branch> branches;
    std::string name;
};

struct BranchOutcome {
    std::vector<int> label;
    double probability = 0;
    Vec state;  // normalized, on R (x) Aout (x) Bout
};

struct ProtocolReport {
    double min_fidelity = 1;
    double completeness_residual = 0;
    double isometry_residual = 0;
    double total_probability = 0;
    int outcomes = 0;
    bool pass = false;
};

inline double completeness_residual(const OneWayProtocol& p) {
    Mat s = Mat::Zero(p.dimAin, p.dimAin);
    for (const auto& b : p.branches) s += b.a_op.adjoint() * b.a_op;
    return (s - Mat::Identity(p.dimAin, p.dimAin)).cwiseAbs().maxCoeff();
}

inline double isometry_residual(const OneWayProtocol& p) {
    double worst = 0;
    for (const auto& b : p.branches) {
        Mat g = b.b_op.adjoint() * b.b_op - Mat::Identity(b.b_op.cols(), b.b_op.cols());
        worst = std::max(worst, g.size() ? g.cwiseAbs().maxCoeff() : 0.0);
    }
    return worst;
}

// Rejects protocols that break the shape, completeness, or isometry contract.
inline void validate_protocol(const OneWayProtocol& p) {
    if (p.branches.empty()) throw ValidationError("protocol has no branches");
    for (const auto& b : p.branches) {
        if (b.a_op.rows() != p.dimAout || b.a_op.cols() != p.dimAin)
            throw ValidationError("protocol branch A operator has wrong shape");
        if (b.b_op.rows() != p.dimBout || b.b_op.cols() != p.dimBin)
            throw ValidationError("protocol branch B operator has wrong shape");
    }
    if (completeness_residual(p) > 10 * tol()) throw ValidationError("protocol A-side measurement is not complete");
    if (isometry_residual(p) > 10 * tol()) throw ValidationError("protocol B-side operator is not an isometry");
}

// Drops branches that carry no weight on any input, keeping completeness intact.
inline void prune_branches(OneWayProtocol& p) {
    std::vector<Branch> kept;
    for (auto& b : p.branches)
        if (b.a_op.squaredNorm() > tol()) kept.push_back(b);
    if (kept.size() == p.branches.size() || kept.empty()) return;
    OneWayProtocol trial = p;
    trial.branches = kept;
    if (completeness_residual(trial) <= 10 * tol()) p.branches = std::move(kept);
}

// Adds rank-one branches that finish the A-side measurement: sqrt(mu) |0><v| for
// each eigenpair of 1 - sum a^dagger a, with B doing b_default.
inline void complete_measurement(OneWayProtocol& p, const Mat& b_default, std::vector<int> label_prefix) {
    Mat s = Mat::Identity(p.dimAin, p.dimAin);
    for (const auto& b : p.branches) s -= b.a_op.adjoint() * b.a_op;
    SpectralData sd = eigh(s);
    int k = 0;
    for (Eigen::Index i = 0; i < sd.values.size(); ++i) {
        if (sd.values(i) <= 10 * tol()) continue;
        Branch br;
        br.a_op = Mat::Zero(p.dimAout, p.dimAin);
        br.a_op.row(0) = std::sqrt(sd.values(i)) * sd.vectors.col(i).adjoint();
        br.b_op = b_default;
        br.label = label_prefix;
        br.label.push_back(k++);
        p.branches.push_back(std::move(br));
    }
}

// Extends raw to an isometry: exact on the part of the input where raw already is
// one, and sends the rest into the unused part of the output.
inline Mat complete_isometry(const Mat& raw) {
    const Eigen::Index out = raw.rows(), in = raw.cols();
    if (out < in) throw ValidationError("complete_isometry: output smaller than input");
    SpectralData g = eigh(raw.adjoint() * raw);
    int e = 0;
    while (e < g.values.size() && g.values(e) > 1 - 1e-7) ++e;
    Mat ebasis = g.vectors.leftCols(e), rest = g.vectors.rightCols(in - e);
    Mat img = e > 0 ? polar_isometry(raw * ebasis) : Mat(out, 0);
    Mat free = complement(img, out);
    Mat result = img * ebasis.adjoint();
    if (rest.cols() > 0) result += free.leftCols(rest.cols()) * rest.adjoint();
    return result;
}

inline std::vector<BranchOutcome> apply_protocol(const OneWayProtocol& p, const Vec& input, int dR = 1) {
    const long n = long(dR) * p.dimAin * p.dimBin;
    if (input.size() != n) throw ValidationError("apply_protocol: input dimension mismatch");
    std::vector<BranchOutcome> out;
    for (const auto& br : p.branches) {
        Vec o(long(dR) * p.dimAout * p.dimBout);
        for (int r = 0; r < dR; ++r) {
            Mat m = reshape(input.segment(long(r) * p.dimAin * p.dimBin, long(p.dimAin) * p.dimBin), p.dimAin, p.dimBin);
            Mat y = br.a_op * m * br.b_op.transpose();
            o.segment(long(r) * y.size(), y.size()) = flatten(y);
        }
        double pr = o.squaredNorm();
        if (pr <= tol()) continue;
        out.push_back({br.label, pr, o / std::sqrt(pr)});
    }
    return out;
}

inline ProtocolReport verify_protocol(const OneWayProtocol& p, const Vec& input, const Vec& target, int dR = 1) {
    ProtocolReport rep;
    rep.completeness_residual = completeness_residual(p);
    rep.isometry_residual = isometry_residual(p);
    auto outs = apply_protocol(p, input, dR);
    rep.outcomes = int(outs.size());
    for (const auto& o : outs) {
        if (o.state.size() != target.size()) throw ValidationError("verify_protocol: target dimension mismatch");
        rep.min_fidelity = std::min(rep.min_fidelity, fidelity_pure(o.state, target));
        rep.total_probability += o.probability;
    }
    if (outs.empty()) rep.min_fidelity = 0;
    rep.pass = rep.min_fidelity >= 1 - 10 * tol() && rep.completeness_residual <= 10 * tol() &&
               rep.isometry_residual <= 10 * tol() && std::abs(rep.total_probability - 1) <= 10 * tol();
    return rep;
}

// <target| (sum_m p_m |out_m><out_m|) |target>
inline double mixture_fidelity_sq(const std::vector<BranchOutcome>& outs, const Vec& target) {
    double f = 0;
    for (const auto& o : outs) f += o.probability * std::norm(target.dot(o.state));
    return f;
}

// ---------- generalized Pauli operators and teleportation ----------

inline Mat shift_op(int d, int a) {
    Mat x = Mat::Zero(d, d);
    for (int k = 0; k < d; ++k) x((k + a) % d, k) = 1.0;
    return x;
}

inline Mat clock_op(int d, int b) {
    Mat z = Mat::Zero(d, d);
    for (int k = 0; k < d; ++k) z(k, k) = std::polar(1.0, 2 * kPi * double(b) * k / d);
    return z;
}

inline Mat pauli(int d, int a, int b) { return shift_op(d, a) * clock_op(d, b); }

// |Phi_ab> = (1 (x) X^a Z^b) |Phi+>.
inline Vec bell_vector(int d, int a, int b) {
    return kron(Mat::Identity(d, d), pauli(d, a, b)) * max_entangled(d);
}

// A holds the teleported system X and half of Phi_d+ (input X (x) Abar); B holds Bbar.
inline OneWayProtocol teleportation_protocol(int d) {
    if (d < 1) throw ValidationError("teleportation_protocol: d must be positive");
    OneWayProtocol p;
    p.name = "teleportation";
    p.dimAin = d * d;
    p.dimAout = 1;
    p.dimBin = p.dimBout = d;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            Branch br;
            br.a_op = bell_vector(d, a, b).adjoint();
            br.b_op = pauli(d, a, b).transpose();
            br.label = {a, b};
            p.branches.push_back(std::move(br));
        }
    validate_protocol(p);
    return p;
}

// ---------- flattening to a maximally entangled state ----------

struct FlattenStep {
    std::vector<int> indices;  // the L entries served, in level order
    double w = 0;              // per-level mass
};

// Greedy mass splitting; level mass is capped so that max <= total / L survives each step.
inline std::vector<FlattenStep> flatten_schedule(const std::vector<double>& p, int L) {
    const int n = int(p.size());
    if (L < 1) throw ValidationError("flatten_to_uniform: L must be positive");
    if (L > n) throw ValidationError("flatten_to_uniform: L exceeds the number of levels");
    double total = 0;
    for (double x : p) {
        if (x < -tol()) throw ValidationError("flatten_to_uniform: negative probability");
        total += x;
    }
    if (std::abs(total - 1) > 1e-6) throw ValidationError("flatten_to_uniform: probabilities do not sum to 1");
    for (double x : p)
        if (x > 1.0 / L + tol())
            throw ValidationError("flatten_to_uniform: majorization fails (max p exceeds 1/L)");
    std::vector<double> m(p);
    for (double& x : m) x = std::max(0.0, x);
    std::vector<FlattenStep> steps;
    for (int guard = 0; guard < 4 * n + 4; ++guard) {
        double rem = std::accumulate(m.begin(), m.end(), 0.0);
        if (rem <= tol() * 1e-3) return steps;
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return m[x] > m[y]; });
        if (m[order[0]] > rem / L + 10 * tol())
            throw NumericalError("flatten_to_uniform: invariant max <= total/L violated");
        if (m[order[L - 1]] <= 0) throw NumericalError("flatten_to_uniform: fewer than L levels hold mass");
        double next = L < n ? m[order[L]] : 0.0;
        double w = std::min(m[order[L - 1]], std::max(0.0, rem / L - next));
        if (w <= 0) w = m[order[L - 1]];
        FlattenStep st;
        st.w = w;
        for (int t = 0; t < L; ++t) {
            st.indices.push_back(order[t]);
            m[order[t]] -= w;
            if (m[order[t]] < tol() * 1e-3) m[order[t]] = 0;
        }
        steps.push_back(std::move(st));
    }
    throw NumericalError("flatten_to_uniform: schedule did not terminate");
}

// Source sum_i sqrt(p_i)|i>|i> on A(n) (x) B(n). Every branch leaves Phi_L+ on
// Aout(L) (x) B, using the first L levels of B.
inline OneWayProtocol flatten_to_uniform(const std::vector<double>& p, int L) {
    const int n = int(p.size());
    std::vector<FlattenStep> steps = flatten_schedule(p, L);
    OneWayProtocol out;
    out.name = "flatten";
    out.dimAin = n;
    out.dimAout = L;
    out.dimBin = out.dimBout = n;
    int m = 0;
    for (const auto& st : steps) {
        Branch br;
        br.a_op = Mat::Zero(L, n);
        br.b_op = Mat::Zero(n, n);
        std::vector<bool> used(n, false);
        for (int t = 0; t < L; ++t) {
            int i = st.indices[t];
            br.a_op(t, i) = std::sqrt(st.w / p[i]);
            br.b_op(t, i) = 1.0;
            used[i] = true;
        }
        int row = L;
        for (int i = 0; i < n; ++i)
            if (!used[i]) br.b_op(row++, i) = 1.0;
        br.label = {m++};
        out.branches.push_back(std::move(br));
    }
    complete_measurement(out, Mat::Identity(n, n), {-1});
    prune_branches(out);
    validate_protocol(out);
    return out;
}

inline Vec flatten_source(const std::vector<double>& p) {
    const int n = int(p.size());
    Vec v = Vec::Zero(long(n) * n);
    for (int i = 0; i < n; ++i) v(long(i) * n + i) = std::sqrt(std::max(0.0, p[i]));
    return v;
}

// Phi_L+ on Aout(L) (x) B(n).
inline Vec flatten_target(int L, int n) {
    Vec v = Vec::Zero(long(L) * n);
    for (int t = 0; t < L; ++t) v(long(t) * n + t) = 1.0 / std::sqrt(double(L));
    return v;
}

// ---------- JSON dump ----------

inline nlohmann::json matrix_json(const Mat& m) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r, c;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r.push_back(m(i, j).real());
            c.push_back(m(i, j).imag());
        }
        re.push_back(r);
        im.push_back(c);
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

inline nlohmann::json protocol_json(const OneWayProtocol& p) {
    nlohmann::json j;
    j["name"] = p.name;
    j["dims"] = {{"A_in", p.dimAin}, {"A_out", p.dimAout}, {"B_in", p.dimBin}, {"B_out", p.dimBout}};
    nlohmann::json bs = nlohmann::json::array();
    for (const auto& b : p.branches)
        bs.push_back({{"label", b.label}, {"a_op", matrix_json(b.a_op)}, {"b_op", matrix_json(b.b_op)}});
    j["branches"] = bs;
    return j;
}

}  // namespace qsm
