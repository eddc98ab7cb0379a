#pragma once

#include "qsm/statespace.hpp"

#include <limits>

namespace qsm {

inline bool r_maximally_mixed(const TripartiteState& s) {
    Mat r = s.rho_R();
    const int D = numeric_rank(eigh(r).values);
    return (r - Mat::Identity(s.dR(), s.dR()) / double(D)).cwiseAbs().maxCoeff() <= 10 * tol();
}

// The state itself when psi^R = 1/D, else its maximally entangled counterpart.
inline TripartiteState converse_subject(const TripartiteState& s, bool* used_counterpart = nullptr) {
    const bool ok = r_maximally_mixed(s);
    if (used_counterpart) *used_counterpart = !ok;
    return ok ? s : max_entangled_counterpart(s);
}

struct SimpleConverse {
    double catalytic = 0;
    double noncatalytic = 0;
    double lambda0_B = 0;
    int D = 1;
    bool used_counterpart = false;
};

inline SimpleConverse converse_simple(const TripartiteState& state) {
    SimpleConverse out;
    TripartiteState s = converse_subject(state, &out.used_counterpart);
    out.D = numeric_rank(eigh(s.rho_R()).values);
    out.lambda0_B = eigh(s.rho_B()).values(0);
    const double x = out.lambda0_B * out.D;
    out.catalytic = std::log2(x);
    out.noncatalytic = std::log2(std::ceil(x - 10 * tol()));
    return out;
}

// Descending spectrum of (1_K/K) (x) rho_B majorized by that of (1_L/L) (x) rho_AB.
// Both prefix-sum curves are concave and piecewise linear, so checking the
// breakpoints of the left side suffices.
inline bool resource_majorizes(const std::vector<double>& specB, const std::vector<double>& specAB, long long K,
                               long long L) {
    auto prefix_ab = [&](long long t) {
        long long full = t / L, rem = t % L;
        double acc = 0;
        for (long long i = 0; i < full && i < (long long)specAB.size(); ++i) acc += specAB[i];
        if (full < (long long)specAB.size()) acc += double(rem) * specAB[full] / double(L);
        return acc;
    };
    double x = 0;
    for (std::size_t i = 0; i < specB.size(); ++i) {
        x += specB[i];
        if (x > prefix_ab((long long)(i + 1) * K) + tol()) return false;
    }
    return true;
}

struct SearchConverse {
    double catalytic = std::numeric_limits<double>::infinity();
    long long K_cat = 0, L_cat = 0;
    double noncatalytic = std::numeric_limits<double>::infinity();
    long long K_noncat = 0;
    long long K_max = 64, L_max = 64;
    double eigenvalue_bound = 0;  // log2(lambda0^B / lambda0^AB)
    bool used_counterpart = false;
};

inline SearchConverse converse_search(const TripartiteState& state, long long K_max = 64, long long L_max = 64) {
    if (K_max < 1 || L_max < 1) throw ValidationError("converse_search: caps must be at least 1");
    SearchConverse out;
    out.K_max = K_max;
    out.L_max = L_max;
    TripartiteState s = converse_subject(state, &out.used_counterpart);
    std::vector<double> b = spectrum(s.rho_B()), ab = spectrum(s.rho_AB());
    out.eigenvalue_bound = std::log2(b.front() / ab.front());
    for (long long K = 1; K <= K_max; ++K)
        for (long long L = 1; L <= L_max; ++L) {
            const double c = std::log2(double(K)) - std::log2(double(L));
            if (c >= out.catalytic - 1e-15) continue;
            if (resource_majorizes(b, ab, K, L)) {
                out.catalytic = c;
                out.K_cat = K;
                out.L_cat = L;
            }
        }
    for (long long K = 1; K <= K_max; ++K)
        if (resource_majorizes(b, ab, K, 1)) {
            out.noncatalytic = std::log2(double(K));
            out.K_noncat = K;
            break;
        }
    return out;
}

// ---------- conditional max-entropy ----------

struct HmaxResult {
    double value = 0;  // log2 of the certified upper bound
    double lower = 0;  // log2 of the attained dual value
    double upper = 0;
    int iterations = 0;
    Mat sigma;  // optimizing B state
};

namespace detail {

// Orthonormal Hermitian basis of dB x dB matrices; the first dB are diagonal units.
inline std::vector<Mat> hermitian_basis(int d) {
    std::vector<Mat> out;
    for (int a = 0; a < d; ++a) {
        Mat m = Mat::Zero(d, d);
        m(a, a) = 1;
        out.push_back(m);
    }
    const double s = 1 / std::sqrt(2.0);
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            Mat re = Mat::Zero(d, d), im = Mat::Zero(d, d);
            re(a, b) = re(b, a) = s;
            im(a, b) = cd(0, -s);
            im(b, a) = cd(0, s);
            out.push_back(re);
            out.push_back(im);
        }
    return out;
}

// g(sigma) = tr sqrt(G), G = V^dag (1 (x) sigma) V, with rho = V V^dag.
struct DualEval {
    bool ok = false;
    double g = 0;
    Eigen::VectorXd grad;  // d g / d x_k
    Eigen::MatrixXd hess;
    Mat grad_op;           // B operator of the gradient
};

inline DualEval dual_eval(const Mat& V, int dA, int dB, const Mat& sigma, const std::vector<Mat>& basis,
                          bool second) {
    DualEval e;
    const Mat IA = Mat::Identity(dA, dA);
    Mat G = V.adjoint() * kron(IA, sigma) * V;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (G + G.adjoint()));
    const RVec& lam = es.eigenvalues();
    if (lam.minCoeff() <= 0) return e;
    const Mat& U = es.eigenvectors();
    const long r = lam.size();
    e.ok = true;
    e.g = lam.cwiseSqrt().sum();
    RVec ih = lam.cwiseSqrt().cwiseInverse();
    Mat W = V * U;  // columns are V u_i
    Mat GI = W * ih.asDiagonal() * W.adjoint();
    e.grad_op = 0.5 * partial_trace(GI, {dA, dB}, {1});
    const std::size_t n = basis.size();
    e.grad.resize(n);
    for (std::size_t k = 0; k < n; ++k) e.grad(k) = (e.grad_op * basis[k]).trace().real();
    if (!second) return e;
    std::vector<Mat> Et(n);
    for (std::size_t k = 0; k < n; ++k) Et[k] = W.adjoint() * kron(IA, basis[k]) * W;
    Eigen::MatrixXd w(r, r);
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < r; ++j) {
            const double si = std::sqrt(lam(i)), sj = std::sqrt(lam(j));
            w(i, j) = -1.0 / (2 * si * sj * (si + sj));
        }
    e.hess.resize(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k; l < n; ++l) {
            double h = 0;
            for (long i = 0; i < r; ++i)
                for (long j = 0; j < r; ++j) h += w(i, j) * (std::conj(Et[k](i, j)) * Et[l](i, j)).real();
            e.hess(k, l) = e.hess(l, k) = h;
        }
    return e;
}

}  // namespace detail

// 2^{H_max(A|B)} = min ||tr_A Z||_inf over Z >= 0 with 1^R (x) Z >= psi; by duality this is
// max over B states sigma of F(rho_AB, 1 (x) sigma)^2 = (tr sqrt(V^dag (1 (x) sigma) V))^2.
// Solved by a log-det barrier Newton method; the Frank-Wolfe gap of the concave dual
// certifies the upper end.
inline HmaxResult h_max_conditional(const Mat& rho_AB, int dA, int dB, double gap = 1e-8, int max_iter = 2000) {
    if (rho_AB.rows() != long(dA) * dB || rho_AB.cols() != rho_AB.rows())
        throw ValidationError("h_max_conditional: dimension mismatch");
    require_psd(rho_AB, "h_max_conditional");
    const Mat rho = rho_AB / rho_AB.trace().real();
    SpectralData sd = eigh(rho);
    const int r = std::max(1, numeric_rank(sd.values));
    Mat V = sd.vectors.leftCols(r) * sd.values.head(r).cwiseMax(0.0).cwiseSqrt().asDiagonal();

    const std::vector<Mat> basis = detail::hermitian_basis(dB);
    const int n = int(basis.size());
    auto to_sigma = [&](const Eigen::VectorXd& x) {
        Mat s = Mat::Zero(dB, dB);
        for (int k = 0; k < n; ++k) s += x(k) * basis[k];
        return s;
    };
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < dB; ++a) x(a) = 1.0 / dB;
    Eigen::VectorXd trace_row = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < dB; ++a) trace_row(a) = 1;

    HmaxResult res;
    auto certify = [&](const detail::DualEval& e, const Mat& sigma) {
        const double fw = std::max(0.0, eigh(e.grad_op).values(0) - (e.grad_op * sigma).trace().real());
        res.lower = 2 * std::log2(e.g);
        res.upper = 2 * std::log2(e.g + fw);
        res.sigma = sigma;
    };
    double mu = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        Mat sigma = to_sigma(x);
        detail::DualEval e = detail::dual_eval(V, dA, dB, sigma, basis, true);
        if (!e.ok) throw NumericalError("h_max_conditional: dual point left the domain");
        certify(e, sigma);
        if (res.upper - res.lower <= gap) break;
        // Barrier terms for mu log det sigma.
        Mat si = sigma.inverse();
        Eigen::VectorXd grad = e.grad;
        Eigen::MatrixXd hess = e.hess;
        std::vector<Mat> sb(n);
        for (int k = 0; k < n; ++k) sb[k] = si * basis[k];
        for (int k = 0; k < n; ++k) {
            grad(k) += mu * sb[k].trace().real();
            for (int l = k; l < n; ++l) {
                const double h = mu * (sb[k] * sb[l]).trace().real();
                hess(k, l) -= h;
                if (l != k) hess(l, k) -= h;
            }
        }
        // Equality-constrained Newton step for the concave barrier objective.
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
        kkt.topLeftCorner(n, n) = hess;
        kkt.block(0, n, n, 1) = trace_row;
        kkt.block(n, 0, 1, n) = trace_row.transpose();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
        rhs.head(n) = -grad;
        Eigen::VectorXd step = kkt.fullPivLu().solve(rhs).head(n);
        const double decrement = -step.dot(hess * step);
        auto phi = [&](const Eigen::VectorXd& y) {
            Mat s = to_sigma(y);
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.adjoint()));
            if (es.eigenvalues().minCoeff() <= 0) return -std::numeric_limits<double>::infinity();
            detail::DualEval d = detail::dual_eval(V, dA, dB, s, basis, false);
            if (!d.ok) return -std::numeric_limits<double>::infinity();
            return d.g + mu * es.eigenvalues().array().log().sum();
        };
        const double f0 = phi(x);
        double t = 1;
        while (t > 1e-12 && !(phi(x + t * step) >= f0 + 0.25 * t * grad.dot(step))) t *= 0.5;
        if (t > 1e-12) x += t * step;
        // Shrink the barrier once centered.
        if (decrement < 1e-3 * mu || t <= 1e-12) mu *= 0.1;
        if (mu < 1e-300) mu = 1e-300;
    }
    if (res.upper - res.lower > 1e-6) throw NumericalError("h_max_conditional: iteration cap reached before certification");
    res.value = res.upper;
    return res;
}

inline HmaxResult h_max_conditional(const TripartiteState& s) { return h_max_conditional(s.rho_AB(), s.dA(), s.dB()); }

struct ConverseReport {
    double simple_catalytic = 0, simple_noncatalytic = 0;
    double search_catalytic = 0, search_noncatalytic = 0;
    long long K_max = 64, L_max = 64;
    double eigenvalue_bound = 0;
    double h_max = 0;
    double gap = 0;  // simple_catalytic - h_max
    bool applicable = true;  // false when the counterpart stood in for psi
};

inline ConverseReport compare_bounds(const TripartiteState& state, long long K_max = 64, long long L_max = 64) {
    bool counterpart = false;
    TripartiteState s = converse_subject(state, &counterpart);
    SimpleConverse sc = converse_simple(s);
    SearchConverse sr = converse_search(s, K_max, L_max);
    ConverseReport r;
    r.simple_catalytic = sc.catalytic;
    r.simple_noncatalytic = sc.noncatalytic;
    r.search_catalytic = sr.catalytic;
    r.search_noncatalytic = sr.noncatalytic;
    r.K_max = K_max;
    r.L_max = L_max;
    r.eigenvalue_bound = sr.eigenvalue_bound;
    r.h_max = h_max_conditional(s).value;
    r.gap = r.simple_catalytic - r.h_max;
    r.applicable = !counterpart;
    if (r.gap < -1e-6) throw NumericalError("compare_bounds: simple converse fell below H_max");
    return r;
}

// ---------- qutrit channel N(rho) = (tr rho) 1/2 - rho^T / 2 ----------

inline Mat qutrit_channel(const Mat& x) {
    return 0.5 * x.trace() * Mat::Identity(3, 3) - 0.5 * x.transpose();
}

// Unnormalized Choi operator sum_kl |k><l| (x) N(|k><l|).
inline Mat qutrit_channel_choi() {
    Mat J = Mat::Zero(9, 9);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
            Mat e = Mat::Zero(3, 3);
            e(k, l) = 1;
            J.block(k * 3, l * 3, 3, 3) = qutrit_channel(e);
        }
    return J;
}

struct QutritReport {
    std::vector<double> choi_eigenvalues;
    double choi_trace = 0;
    bool choi_matches_state = false;  // J/3 equals psi^{RB} of the catalog state
    bool r_maximally_mixed = false, b_maximally_mixed = false;
    bool completely_positive = false, trace_preserving = false, unital = false;
    double converse = 0;
};

inline QutritReport qutrit_counterexample_report() {
    QutritReport q;
    Mat J = qutrit_channel_choi();
    q.choi_eigenvalues = spectrum(J);
    q.choi_trace = J.trace().real();
    TripartiteState s = qutrit_choi();
    const Mat I3 = Mat::Identity(3, 3);
    q.choi_matches_state = (s.rho_RB() - J / 3).cwiseAbs().maxCoeff() <= 10 * tol();
    q.r_maximally_mixed = (s.rho_R() - I3 / 3).cwiseAbs().maxCoeff() <= 10 * tol();
    q.b_maximally_mixed = (s.rho_B() - I3 / 3).cwiseAbs().maxCoeff() <= 10 * tol();
    q.completely_positive = eigh(J).values.minCoeff() >= -10 * tol();
    q.trace_preserving = (partial_trace(J, {3, 3}, {0}) - I3).cwiseAbs().maxCoeff() <= 10 * tol();
    q.unital = (qutrit_channel(I3 / 3) - I3 / 3).cwiseAbs().maxCoeff() <= 10 * tol();
    q.converse = converse_simple(s).catalytic;
    return q;
}

}  // namespace qsm
