#pragma once

#include "qsm/locc.hpp"
#include "qsm/statespace.hpp"

namespace qsm {

// The B slot of the state plays the role of A', the register A sends away.
struct SplitReport {
    int rank = 0;
    double cost_bits = 0;
    double asymptotic_rate = 0;  // H(A')
    bool borderline = false;     // some Schmidt weight lies in (tau, 10 tau]
};

inline SplitReport split_cost(const TripartiteState& s) {
    SplitReport r;
    std::vector<double> w = spectrum(s.rho_B());
    for (double x : w) {
        if (x > tol()) ++r.rank;
        if (x > tol() && x <= 10 * tol()) r.borderline = true;
    }
    r.cost_bits = std::log2(double(r.rank));
    r.asymptotic_rate = entropy_bits(w);
    return r;
}

struct SplitProtocol {
    OneWayProtocol protocol;
    int K = 1;
    Mat compress;  // A' -> A'', rows span the support of psi^{A'}
};

// Compress A' onto the support of its marginal, teleport with Phi_K+, decompress on B.
// Input R (x) (A A' Abar) (x) Bbar; output R (x) A (x) B.
inline SplitProtocol build_split_protocol(const TripartiteState& s) {
    const int dA = s.dA(), dP = s.dB();
    Mat S = support(s.rho_B());
    const int K = int(S.cols());
    OneWayProtocol tele = teleportation_protocol(K);
    SplitProtocol out;
    out.K = K;
    out.compress = S.adjoint();
    Mat front = kron(out.compress, Mat::Identity(K, K));
    OneWayProtocol& p = out.protocol;
    p.name = "split";
    p.dimAin = dA * dP * K;
    p.dimAout = dA;
    p.dimBin = K;
    p.dimBout = dP;
    for (const auto& br : tele.branches) {
        Branch b;
        b.a_op = kron(Mat(Mat::Identity(dA, dA)), Mat(br.a_op * front));
        b.b_op = S * br.b_op;
        b.label = br.label;
        p.branches.push_back(std::move(b));
    }
    complete_measurement(p, complete_isometry(Mat::Zero(dP, K)), {-1});
    validate_protocol(p);
    return out;
}

inline Vec split_input(const TripartiteState& s, int K) { return kron(s.amp, max_entangled(K)); }

// Schmidt rank across B | R A of every branch output never exceeds K.
inline bool split_rank_monotone(const TripartiteState& s, const SplitProtocol& sp) {
    for (const auto& o : apply_protocol(sp.protocol, split_input(s, sp.K), s.dR())) {
        Mat m = reshape(o.state, long(s.dR()) * s.dA(), s.dB());
        Eigen::JacobiSVD<Mat> svd(m);
        if (numeric_rank(svd.singularValues().cwiseAbs2()) > sp.K) return false;
    }
    return true;
}

inline ProtocolReport verify_split(const TripartiteState& s, const SplitProtocol& sp) {
    return verify_protocol(sp.protocol, split_input(s, sp.K), s.amp, s.dR());
}

}  // namespace qsm
