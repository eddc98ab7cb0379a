#pragma once

#include "qsm/ki.hpp"
#include "qsm/locc.hpp"

#include <numeric>

namespace qsm {

enum class MergeMode { catalytic, noncatalytic };

inline std::string to_string(MergeMode m) { return m == MergeMode::catalytic ? "catalytic" : "noncatalytic"; }

inline MergeMode parse_mode(const std::string& s) {
    if (s == "catalytic") return MergeMode::catalytic;
    if (s == "noncatalytic" || s == "non-catalytic") return MergeMode::noncatalytic;
    throw ValidationError("unknown merge mode: " + s);
}

struct Rational {
    long long num = 0, den = 1;
    double value() const { return double(num) / double(den); }
};

// Fraction with the smallest denominator inside [lo, hi], 0 < lo <= hi.
inline std::optional<Rational> simplest_rational(double lo, double hi, long long cap) {
    if (!(lo > 0) || hi < lo) return std::nullopt;
    // Convergent recurrences on the continued fraction of the interval.
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double a = lo, b = hi;
    for (int depth = 0; depth < 64; ++depth) {
        double fa = std::floor(a);
        long long t;
        bool done = false;
        if (fa == a) {
            t = (long long)fa;
            done = true;
        } else if (fa + 1 <= b) {
            t = (long long)fa + 1;
            done = true;
        } else {
            t = (long long)fa;
        }
        long long p2 = t * p1 + p0, q2 = t * q1 + q0;
        if (q2 > cap) return std::nullopt;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if (done) return Rational{p1, q1};
        double na = 1.0 / (b - fa), nb = 1.0 / (a - fa);
        a = na;
        b = nb;
    }
    return std::nullopt;
}

struct BlockCost {
    int j = 0;
    double lambda0 = 0;
    int dim_R = 0;
    double product = 0;  // lambda0 * dim_R
    long long K_j = 1, L_j = 1;
};

struct CostReport {
    MergeMode mode = MergeMode::noncatalytic;
    long long K = 1, L = 1;
    double cost_bits = 0;
    std::vector<BlockCost> per_block;
    int j0 = 0;
    double delta = 0;
    Rational lambda_tilde{1, 1};
    std::string construction;
};

struct CostOverflow : ValidationError {
    using ValidationError::ValidationError;
};

inline CostReport achievable_cost(const KIDecomposition& d, MergeMode mode, double delta = 1e-6) {
    if (mode == MergeMode::catalytic && !(delta > 0)) throw ValidationError("achievable_cost: delta must be positive");
    CostReport rep;
    rep.mode = mode;
    rep.delta = mode == MergeMode::catalytic ? delta : 0.0;
    double best = -1;
    for (const auto& b : d.blocks) {
        if (b.p <= 0) continue;
        BlockCost bc{b.j, b.lambda0, b.dim_R, b.lambda0 * b.dim_R, 1, 1};
        if (bc.product > best + 10 * tol()) {
            best = bc.product;
            rep.j0 = int(rep.per_block.size());
        }
        rep.per_block.push_back(bc);
    }
    if (rep.per_block.empty()) throw ValidationError("achievable_cost: decomposition carries no weight");

    if (mode == MergeMode::noncatalytic) {
        rep.construction = "ki-noncatalytic";
        long long K = 1;
        for (auto& bc : rep.per_block) {
            bc.K_j = (long long)std::ceil(bc.product - 10 * tol());
            K = std::max(K, bc.K_j);
        }
        rep.K = K;
        rep.L = 1;
        rep.cost_bits = std::log2(double(K));
        rep.j0 = rep.per_block[rep.j0].j;
        return rep;
    }

    rep.construction = "ki-catalytic";
    const BlockCost& top = rep.per_block[rep.j0];
    const double lo = top.lambda0 - tol(), hi = top.lambda0 * std::exp2(delta);
    std::optional<Rational> lt = simplest_rational(lo, hi, 10000);
    if (!lt) lt = simplest_rational(lo, hi, 1000000);
    if (!lt) throw CostOverflow("achievable_cost: no rational approximation with denominator <= 1e6; increase delta");
    rep.lambda_tilde = *lt;
    const long long Dj0 = top.dim_R;
    __int128 K = 1;
    const __int128 limit = (__int128)1 << 63;
    for (auto& bc : rep.per_block) {
        long long num = Dj0 * lt->num, den = (long long)bc.dim_R * lt->den;
        long long g = std::gcd(num, den);
        bc.K_j = num / g;
        bc.L_j = den / g;
        __int128 term = (__int128)bc.dim_R * bc.K_j;
        __int128 gg = std::gcd((long long)(K % limit), (long long)term);
        K = K / gg * term;
        if (K >= limit) throw CostOverflow("achievable_cost: LCM exceeds 2^63; increase delta");
    }
    __int128 Lnum = K * lt->den, Lden = (__int128)lt->num * Dj0;
    if (Lnum % Lden != 0) throw NumericalError("achievable_cost: L is not integral");
    rep.K = (long long)K;
    rep.L = (long long)(Lnum / Lden);
    rep.cost_bits = std::log2(double(rep.K)) - std::log2(double(rep.L));
    rep.j0 = top.j;
    return rep;
}

// ---------- protocol ----------

struct MergeProtocol {
    OneWayProtocol protocol;
    long long K = 1, L = 1;
    int g = 1;  // junk register on B
};

// psi (x) Phi_K+ arranged as R (x) (A Abar) (x) (B Bbar).
inline Vec merge_input(const TripartiteState& s, long long K) {
    Vec full = kron(s.amp, max_entangled(int(K)));
    return permute(full, {s.dR(), s.dA(), s.dB(), int(K), int(K)}, {0, 1, 3, 2, 4});
}

// psi^{R B' B} (x) Phi_L+ (x) |0>_G arranged as R (x) Aout (x) (B' B Bbar_out G).
inline Vec merge_target(const TripartiteState& s, long long L, int g) {
    const long nb = long(s.dA()) * s.dB();
    Vec out = Vec::Zero(long(s.dR()) * L * nb * L * g);
    for (int r = 0; r < s.dR(); ++r)
        for (long l = 0; l < L; ++l)
            for (long x = 0; x < nb; ++x) {
                long idx = ((long(r) * L + l) * nb + x) * L + l;
                out(idx * g) = s.amp(long(r) * nb + x) / std::sqrt(double(L));
            }
    return out;
}

inline ProtocolReport verify_merge(const TripartiteState& s, const MergeProtocol& m) {
    return verify_protocol(m.protocol, merge_input(s, m.K), merge_target(s, m.L, m.g), s.dR());
}

inline MergeProtocol build_merge_protocol(const TripartiteState& s, const KIDecomposition& d, const CostReport& cost) {
    const long long K = cost.K, L = cost.L;
    const int dA = s.dA(), dB = s.dB();
    const int DL = d.dLmax, DR = d.dRmax, dbL = d.dbL, dbR = d.dbR;
    const int g = int((long long)(dB * K + (long long)dA * dB * L - 1) / ((long long)dA * dB * L));

    std::vector<const KIBlock*> act;
    for (const auto& b : d.blocks)
        if (b.p > 0) act.push_back(&b);
    const int Ja = int(act.size());

    // Per active block: flattening of mu (padded to DL) (x) uniform(K) into Phi_{D_j L}.
    std::vector<OneWayProtocol> flat;
    std::vector<std::vector<double>> flat_p;
    std::vector<std::vector<std::vector<int>>> perm;  // perm[j][m1][x] = y
    for (const KIBlock* b : act) {
        std::vector<double> p(std::size_t(DL) * K, 0.0);
        for (int k = 0; k < b->dim_L; ++k)
            for (long long kk = 0; kk < K; ++kk) p[std::size_t(k) * K + kk] = std::max(0.0, b->omega(k, k).real()) / K;
        double tot = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& x : p) x /= tot;
        OneWayProtocol f = flatten_to_uniform(p, int(b->dim_R * L));
        flat_p.push_back(p);
        std::vector<std::vector<int>> pm;
        for (const auto& br : f.branches) {
            std::vector<int> row(p.size(), -1);
            for (Eigen::Index x = 0; x < br.b_op.cols(); ++x)
                for (Eigen::Index y = 0; y < br.b_op.rows(); ++y)
                    if (std::abs(br.b_op(y, x)) > 0.5) row[x] = int(y);
            pm.push_back(row);
        }
        flat.push_back(std::move(f));
        perm.push_back(std::move(pm));
    }

    // B's final embedding: F_j(d', c) = sum_k sqrt(mu_k) U_A^dag|j,k,d'> (x) U_B^dag|j,k,c>.
    auto ua_col = [&](int j, int k, int q) -> Vec { return d.U_A.row((long(j) * DL + k) * DR + q).adjoint(); };
    auto ub_col = [&](int j, int k, int c) -> Vec { return d.U_B.row((long(j) * dbL + k) * dbR + c).adjoint(); };
    std::vector<std::vector<Vec>> F(Ja);
    for (int a = 0; a < Ja; ++a) {
        const KIBlock& b = *act[a];
        for (int q = 0; q < b.dim_R; ++q)
            for (int c = 0; c < b.dim_bR; ++c) {
                Vec v = Vec::Zero(long(dA) * dB);
                for (int k = 0; k < b.rank_omega; ++k)
                    v += std::sqrt(b.omega(k, k).real()) * kron(ua_col(b.j, k, q), ub_col(b.j, k, c));
                F[a].push_back(v);
            }
    }

    // Sector outcomes (m1, teleport pair) with their probabilities.
    struct Outcome {
        int m1, ta, tb;
        double prob;
    };
    std::vector<std::vector<Outcome>> outs(Ja);
    for (int a = 0; a < Ja; ++a) {
        const int Dj = act[a]->dim_R;
        for (int m1 = 0; m1 < int(flat[a].branches.size()); ++m1) {
            const Mat& Mf = flat[a].branches[m1].a_op;
            double pr = 0;
            for (Eigen::Index i = 0; i < Mf.cols(); ++i) pr += Mf.col(i).squaredNorm() * flat_p[a][i];
            if (pr <= 1e-14) continue;
            for (int ta = 0; ta < Dj; ++ta)
                for (int tb = 0; tb < Dj; ++tb) outs[a].push_back({m1, ta, tb, pr / (Dj * Dj)});
        }
    }
    // Common refinement: label n has the same probability in every sector, so
    // branches never reweight the superposition over j.
    std::vector<double> cuts{0.0, 1.0};
    for (const auto& o : outs) {
        double acc = 0, tot = 0;
        for (const auto& x : o) tot += x.prob;
        for (std::size_t i = 0; i + 1 < o.size(); ++i) cuts.push_back((acc += o[i].prob) / tot);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> edges{0.0};
    for (double c : cuts)
        if (c - edges.back() > 1e-13) edges.push_back(c);
    edges.back() = 1.0;
    std::vector<double> pieces, widths;  // midpoint and length of each refined interval
    for (std::size_t i = 1; i < edges.size(); ++i) {
        pieces.push_back(0.5 * (edges[i - 1] + edges[i]));
        widths.push_back(edges[i] - edges[i - 1]);
    }
    auto locate = [&](int a, double mid) {
        double acc = 0, tot = 0;
        for (const auto& x : outs[a]) tot += x.prob;
        for (std::size_t i = 0; i < outs[a].size(); ++i) {
            acc += outs[a][i].prob / tot;
            if (mid < acc || i + 1 == outs[a].size()) return i;
        }
        return outs[a].size() - 1;
    };

    OneWayProtocol proto;
    proto.name = "merge-" + to_string(cost.mode);
    proto.dimAin = int(dA * K);
    proto.dimAout = int(L);
    proto.dimBin = int(dB * K);
    proto.dimBout = int(long(dA) * dB * L * g);
    const long ncode = long(d.J()) * DL * DR;
    Mat UAK = kron(d.U_A, Mat::Identity(K, K));

    for (std::size_t n = 0; n < pieces.size(); ++n)
        for (int m3 = 0; m3 < Ja; ++m3) {
            Mat Mbig = Mat::Zero(L, ncode * K);
            Mat raw = Mat::Zero(proto.dimBout, proto.dimBin);
            for (int a = 0; a < Ja; ++a) {
                const KIBlock& b = *act[a];
                const int Dj = b.dim_R;
                double tot = 0;
                for (const auto& x : outs[a]) tot += x.prob;
                const Outcome& oc = outs[a][locate(a, pieces[n])];
                const int m1 = oc.m1, ta = oc.ta, tb = oc.tb;
                const double share = std::sqrt(widths[n] / (oc.prob / tot));
                const cd phase = std::polar(share / std::sqrt(double(Ja)), -2 * kPi * a * m3 / Ja);
                const Mat& Mf = flat[a].branches[m1].a_op;  // (Dj L) x (DL K)
                Vec bell = bell_vector(Dj, ta, tb);
                for (long l = 0; l < L; ++l)
                    for (int k = 0; k < DL; ++k)
                        for (int q = 0; q < Dj; ++q)
                            for (long kk = 0; kk < K; ++kk) {
                                cd v = 0;
                                for (int dd = 0; dd < Dj; ++dd)
                                    v += std::conj(bell(q * Dj + dd)) * Mf(dd * L + l, k * K + kk);
                                if (v == cd(0, 0)) continue;
                                Mbig(l, ((long(b.j) * DL + k) * DR + q) * K + kk) += phase * v;
                            }
                // B side for this sector.
                Mat sigma = pauli(Dj, ta, tb).transpose();
                const cd bphase = std::polar(1.0, 2 * kPi * a * m3 / Ja);
                for (int beta = 0; beta < dB; ++beta)
                    for (long kk = 0; kk < K; ++kk) {
                        const long col = beta * K + kk;
                        for (int kp = 0; kp < std::min(dbL, DL); ++kp)
                            for (int c = 0; c < b.dim_bR; ++c) {
                                cd coef = d.U_B((long(b.j) * dbL + kp) * dbR + c, beta);
                                if (std::abs(coef) < 1e-15) continue;
                                int y = perm[a][m1][std::size_t(kp) * K + kk];
                                if (y < 0 || y >= Dj * L) continue;
                                const int dd = int(y / L);
                                const long l = y % L;
                                for (int dp = 0; dp < Dj; ++dp) {
                                    cd sv = sigma(dp, dd);
                                    if (sv == cd(0, 0)) continue;
                                    const Vec& f = F[a][std::size_t(dp) * b.dim_bR + c];
                                    for (long x = 0; x < f.size(); ++x)
                                        raw((x * L + l) * g, col) += bphase * coef * sv * f(x);
                                }
                            }
                    }
            }
            Branch br;
            br.a_op = Mbig * UAK;
            if (br.a_op.squaredNorm() <= 1e-14) continue;
            br.b_op = complete_isometry(raw);
            br.label = {int(n), m3};
            proto.branches.push_back(std::move(br));
        }
    complete_measurement(proto, complete_isometry(Mat::Zero(proto.dimBout, proto.dimBin)), {-1});
    validate_protocol(proto);
    return MergeProtocol{std::move(proto), K, L, g};
}

inline MergeProtocol build_merge_protocol(const TripartiteState& s, const KIDecomposition& d, MergeMode mode,
                                          double delta = 1e-6) {
    return build_merge_protocol(s, d, achievable_cost(d, mode, delta));
}

// Plain teleportation of A with K = dim A.
inline MergeProtocol teleport_merge_protocol(const TripartiteState& s) {
    const int dA = s.dA(), dB = s.dB();
    OneWayProtocol t = teleportation_protocol(dA);
    OneWayProtocol p;
    p.name = "teleportation-merge";
    p.dimAin = dA * dA;
    p.dimAout = 1;
    p.dimBin = dB * dA;
    p.dimBout = dA * dB;
    for (const auto& br : t.branches) {
        Branch b;
        b.a_op = br.a_op;
        // |beta>|x> -> sigma|x> (x) |beta>
        b.b_op = Mat::Zero(p.dimBout, p.dimBin);
        for (int beta = 0; beta < dB; ++beta)
            for (int x = 0; x < dA; ++x)
                for (int y = 0; y < dA; ++y) b.b_op(y * dB + beta, beta * dA + x) = br.b_op(y, x);
        b.label = br.label;
        p.branches.push_back(std::move(b));
    }
    validate_protocol(p);
    return MergeProtocol{std::move(p), dA, 1, 1};
}

// ---------- qubit channels ----------

struct MixedUnitaryDecomposition {
    std::vector<double> p;
    std::vector<Mat> U;
};

inline const std::array<Mat, 4>& paulis() {
    static const std::array<Mat, 4> P = [] {
        std::array<Mat, 4> q;
        for (auto& m : q) m = Mat::Zero(2, 2);
        q[0] << 1, 0, 0, 1;
        q[1] << 0, 1, 1, 0;
        q[2] << 0, cd(0, -1), cd(0, 1), 0;
        q[3] << 1, 0, 0, -1;
        return q;
    }();
    return P;
}

// Channel action from a normalized Choi operator J/d on (in, out): N(|k><l|) = d (<k| (x) 1) C (|l> (x) 1).
inline Mat apply_choi(const Mat& choi, int din, const Mat& x) {
    const int dout = int(choi.rows()) / din;
    Mat out = Mat::Zero(dout, dout);
    for (int k = 0; k < din; ++k)
        for (int l = 0; l < din; ++l)
            if (x(k, l) != cd(0, 0)) out += double(din) * x(k, l) * choi.block(k * dout, l * dout, dout, dout);
    return out;
}

inline Mat choi_of(const MixedUnitaryDecomposition& m) {
    const long d = m.U.empty() ? 2 : m.U[0].rows();
    Mat c = Mat::Zero(d * d, d * d);
    Vec phi = max_entangled(int(d));
    for (std::size_t i = 0; i < m.p.size(); ++i) {
        Vec v = kron(Mat::Identity(d, d), m.U[i]) * phi;
        c += m.p[i] * v * v.adjoint();
    }
    return c;
}

// SU(2) element whose adjoint action on Pauli vectors is the rotation r.
inline Mat su2_from_rotation(const Eigen::Matrix3d& r) {
    double w, x, y, z;
    const double tr = r.trace();
    if (tr > 0) {
        double s = std::sqrt(tr + 1.0) * 2;
        w = 0.25 * s;
        x = (r(2, 1) - r(1, 2)) / s;
        y = (r(0, 2) - r(2, 0)) / s;
        z = (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2;
        w = (r(2, 1) - r(1, 2)) / s;
        x = 0.25 * s;
        y = (r(0, 1) + r(1, 0)) / s;
        z = (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2;
        w = (r(0, 2) - r(2, 0)) / s;
        x = (r(0, 1) + r(1, 0)) / s;
        y = 0.25 * s;
        z = (r(1, 2) + r(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2;
        w = (r(1, 0) - r(0, 1)) / s;
        x = (r(0, 2) + r(2, 0)) / s;
        y = (r(1, 2) + r(2, 1)) / s;
        z = 0.25 * s;
    }
    const auto& P = paulis();
    Mat v = w * P[0] - cd(0, 1) * (x * P[1] + y * P[2] + z * P[3]);
    return v / std::sqrt(std::abs((v.adjoint() * v)(0, 0)));
}

inline void canonical_phase(Mat& u) {
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (std::abs(u.data()[i]) > 1e-7) {
            u *= std::conj(u.data()[i]) / std::abs(u.data()[i]);
            return;
        }
}

inline MixedUnitaryDecomposition mixed_unitary_decomposition_qubit(const Mat& choi) {
    if (choi.rows() != 4 || choi.cols() != 4) throw ValidationError("mixed_unitary_decomposition_qubit: expects a 4x4 Choi operator");
    require_psd(choi, "mixed_unitary_decomposition_qubit");
    if ((partial_trace(choi, {2, 2}, {0}) - Mat::Identity(2, 2) / 2).cwiseAbs().maxCoeff() > 10 * tol())
        throw ValidationError("mixed_unitary_decomposition_qubit: channel is not trace preserving");
    if ((partial_trace(choi, {2, 2}, {1}) - Mat::Identity(2, 2) / 2).cwiseAbs().maxCoeff() > 10 * tol())
        throw ValidationError("mixed_unitary_decomposition_qubit: channel is not unital");
    const auto& P = paulis();
    Eigen::Matrix3d M;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) M(i, j) = 0.5 * (P[i + 1] * apply_choi(choi, 2, P[j + 1])).trace().real();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d R1 = svd.matrixU(), R2 = svd.matrixV();
    Eigen::Vector3d s = svd.singularValues();
    if (R1.determinant() < 0) {
        R1.col(2) *= -1;
        s(2) *= -1;
    }
    if (R2.determinant() < 0) {
        R2.col(2) *= -1;
        s(2) *= -1;
    }
    const double q[4] = {(1 + s(0) + s(1) + s(2)) / 4, (1 + s(0) - s(1) - s(2)) / 4, (1 - s(0) + s(1) - s(2)) / 4,
                         (1 - s(0) - s(1) + s(2)) / 4};
    Mat V1 = su2_from_rotation(R1), V2 = su2_from_rotation(R2.transpose());
    MixedUnitaryDecomposition out;
    for (int m = 0; m < 4; ++m) {
        if (q[m] < -10 * tol()) throw ValidationError("mixed_unitary_decomposition_qubit: channel is not CP");
        if (q[m] <= tol()) continue;
        Mat u = V1 * P[m] * V2;
        canonical_phase(u);
        out.p.push_back(q[m]);
        out.U.push_back(u);
    }
    double tot = std::accumulate(out.p.begin(), out.p.end(), 0.0);
    for (double& x : out.p) x /= tot;
    if ((choi_of(out) - choi).cwiseAbs().maxCoeff() > 1e-8)
        throw NumericalError("mixed_unitary_decomposition_qubit: reconstruction failed");
    return out;
}

struct QubitMergeResult {
    double cost_bits = 0;
    MergeProtocol protocol;
    MixedUnitaryDecomposition mixture;
};

inline QubitMergeResult qubit_optimal_merge(const TripartiteState& s) {
    if (s.dR() != 2 || s.dA() != 2 || s.dB() != 2) throw ValidationError("qubit_optimal_merge: needs three qubits");
    if ((s.rho_R() - Mat::Identity(2, 2) / 2).cwiseAbs().maxCoeff() > 10 * tol())
        throw ValidationError("qubit_optimal_merge: psi^R is not maximally mixed; use max_entangled_counterpart first");
    QubitMergeResult res;
    if ((s.rho_B() - Mat::Identity(2, 2) / 2).cwiseAbs().maxCoeff() > 10 * tol()) {
        res.cost_bits = 1;
        res.protocol = teleport_merge_protocol(s);
        return res;
    }
    res.mixture = mixed_unitary_decomposition_qubit(s.rho_RB());
    const int n = int(res.mixture.p.size());
    // Omega = sum_m sqrt(q_m) (1 (x) U_m)|Phi+>^{RB} |m>^{A0}, ordered (A0, RB).
    Vec omega = Vec::Zero(long(n) * 4);
    Vec phi = max_entangled(2);
    for (int m = 0; m < n; ++m)
        omega.segment(m * 4, 4) = std::sqrt(res.mixture.p[m]) * (kron(Mat::Identity(2, 2), res.mixture.U[m]) * phi);
    // psi ordered (A, RB).
    Vec psiA = permute(s.amp, {2, 2, 2}, {1, 0, 2});
    SchmidtData sd = schmidt_decompose(psiA, 2, 4);
    Mat om = reshape(omega, n, 4);
    Mat Y = Mat::Zero(n, 2);
    for (int i = 0; i < sd.rank; ++i) {
        Vec gamma = om * sd.right.col(i).conjugate() / sd.coefficients[i];
        Y += gamma * sd.left.col(i).adjoint();
    }
    // V|l> = sqrt2 (<l|^R (x) 1) psi, mapping B to B' B.
    Mat V(4, 2);
    for (int l = 0; l < 2; ++l) V.col(l) = std::sqrt(2.0) * s.amp.segment(l * 4, 4);
    OneWayProtocol p;
    p.name = "qubit-mixed-unitary";
    p.dimAin = 2;
    p.dimAout = 1;
    p.dimBin = 2;
    p.dimBout = 4;
    for (int m = 0; m < n; ++m) {
        Branch br;
        br.a_op = Y.row(m);
        br.b_op = V * res.mixture.U[m].adjoint();
        br.label = {m};
        p.branches.push_back(std::move(br));
    }
    complete_measurement(p, V, {-1});
    validate_protocol(p);
    res.cost_bits = 0;
    res.protocol = MergeProtocol{std::move(p), 1, 1, 1};
    return res;
}

}  // namespace qsm
