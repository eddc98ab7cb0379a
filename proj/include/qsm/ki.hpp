#pragma once

#include "qsm/statespace.hpp"

#include <optional>

namespace qsm {

// Real-linear basis of Hermitian operators on C^d made of rank-one projectors.
inline std::vector<Mat> steering_generators(int d) {
    std::vector<Mat> out;
    for (int k = 0; k < d; ++k) {
        Vec v = basis(d, k);
        out.push_back(v * v.adjoint());
    }
    for (int k = 0; k < d; ++k)
        for (int l = k + 1; l < d; ++l) {
            Vec v = basis(d, k) + basis(d, l);
            out.push_back(v * v.adjoint());
            Vec w = basis(d, k) + cd(0, 1) * basis(d, l);
            out.push_back(w * w.adjoint());
        }
    return out;
}

// Unnormalized tr_R[(Lambda x 1) psi^{RA}].
inline Mat steered_operator(const TripartiteState& s, const Mat& lambda) {
    const int dR = s.dR(), dA = s.dA(), dB = s.dB();
    if (lambda.rows() != dR || lambda.cols() != dR) throw ValidationError("steered_operator: Lambda has wrong size");
    Mat out = Mat::Zero(dA, dA);
    for (int r = 0; r < dR; ++r) {
        Mat tr = reshape(s.amp.segment(long(r) * dA * dB, long(dA) * dB), dA, dB);
        for (int q = 0; q < dR; ++q) {
            cd c = lambda(q, r);
            if (c == cd(0, 0)) continue;
            Mat tq = reshape(s.amp.segment(long(q) * dA * dB, long(dA) * dB), dA, dB);
            out += c * tr * tq.adjoint();
        }
    }
    return out;
}

inline Mat steered_state(const TripartiteState& s, const Mat& lambda) {
    if (!is_hermitian(lambda, 10 * tol()) || eigh(lambda).values.minCoeff() < -10 * tol())
        throw ValidationError("steered_state: Lambda is not PSD");
    Mat op = steered_operator(s, lambda);
    double t = op.trace().real();
    if (t <= tol()) throw ValidationError("steered_state: post-selection probability vanishes");
    return op / t;
}

// One summand L (x) R of an intermediate decomposition. Column l * dR + q of W
// is the image of |l>^L |q>^R in H^A.
struct KIPiece {
    Mat W;
    int dL = 0, dR = 0;
};

struct KIPartition {
    std::vector<KIPiece> blocks;
};

inline KIPartition trivial_partition(int dA) { return KIPartition{{KIPiece{Mat::Identity(dA, dA), dA, 1}}}; }

inline int refinement_index(const KIPartition& p) {
    int S = 0;
    for (const auto& b : p.blocks) S += b.dR;
    return S * (S + 1) / 2 - int(p.blocks.size()) + 1;
}

namespace detail {

// (1_L (x) <a|) C (1_L (x) |b>) for C acting on L (x) R coordinates.
inline Mat compress(const Mat& c, int dL, int dR, const Vec& a, const Vec& b) {
    Mat out = Mat::Zero(dL, dL);
    for (int l = 0; l < dL; ++l)
        for (int m = 0; m < dL; ++m) {
            cd s = 0;
            for (int q = 0; q < dR; ++q)
                for (int t = 0; t < dR; ++t) s += std::conj(a(q)) * c(l * dR + q, m * dR + t) * b(t);
            out(l, m) = s;
        }
    return out;
}

// e_k, (e_k + e_l)/sqrt2, (e_k + i e_l)/sqrt2: their rank-one forms span all Hermitian forms.
inline std::vector<Vec> polarization_vectors(int d) {
    std::vector<Vec> out;
    for (int k = 0; k < d; ++k) out.push_back(basis(d, k));
    for (int k = 0; k < d; ++k)
        for (int l = k + 1; l < d; ++l) {
            out.push_back((basis(d, k) + basis(d, l)) / std::sqrt(2.0));
            out.push_back((basis(d, k) + cd(0, 1) * basis(d, l)) / std::sqrt(2.0));
        }
    return out;
}

struct SteeringCache {
    std::vector<Mat> ops;  // unnormalized steered operators, generators in order
    Mat identity_op;
};

inline SteeringCache make_cache(const TripartiteState& s) {
    SteeringCache c;
    for (const Mat& g : steering_generators(s.dR())) c.ops.push_back(steered_operator(s, g));
    c.identity_op = steered_operator(s, Mat::Identity(s.dR(), s.dR()));
    return c;
}

inline Mat subspace_embed(const KIPiece& b, const Mat& cols) {
    return b.W * kron(cols, Mat::Identity(b.dR, b.dR));
}

}  // namespace detail

inline std::optional<KIPartition> l_decompose_step(const TripartiteState& s, const KIPartition& part) {
    const double eps = 10 * tol();
    detail::SteeringCache cache = detail::make_cache(s);
    for (std::size_t j = 0; j < part.blocks.size(); ++j) {
        const KIPiece& blk = part.blocks[j];
        if (blk.dL < 2) continue;
        Mat cid = blk.W.adjoint() * cache.identity_op * blk.W;
        std::optional<Mat> ref;
        for (int q = 0; q < blk.dR && !ref; ++q) {
            Mat r = detail::compress(cid, blk.dL, blk.dR, basis(blk.dR, q), basis(blk.dR, q));
            double t = r.trace().real();
            if (t > tol()) ref = Mat(r / t);
        }
        if (!ref) continue;
        const std::vector<Vec> avecs = detail::polarization_vectors(blk.dR);
        for (const Mat& op : cache.ops) {
            Mat c = blk.W.adjoint() * op * blk.W;
            for (const Vec& a : avecs) {
                Mat rho = detail::compress(c, blk.dL, blk.dR, a, a);
                double t = rho.trace().real();
                if (t <= tol()) continue;
                Mat diff = rho / t - *ref;
                if (diff.cwiseAbs().maxCoeff() <= eps) continue;
                SpectralData sd = eigh(diff);
                int npos = 0;
                while (npos < sd.values.size() && sd.values(npos) > eps) ++npos;
                if (npos == 0 || npos == blk.dL) continue;
                KIPartition out;
                for (std::size_t i = 0; i < part.blocks.size(); ++i)
                    if (i != j) out.blocks.push_back(part.blocks[i]);
                Mat plus = sd.vectors.leftCols(npos), minus = sd.vectors.rightCols(blk.dL - npos);
                out.blocks.push_back({detail::subspace_embed(blk, plus), npos, blk.dR});
                out.blocks.push_back({detail::subspace_embed(blk, minus), blk.dL - npos, blk.dR});
                return out;
            }
        }
    }
    return std::nullopt;
}

inline std::optional<KIPartition> r_combine_step(const TripartiteState& s, const KIPartition& part) {
    const double eps = 10 * tol();
    detail::SteeringCache cache = detail::make_cache(s);
    std::vector<Mat> lambdas{cache.identity_op};
    for (const Mat& op : cache.ops) lambdas.push_back(op);
    for (const Mat& op : cache.ops) lambdas.push_back(cache.identity_op + op);

    auto same_support = [&](const Mat& x, const Mat& y) {
        double tx = x.trace().real(), ty = y.trace().real();
        if (tx <= tol() || ty <= tol()) return false;
        Mat px = support(x / tx, eps), py = support(y / ty, eps);
        if (px.cols() != py.cols()) return false;
        return (px * px.adjoint() - py * py.adjoint()).cwiseAbs().maxCoeff() <= 1e-6;
    };

    const std::size_t J = part.blocks.size();
    for (std::size_t j0 = 0; j0 < J; ++j0)
        for (std::size_t j1 = j0 + 1; j1 < J; ++j1) {
            const KIPiece& b0 = part.blocks[j0];
            const KIPiece& b1 = part.blocks[j1];
            Mat id00 = b0.W.adjoint() * cache.identity_op * b0.W;
            Mat id11 = b1.W.adjoint() * cache.identity_op * b1.W;
            for (int qa = 0; qa < b0.dR; ++qa)
                for (int qb = 0; qb < b1.dR; ++qb) {
                    Vec a = basis(b0.dR, qa), b = basis(b1.dR, qb);
                    Mat ref0 = detail::compress(id00, b0.dL, b0.dR, a, a);
                    Mat ref1 = detail::compress(id11, b1.dL, b1.dR, b, b);
                    for (const Mat& op : lambdas) {
                        double t = op.trace().real();
                        if (t <= tol()) continue;
                        Mat rho0 = detail::compress(b0.W.adjoint() * op * b0.W, b0.dL, b0.dR, a, a);
                        Mat rho1 = detail::compress(b1.W.adjoint() * op * b1.W, b1.dL, b1.dR, b, b);
                        if (!same_support(rho0, ref0) || !same_support(rho1, ref1)) continue;
                        // sigma maps L_{j0} to L_{j1}
                        Mat cross = b1.W.adjoint() * op * b0.W / t;
                        Mat sigma(b1.dL, b0.dL);
                        for (int l = 0; l < b1.dL; ++l)
                            for (int m = 0; m < b0.dL; ++m) {
                                cd v = 0;
                                for (int x = 0; x < b1.dR; ++x)
                                    for (int y = 0; y < b0.dR; ++y)
                                        v += std::conj(b(x)) * cross(l * b1.dR + x, m * b0.dR + y) * a(y);
                                sigma(l, m) = v;
                            }
                        if (sigma.norm() <= eps) continue;
                        Eigen::JacobiSVD<Mat> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
                        int rank = 0;
                        while (rank < svd.singularValues().size() && svd.singularValues()(rank) > eps) ++rank;
                        Mat v = svd.matrixV().leftCols(rank);
                        Mat u(b1.dL, rank);
                        for (int l = 0; l < rank; ++l) u.col(l) = sigma * v.col(l) / svd.singularValues()(l);
                        u = polar_isometry(u);

                        const int dRm = b0.dR + b1.dR;
                        KIPiece merged{Mat(s.dA(), rank * dRm), rank, dRm};
                        for (int l = 0; l < rank; ++l)
                            for (int q = 0; q < dRm; ++q) {
                                if (q < b0.dR)
                                    merged.W.col(l * dRm + q) = b0.W * kron(Vec(v.col(l)), basis(b0.dR, q));
                                else
                                    merged.W.col(l * dRm + q) = b1.W * kron(Vec(u.col(l)), basis(b1.dR, q - b0.dR));
                            }
                        KIPartition out;
                        for (std::size_t i = 0; i < J; ++i)
                            if (i != j0 && i != j1) out.blocks.push_back(part.blocks[i]);
                        out.blocks.push_back(merged);
                        if (rank < b0.dL) {
                            Mat perp = svd.matrixV().rightCols(b0.dL - rank);
                            out.blocks.push_back({detail::subspace_embed(b0, perp), b0.dL - rank, b0.dR});
                        }
                        if (rank < b1.dL) {
                            Mat perp = complement(u, b1.dL);
                            out.blocks.push_back({detail::subspace_embed(b1, perp), b1.dL - rank, b1.dR});
                        }
                        return out;
                    }
                }
        }
    return std::nullopt;
}

// Restriction of psi^{RA} to one block, in (R, L, Rq) coordinates.
inline Mat block_operator(const TripartiteState& s, const KIPiece& b) {
    const int dR = s.dR(), dA = s.dA(), dB = s.dB();
    const int n = b.dL * b.dR;
    Vec x(long(dR) * n * dB);
    for (int r = 0; r < dR; ++r) {
        Mat t = reshape(s.amp.segment(long(r) * dA * dB, long(dA) * dB), dA, dB);
        Mat c = b.W.adjoint() * t;  // n x dB
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < dB; ++k) x((long(r) * n + i) * dB + k) = c(i, k);
    }
    return reduced(x, {dR, n, dB}, {0, 1});
}

// Operator-Schmidt rank one across (R, Rq) | L.
inline bool block_is_product(const TripartiteState& s, const KIPiece& b) {
    Mat op = block_operator(s, b);
    const int dR = s.dR(), dL = b.dL, dQ = b.dR;
    if (op.cwiseAbs().maxCoeff() <= tol()) return true;
    Mat m(long(dR) * dQ * dR * dQ, long(dL) * dL);
    for (int r = 0; r < dR; ++r)
        for (int l = 0; l < dL; ++l)
            for (int q = 0; q < dQ; ++q)
                for (int r2 = 0; r2 < dR; ++r2)
                    for (int l2 = 0; l2 < dL; ++l2)
                        for (int q2 = 0; q2 < dQ; ++q2) {
                            long row = ((long(r) * dQ + q) * dR + r2) * dQ + q2;
                            m(row, l * dL + l2) = op((long(r) * dL + l) * dQ + q, (long(r2) * dL + l2) * dQ + q2);
                        }
    Eigen::JacobiSVD<Mat> svd(m);
    const RVec& sv = svd.singularValues();
    return sv.size() < 2 || sv(1) <= 10 * tol() * std::max(1.0, sv(0));
}

struct KIBlock {
    int j = 0;
    Mat W;           // isometry L (x) R -> A, columns l * dim_R + q
    int dim_L = 0, dim_R = 0;
    double p = 0;
    Mat omega;       // on L, diagonal in the stored L basis, descending
    Vec phi;         // on R (x) a^R (x) b^R, index (r * dim_R + q) * dim_bR + c
    double lambda0 = 0;
    int rank_omega = 0;
    int dim_bR = 0;
    Mat V;           // isometry b^L(rank_omega) (x) b^R(dim_bR) -> B
};

struct KIDecomposition {
    std::vector<KIBlock> blocks;
    int dR = 1, dA = 1, dB = 1;
    int dLmax = 1, dRmax = 1;     // a^L, a^R register dims in the tensor form
    int dbL = 1, dbR = 1;         // b^L, b^R register dims
    Mat U_A;                      // A -> a0 (x) aL (x) aR
    Mat U_B;                      // B -> b0 (x) bL (x) bR
    int r = 1;
    std::vector<int> trajectory;  // refinement index after each accepted step

    int J() const { return int(blocks.size()); }
};

namespace detail {

inline bool lex_less(const Mat& x, const Mat& y) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        cd a = x.data()[i], b = y.data()[i];
        if (std::abs(a.real() - b.real()) > 1e-7) return a.real() > b.real();
        if (std::abs(a.imag() - b.imag()) > 1e-7) return a.imag() > b.imag();
    }
    return false;
}

// Fills p, omega, phi, V for one block and rotates L onto the omega eigenbasis.
inline KIBlock finish_block(const TripartiteState& s, const KIPiece& piece) {
    const int dR = s.dR(), dA = s.dA(), dB = s.dB();
    KIBlock blk;
    blk.W = piece.W;
    blk.dim_L = piece.dL;
    blk.dim_R = piece.dR;
    const int n = piece.dL * piece.dR;
    auto project = [&](const Mat& W) {
        Vec x(long(dR) * n * dB);
        for (int r = 0; r < dR; ++r) {
            Mat t = reshape(s.amp.segment(long(r) * dA * dB, long(dA) * dB), dA, dB);
            Mat c = W.adjoint() * t;
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < dB; ++k) x((long(r) * n + i) * dB + k) = c(i, k);
        }
        return x;  // R (x) L (x) Rq (x) B
    };
    Vec chi = project(blk.W);
    blk.p = chi.squaredNorm();
    if (blk.p <= tol()) {
        blk.p = 0;
        blk.omega = Mat::Identity(piece.dL, piece.dL) / double(piece.dL);
        blk.lambda0 = 1.0 / piece.dL;
        return blk;
    }
    chi /= std::sqrt(blk.p);
    const std::vector<int> dims{dR, piece.dL, piece.dR, dB};
    SpectralData om = eigh(reduced(chi, dims, {1}));
    blk.W = blk.W * kron(om.vectors, Mat::Identity(piece.dR, piece.dR));
    chi = project(blk.W) / std::sqrt(blk.p);
    blk.omega = reduced(chi, dims, {1});
    blk.lambda0 = om.values(0);
    blk.rank_omega = numeric_rank(om.values);

    // L first: chi = sum_k |k>^L (x) sqrt(mu_k) beta_k on (R, Rq, B).
    Vec lfirst = permute(chi, dims, {1, 0, 2, 3});
    const long rest = long(dR) * piece.dR * dB;
    std::vector<Vec> beta;
    for (int k = 0; k < blk.rank_omega; ++k)
        beta.push_back(lfirst.segment(k * rest, rest) / std::sqrt(om.values(k)));
    SchmidtData sd = schmidt_decompose(beta[0] / beta[0].norm(), dR * piece.dR, dB);
    blk.dim_bR = sd.rank;
    blk.phi = Vec::Zero(long(dR) * piece.dR * sd.rank);
    for (int c = 0; c < sd.rank; ++c)
        for (int x = 0; x < dR * piece.dR; ++x) blk.phi(long(x) * sd.rank + c) = sd.coefficients[c] * sd.left(x, c);
    Mat V(dB, blk.rank_omega * sd.rank);
    for (int k = 0; k < blk.rank_omega; ++k) {
        Mat bk = reshape(beta[k], dR * piece.dR, dB);
        for (int c = 0; c < sd.rank; ++c)
            V.col(k * sd.rank + c) = (sd.left.col(c).adjoint() * bk).transpose() / sd.coefficients[c];
    }
    if (!is_isometry(V, 1e-6)) throw NumericalError("ki: block B-side map is not an isometry");
    blk.V = polar_isometry(V);
    return blk;
}

}  // namespace detail

inline KIDecomposition ki_decompose(const TripartiteState& s) {
    KIPartition part = trivial_partition(s.dA());
    KIDecomposition out;
    out.trajectory.push_back(refinement_index(part));
    const int bound = 4 * s.dA() * (s.dA() + 1) / 2 + 4;
    for (int it = 0;; ++it) {
        if (it > bound) throw NumericalError("ki_decompose: iteration bound exceeded (numerical degeneracy)");
        if (auto next = l_decompose_step(s, part)) {
            part = std::move(*next);
        } else if (auto nxt = r_combine_step(s, part)) {
            part = std::move(*nxt);
        } else {
            break;
        }
        out.trajectory.push_back(refinement_index(part));
    }
    for (const auto& b : part.blocks)
        if (!block_is_product(s, b)) throw NumericalError("ki_decompose: maximality product test failed");
    out.r = refinement_index(part);

    for (const auto& piece : part.blocks) out.blocks.push_back(detail::finish_block(s, piece));
    std::stable_sort(out.blocks.begin(), out.blocks.end(), [](const KIBlock& x, const KIBlock& y) {
        if (x.dim_R != y.dim_R) return x.dim_R > y.dim_R;
        if (std::abs(x.p - y.p) > 1e-9) return x.p > y.p;
        return detail::lex_less(x.W * x.W.adjoint(), y.W * y.W.adjoint());
    });
    for (int j = 0; j < out.J(); ++j) out.blocks[j].j = j;

    out.dR = s.dR();
    out.dA = s.dA();
    out.dB = s.dB();
    out.dLmax = out.dRmax = out.dbR = 1;
    for (const auto& b : out.blocks) {
        out.dLmax = std::max(out.dLmax, b.dim_L);
        out.dRmax = std::max(out.dRmax, b.dim_R);
        out.dbR = std::max(out.dbR, b.dim_bR);
    }
    out.dbL = out.dLmax;
    const int J = out.J();
    while (long(J) * out.dbL * out.dbR < s.dB()) ++out.dbR;

    const long na = long(J) * out.dLmax * out.dRmax;
    out.U_A = Mat::Zero(na, s.dA());
    for (const auto& b : out.blocks)
        for (int l = 0; l < b.dim_L; ++l)
            for (int q = 0; q < b.dim_R; ++q)
                out.U_A.row((long(b.j) * out.dLmax + l) * out.dRmax + q) = b.W.col(l * b.dim_R + q).adjoint();

    const long nb = long(J) * out.dbL * out.dbR;
    Mat used = Mat::Zero(s.dB(), 0);
    std::vector<long> targets;
    for (const auto& b : out.blocks) {
        if (b.p <= 0) continue;
        for (int k = 0; k < b.rank_omega; ++k)
            for (int c = 0; c < b.dim_bR; ++c) {
                used.conservativeResize(Eigen::NoChange, used.cols() + 1);
                used.col(used.cols() - 1) = b.V.col(k * b.dim_bR + c);
                targets.push_back((long(b.j) * out.dbL + k) * out.dbR + c);
            }
    }
    used = polar_isometry(used);
    out.U_B = Mat::Zero(nb, s.dB());
    for (long i = 0; i < used.cols(); ++i) out.U_B.row(targets[i]) = used.col(i).adjoint();
    Mat rest = complement(used, s.dB());
    std::vector<bool> taken(nb, false);
    for (long t : targets) taken[t] = true;
    long next = 0;
    for (long i = 0; i < rest.cols(); ++i) {
        while (taken[next]) ++next;
        out.U_B.row(next) = rest.col(i).adjoint();
        taken[next] = true;
    }
    return out;
}

// Sum_j sqrt(p_j) |j>|j> |omega_j> |phi_j> on R, a0, aL, aR, b0, bL, bR.
inline Vec block_form(const KIDecomposition& d) {
    const long J = d.J();
    std::vector<int> dims{d.dR, int(J), d.dLmax, d.dRmax, int(J), d.dbL, d.dbR};
    Vec out = Vec::Zero(product(dims));
    for (const auto& b : d.blocks) {
        if (b.p <= 0) continue;
        for (int r = 0; r < d.dR; ++r)
            for (int k = 0; k < b.rank_omega; ++k)
                for (int q = 0; q < b.dim_R; ++q)
                    for (int c = 0; c < b.dim_bR; ++c) {
                        long idx = r;
                        idx = idx * J + b.j;
                        idx = idx * d.dLmax + k;
                        idx = idx * d.dRmax + q;
                        idx = idx * J + b.j;
                        idx = idx * d.dbL + k;
                        idx = idx * d.dbR + c;
                        out(idx) = std::sqrt(b.p * b.omega(k, k).real()) * b.phi((long(r) * b.dim_R + q) * b.dim_bR + c);
                    }
    }
    return out;
}

// (1 (x) U_A (x) U_B) psi in the block_form register order.
inline Vec apply_tensor_form(const TripartiteState& s, const KIDecomposition& d) {
    const int dR = s.dR(), dA = s.dA(), dB = s.dB();
    Vec out(long(dR) * d.U_A.rows() * d.U_B.rows());
    for (int r = 0; r < dR; ++r) {
        Mat t = reshape(s.amp.segment(long(r) * dA * dB, long(dA) * dB), dA, dB);
        Mat m = d.U_A * t * d.U_B.transpose();
        out.segment(long(r) * m.size(), m.size()) = flatten(m);
    }
    return out;
}

inline double tensor_form_fidelity(const TripartiteState& s, const KIDecomposition& d) {
    return std::abs(block_form(d).dot(apply_tensor_form(s, d)));
}

}  // namespace qsm
