#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsm {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Input rejected before any computation (bad dims, bad norm, unmet precondition).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical routine failed to reach its guarantee.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double tol() {
    static const double t = [] {
        if (const char* s = std::getenv("QSM_TOL")) {
            char* end = nullptr;
            double v = std::strtod(s, &end);
            if (end != s && v > 0.0 && v < 1e-2) return v;
        }
        return 1e-9;
    }();
    return t;
}

inline const double kPi = std::acos(-1.0);

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vec kron(const Vec& a, const Vec& b) {
    Vec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

inline Vec basis(int n, int k) {
    Vec v = Vec::Zero(n);
    v(k) = 1.0;
    return v;
}

inline Vec max_entangled(int d) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(d) * d);
    for (int k = 0; k < d; ++k) v(k * d + k) = 1.0 / std::sqrt(double(d));
    return v;
}

inline bool is_hermitian(const Mat& m, double eps = tol()) {
    return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= eps;
}

inline bool is_isometry(const Mat& m, double eps = 10 * tol()) {
    if (m.cols() == 0) return true;
    return (m.adjoint() * m - Mat::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff() <= eps;
}

inline bool is_unitary(const Mat& m, double eps = 10 * tol()) {
    return m.rows() == m.cols() && is_isometry(m, eps);
}

struct SpectralData {
    RVec values;   // descending
    Mat vectors;   // columns
};

// Rotate a column to make its first significant entry real positive.
inline void fix_phase(Eigen::Ref<Vec> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-7) {
            v *= std::conj(v(i)) / std::abs(v(i));
            return;
        }
    }
}

// Canonical orthonormal basis of span(q): Gram-Schmidt over the columns of q q^dagger.
inline Mat canonical_basis(const Mat& q) {
    const Eigen::Index n = q.rows(), k = q.cols();
    if (k <= 1) {
        Mat out = q;
        if (k == 1) fix_phase(out.col(0));
        return out;
    }
    Mat proj = q * q.adjoint();
    Mat out(n, k);
    Eigen::Index found = 0;
    for (Eigen::Index c = 0; c < n && found < k; ++c) {
        Vec v = proj.col(c);
        for (Eigen::Index j = 0; j < found; ++j) v -= out.col(j).dot(v) * out.col(j);
        for (Eigen::Index j = 0; j < found; ++j) v -= out.col(j).dot(v) * out.col(j);
        double nv = v.norm();
        if (nv > 1e-6) out.col(found++) = v / nv;
    }
    if (found < k) return q;  // numerically degenerate; keep solver output
    for (Eigen::Index j = 0; j < k; ++j) fix_phase(out.col(j));
    return out;
}

// Hermitian eigendecomposition, descending, with reproducible bases inside tied eigenvalues.
inline SpectralData eigh(const Mat& m) {
    if (m.rows() != m.cols()) throw ValidationError("eigh: matrix is not square");
    const Eigen::Index n = m.rows();
    SpectralData out{RVec(n), Mat(n, n)};
    if (n == 0) return out;
    Mat h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("eigh: solver failed");
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = es.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    Eigen::Index s = 0;
    while (s < n) {
        Eigen::Index e = s + 1;
        while (e < n && out.values(e - 1) - out.values(e) <= 10 * tol() * scale) ++e;
        out.vectors.middleCols(s, e - s) = canonical_basis(out.vectors.middleCols(s, e - s));
        s = e;
    }
    return out;
}

inline Mat psd_sqrt(const Mat& m) {
    SpectralData sd = eigh(m);
    RVec r = sd.values.cwiseMax(0.0).cwiseSqrt();
    return sd.vectors * r.asDiagonal() * sd.vectors.adjoint();
}

inline int numeric_rank(const RVec& values, double cut = tol()) {
    int r = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values(i) > cut) ++r;
    return r;
}

// Orthonormal basis of the range of a PSD operator.
inline Mat support(const Mat& psd, double cut = tol()) {
    SpectralData sd = eigh(psd);
    int r = numeric_rank(sd.values, cut);
    return sd.vectors.leftCols(r);
}

// Orthonormal basis of the orthogonal complement of span(cols) in C^n.
// cols must be orthonormal; the trailing Householder columns span the rest.
inline Mat complement(const Mat& cols, Eigen::Index n) {
    const Eigen::Index k = cols.cols();
    if (k == 0) return Mat::Identity(n, n);
    Eigen::HouseholderQR<Mat> qr(cols);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    return q.rightCols(n - k);
}

struct SchmidtData {
    std::vector<double> coefficients;
    Mat left;   // columns |left_l>
    Mat right;  // columns |right_l>
    int rank = 0;
};

// Row-major reshape: v(i * dr + j) -> M(i, j).
inline Mat reshape(const Vec& v, Eigen::Index dl, Eigen::Index dr) {
    Mat m(dl, dr);
    for (Eigen::Index i = 0; i < dl; ++i)
        for (Eigen::Index j = 0; j < dr; ++j) m(i, j) = v(i * dr + j);
    return m;
}

inline Vec flatten(const Mat& m) {
    Vec v(m.rows() * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
    return v;
}

inline SchmidtData schmidt_decompose(const Vec& v, int dl, int dr) {
    if (dl <= 0 || dr <= 0 || Eigen::Index(dl) * dr != v.size())
        throw ValidationError("schmidt_decompose: dimension mismatch");
    if (std::abs(v.norm() - 1.0) > 1e-6)
        throw ValidationError("schmidt_decompose: vector is not normalized");
    Mat m = reshape(v, dl, dr);
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU);
    const RVec& s = svd.singularValues();
    SchmidtData out;
    for (Eigen::Index l = 0; l < s.size() && s(l) > tol(); ++l) out.coefficients.push_back(s(l));
    out.rank = int(out.coefficients.size());
    out.left = svd.matrixU().leftCols(out.rank);
    // Tied coefficients get a basis that depends only on their common subspace.
    for (int a = 0; a < out.rank;) {
        int b = a + 1;
        while (b < out.rank && out.coefficients[b - 1] - out.coefficients[b] <= 10 * tol()) ++b;
        out.left.middleCols(a, b - a) = canonical_basis(out.left.middleCols(a, b - a));
        a = b;
    }
    out.right = Mat(dr, out.rank);
    for (int l = 0; l < out.rank; ++l)
        out.right.col(l) = (out.left.col(l).adjoint() * m).transpose() / out.coefficients[l];
    return out;
}

// Reorders tensor axes: axis k of the result is axis perm[k] of the input.
inline Vec permute(const Vec& v, const std::vector<int>& dims, const std::vector<int>& perm) {
    const std::size_t n = dims.size();
    std::vector<long> stride(n, 1);
    for (std::size_t k = n; k-- > 1;) stride[k - 1] = stride[k] * dims[k];
    std::vector<int> nd(n);
    for (std::size_t k = 0; k < n; ++k) nd[k] = dims[perm[k]];
    Vec out(v.size());
    std::vector<int> idx(n, 0);
    for (Eigen::Index flat = 0; flat < v.size(); ++flat) {
        long src = 0;
        for (std::size_t k = 0; k < n; ++k) src += idx[k] * stride[perm[k]];
        out(flat) = v(src);
        for (std::size_t k = n; k-- > 0;) {
            if (++idx[k] < nd[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

inline long product(const std::vector<int>& dims) {
    long p = 1;
    for (int d : dims) p *= d;
    return p;
}

// Moves the kept axes to the front (in ascending order) and reshapes to kept x rest.
inline Mat split_kept(const Vec& v, const std::vector<int>& dims, const std::vector<int>& keep) {
    std::vector<int> perm, rest;
    std::vector<int> ks = keep;
    std::sort(ks.begin(), ks.end());
    for (int k : ks) {
        if (k < 0 || k >= int(dims.size())) throw ValidationError("partial_trace: keep index out of range");
        perm.push_back(k);
    }
    long dk = 1;
    for (int k : ks) dk *= dims[k];
    for (int k = 0; k < int(dims.size()); ++k)
        if (!std::binary_search(ks.begin(), ks.end(), k)) perm.push_back(k);
    Vec w = permute(v, dims, perm);
    return reshape(w, dk, v.size() / dk);
}

// Reduced state of a pure vector on the kept axes.
inline Mat reduced(const Vec& v, const std::vector<int>& dims, const std::vector<int>& keep) {
    if (product(dims) != v.size()) throw ValidationError("reduced: dimension mismatch");
    Mat m = split_kept(v, dims, keep);
    return m * m.adjoint();
}

inline Mat partial_trace(const Mat& rho, const std::vector<int>& dims, const std::vector<int>& keep) {
    const long n = product(dims);
    if (rho.rows() != n || rho.cols() != n) throw ValidationError("partial_trace: dimension mismatch");
    // rho viewed as a vector on dims ++ dims; contract the traced axes pairwise.
    std::vector<int> ks = keep;
    std::sort(ks.begin(), ks.end());
    for (int k : ks)
        if (k < 0 || k >= int(dims.size())) throw ValidationError("partial_trace: keep index out of range");
    std::vector<int> tr;
    for (int k = 0; k < int(dims.size()); ++k)
        if (!std::binary_search(ks.begin(), ks.end(), k)) tr.push_back(k);
    long dk = 1, dt = 1;
    for (int k : ks) dk *= dims[k];
    for (int k : tr) dt *= dims[k];
    std::vector<int> perm = ks;
    perm.insert(perm.end(), tr.begin(), tr.end());
    Mat out = Mat::Zero(dk, dk);
    std::vector<int> d2(dims.size() * 2);
    for (std::size_t k = 0; k < dims.size(); ++k) d2[k] = d2[k + dims.size()] = dims[k];
    std::vector<int> p2 = perm;
    for (int k : perm) p2.push_back(k + int(dims.size()));
    Vec flat = permute(flatten(rho), d2, p2);  // (kept, traced, kept', traced')
    for (long a = 0; a < dk; ++a)
        for (long b = 0; b < dk; ++b) {
            cd s = 0;
            for (long t = 0; t < dt; ++t) s += flat((a * dt + t) * n + b * dt + t);
            out(a, b) = s;
        }
    return out;
}

inline void require_psd(const Mat& m, const char* who) {
    if (!is_hermitian(m, 10 * tol())) throw ValidationError(std::string(who) + ": input is not hermitian");
    if (eigh(m).values.minCoeff() < -10 * tol()) throw ValidationError(std::string(who) + ": input is not PSD");
}

inline double fidelity(const Mat& rho, const Mat& sigma) {
    if (rho.rows() != sigma.rows()) throw ValidationError("fidelity: dimension mismatch");
    require_psd(rho, "fidelity");
    require_psd(sigma, "fidelity");
    Mat x = psd_sqrt(rho) * psd_sqrt(sigma);
    Eigen::JacobiSVD<Mat> svd(x);
    return std::min(1.0, svd.singularValues().sum());
}

inline double fidelity_pure(const Vec& a, const Vec& b) { return std::abs(a.dot(b)); }

inline double purified_distance(const Mat& rho, const Mat& sigma) {
    double f = fidelity(rho, sigma);
    return std::sqrt(std::max(0.0, 1.0 - f * f));
}

// True iff x is majorized by y.
inline bool majorization_check(std::vector<double> x, std::vector<double> y) {
    for (double v : x)
        if (v < -tol()) throw ValidationError("majorization_check: negative entry");
    for (double v : y)
        if (v < -tol()) throw ValidationError("majorization_check: negative entry");
    std::size_t n = std::max(x.size(), y.size());
    x.resize(n, 0.0);
    y.resize(n, 0.0);
    std::sort(x.rbegin(), x.rend());
    std::sort(y.rbegin(), y.rend());
    double sx = 0, sy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sx += x[k];
        sy += y[k];
        if (sx > sy + tol()) return false;
    }
    return true;
}

inline std::vector<double> spectrum(const Mat& rho) {
    RVec v = eigh(rho).values;
    std::vector<double> out(v.data(), v.data() + v.size());
    for (double& x : out) x = std::max(0.0, x);
    return out;
}

inline double entropy_bits(const std::vector<double>& p) {
    double h = 0;
    for (double x : p)
        if (x > tol()) h -= x * std::log2(x);
    return h;
}

// Haar-distributed unitary: QR of a Ginibre matrix with the R-diagonal phases removed.
inline Mat haar_unitary(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat z(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) z(i, j) = cd(g(rng), g(rng));
    Eigen::HouseholderQR<Mat> qr(z);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        cd d = r(j, j);
        if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

inline Vec random_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = cd(g(rng), g(rng));
    return v / v.norm();
}

// Orthonormal columns spanning the image of a; rank decided at the given cut.
inline Mat range_basis(const Mat& a, double cut = tol()) {
    if (a.cols() == 0) return Mat(a.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > cut) ++r;
    return svd.matrixU().leftCols(r);
}

// Nearest isometry in the polar sense.
inline Mat polar_isometry(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace qsm
