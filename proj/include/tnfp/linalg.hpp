#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnfp {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Input violates a documented precondition (bad shape, cap exceeded, ...).
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A structural guarantee failed numerically (residual above tolerance).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace la {

inline Mat kron(const Mat& a, const Mat& b) {
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

inline Mat identity(Eigen::Index n) { return Mat::Identity(n, n); }

inline double herm_residual(const Mat& m) { return (m - m.adjoint()).norm(); }

inline Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

inline Vec vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

inline Mat unvec(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Mat>(v.data(), rows, cols);
}

inline Vec eigenvalues(const Mat& m) {
    if (m.rows() == 0) return Vec();
    Eigen::ComplexEigenSolver<Mat> es(m, false);
    return es.eigenvalues();
}

inline double spectral_radius(const Mat& m) {
    if (m.rows() == 0) return 0.0;
    return eigenvalues(m).cwiseAbs().maxCoeff();
}

// Singular values above tol * max(1, s_max).
inline Eigen::Index rank(const Mat& m, double tol = 1e-10) {
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<Mat> svd(m);
    const RVec& s = svd.singularValues();
    double cut = tol * std::max(1.0, s.size() ? s(0) : 0.0);
    return (s.array() > cut).count();
}

// Orthonormal basis of the column space.
inline Mat orth(const Mat& m, double tol = 1e-10) {
    if (m.size() == 0) return Mat(m.rows(), 0);
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU);
    const RVec& s = svd.singularValues();
    double cut = tol * std::max(1.0, s.size() ? s(0) : 0.0);
    Eigen::Index r = (s.array() > cut).count();
    return svd.matrixU().leftCols(r);
}

// Orthonormal basis of the kernel.
inline Mat null_space(const Mat& m, double tol = 1e-10) {
    const Eigen::Index n = m.cols();
    if (m.rows() == 0) return identity(n);
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeFullV);
    const RVec& s = svd.singularValues();
    double cut = tol * std::max(1.0, s.size() ? s(0) : 0.0);
    Eigen::Index r = (s.array() > cut).count();
    return svd.matrixV().rightCols(n - r);
}

// Orthonormal complement of the span of the (orthonormal) columns of q.
inline Mat complement(const Mat& q, Eigen::Index n) {
    if (q.cols() == 0) return identity(n);
    return null_space(q.adjoint());
}

struct HermEig {
    RVec values;
    Mat vectors;
};

inline HermEig eigh(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m));
    return {es.eigenvalues(), es.eigenvectors()};
}

template <class F>
Mat herm_apply(const Mat& m, F&& f) {
    auto e = eigh(m);
    RVec fv = e.values.unaryExpr(f);
    return e.vectors * fv.cast<cd>().asDiagonal() * e.vectors.adjoint();
}

inline Mat psd_sqrt(const Mat& m) {
    return herm_apply(m, [](double x) { return x > 0 ? std::sqrt(x) : 0.0; });
}

// Pseudo-inverse powers on the support (eigenvalues above tol).
inline Mat psd_pow_support(const Mat& m, double p, double tol = 1e-12) {
    return herm_apply(m, [&](double x) { return x > tol ? std::pow(x, p) : 0.0; });
}

inline Mat support_projector(const Mat& m, double tol = 1e-12) {
    return herm_apply(m, [&](double x) { return x > tol ? 1.0 : 0.0; });
}

// Shannon entropy (bits) of a probability-like spectrum; entries below cut dropped.
inline double entropy_bits(const RVec& p, double cut = 1e-14) {
    double s = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p(i) > cut) s -= p(i) * std::log2(p(i));
    return s;
}

inline double von_neumann_bits(const Mat& rho, double cut = 1e-14) {
    return entropy_bits(eigh(rho).values, cut);
}

inline Mat random_gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = cd(g(rng), g(rng));
    return m;
}

inline Mat random_unitary(Eigen::Index n, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Mat> qr(random_gaussian(n, n, rng));
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
        cd ph = r(i, i) / std::abs(r(i, i));
        q.col(i) *= ph;
    }
    return q;
}

inline Mat random_psd(Eigen::Index n, Eigen::Index rank, std::mt19937_64& rng) {
    Mat g = random_gaussian(n, rank, rng);
    return g * g.adjoint();
}

// Incrementally grown orthonormal basis (two-pass Gram-Schmidt).
class SpanTracker {
public:
    explicit SpanTracker(Eigen::Index dim, double tol = 1e-10) : basis_(dim, 0), tol_(tol) {}

    bool add(const Vec& v) {
        double n0 = v.norm();
        if (n0 == 0.0 || basis_.cols() >= basis_.rows()) return false;
        Vec w = v / n0;
        for (int pass = 0; pass < 2; ++pass) w -= basis_ * (basis_.adjoint() * w);
        double n = w.norm();
        if (n < tol_) return false;
        basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
        basis_.col(basis_.cols() - 1) = w / n;
        return true;
    }

    Eigen::Index size() const { return basis_.cols(); }
    Eigen::Index dim() const { return basis_.rows(); }
    bool full() const { return basis_.cols() == basis_.rows(); }
    const Mat& basis() const { return basis_; }

private:
    Mat basis_;
    double tol_;
};

inline long long ipow(long long b, int e) {
    long long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

inline double phase_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2 * M_PI);
    return std::min(d, 2 * M_PI - d);
}

// Fix the overall scalar of a gauge matrix: |det| = 1 and first nonzero entry real positive.
inline Mat normalize_gauge(Mat x) {
    const Eigen::Index n = x.rows();
    cd det = x.determinant();
    double a = std::abs(det);
    if (a > 0) x /= std::pow(a, 1.0 / double(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (std::abs(x(i, j)) > 1e-12) {
                x *= std::conj(x(i, j)) / std::abs(x(i, j));
                return x;
            }
    return x;
}

// Matrix with columns e_i for selected indices.
inline Mat selector(Eigen::Index n, const std::vector<Eigen::Index>& idx) {
    Mat s = Mat::Zero(n, Eigen::Index(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k], Eigen::Index(k)) = 1.0;
    return s;
}

} // namespace la
} // namespace tnfp

namespace tnfp::la {

// Row-major vectorization, matching the (alpha, alpha') pairing of transfer maps.
inline Vec rvec(const Mat& m) {
    Vec v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
    return v;
}

inline Mat runvec(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
    return m;
}

inline long long lcm(long long a, long long b) { return a / std::gcd(a, b) * b; }

// Direct sum of square matrices.
inline Mat direct_sum(const std::vector<Mat>& ms) {
    Eigen::Index n = 0;
    for (const auto& m : ms) n += m.rows();
    Mat r = Mat::Zero(n, n);
    Eigen::Index o = 0;
    for (const auto& m : ms) {
        r.block(o, o, m.rows(), m.cols()) = m;
        o += m.rows();
    }
    return r;
}

} // namespace tnfp::la

namespace tnfp::la {

// Partial trace over the subsystems not listed in keep (kept in ascending order).
inline Mat ptrace(const Mat& rho, const std::vector<int>& dims, const std::vector<int>& keep) {
    const int n = int(dims.size());
    std::vector<char> kept(std::size_t(n), 0);
    for (int k : keep) kept[std::size_t(k)] = 1;
    long long dk = 1, dt = 1;
    for (int s = 0; s < n; ++s) (kept[std::size_t(s)] ? dk : dt) *= dims[std::size_t(s)];
    std::vector<long long> stride(static_cast<std::size_t>(n));
    long long acc = 1;
    for (int s = n - 1; s >= 0; --s) {
        stride[std::size_t(s)] = acc;
        acc *= dims[std::size_t(s)];
    }
    auto compose = [&](long long a, long long t) {
        long long idx = 0;
        for (int s = n - 1; s >= 0; --s) {
            long long& src = kept[std::size_t(s)] ? a : t;
            idx += (src % dims[std::size_t(s)]) * stride[std::size_t(s)];
            src /= dims[std::size_t(s)];
        }
        return idx;
    };
    Mat out = Mat::Zero(dk, dk);
    for (long long a = 0; a < dk; ++a)
        for (long long b = 0; b < dk; ++b) {
            cd sum = 0;
            for (long long t = 0; t < dt; ++t) sum += rho(compose(a, t), compose(b, t));
            out(a, b) = sum;
        }
    return out;
}

// Reorder tensor factors: output factor q is input factor perm[q].
inline Mat permute(const Mat& op, const std::vector<int>& dims, const std::vector<int>& perm) {
    const int n = int(dims.size());
    std::vector<long long> in_stride(static_cast<std::size_t>(n)), out_dims(static_cast<std::size_t>(n));
    long long acc = 1;
    for (int s = n - 1; s >= 0; --s) {
        in_stride[std::size_t(s)] = acc;
        acc *= dims[std::size_t(s)];
    }
    for (int q = 0; q < n; ++q) out_dims[std::size_t(q)] = dims[std::size_t(perm[std::size_t(q)])];
    std::vector<long long> map(static_cast<std::size_t>(acc));
    for (long long o = 0; o < acc; ++o) {
        long long rem = o, idx = 0;
        for (int q = n - 1; q >= 0; --q) {
            idx += (rem % out_dims[std::size_t(q)]) * in_stride[std::size_t(perm[std::size_t(q)])];
            rem /= out_dims[std::size_t(q)];
        }
        map[std::size_t(o)] = idx;
    }
    Mat out(op.rows(), op.cols());
    for (long long r = 0; r < acc; ++r)
        for (long long c = 0; c < acc; ++c) out(r, c) = op(map[std::size_t(r)], map[std::size_t(c)]);
    return out;
}

inline double min_eigenvalue(const Mat& m) { return m.rows() ? eigh(m).values.minCoeff() : 0.0; }

} // namespace tnfp::la
