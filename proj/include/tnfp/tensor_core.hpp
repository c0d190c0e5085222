#pragma once

#include "linalg.hpp"

#include <cstdint>
#include <functional>

namespace tnfp {

// Tolerances and dense-oracle caps shared by every module.
struct Config {
    double tol = 1e-10;
    int pure_cap_bits = 20;   // N log2 d for dense vectors
    int mixed_cap_bits = 16;  // 2N log2 d for dense operators
    long long phys_cap = 1 << 16;
};

inline Config& config() {
    static Config c;
    return c;
}

// A[i] is the D x D matrix for physical index i.
struct MpvTensor {
    std::vector<Mat> A;

    MpvTensor() = default;
    MpvTensor(int d, int D) : A(std::size_t(d), Mat::Zero(D, D)) {}
    explicit MpvTensor(std::vector<Mat> mats) : A(std::move(mats)) {}

    int d() const { return int(A.size()); }
    int D() const { return A.empty() ? 0 : int(A[0].rows()); }
    Mat& operator[](int i) { return A[std::size_t(i)]; }
    const Mat& operator[](int i) const { return A[std::size_t(i)]; }

    void check() const {
        if (A.empty()) throw PreconditionError("tensor has no physical index");
        for (const auto& m : A) {
            if (m.rows() != D() || m.cols() != D() || D() < 1)
                throw PreconditionError("inconsistent virtual dimensions");
            if (!m.allFinite()) throw PreconditionError("non-finite tensor entry");
        }
    }

    MpvTensor scaled(cd s) const {
        MpvTensor r = *this;
        for (auto& m : r.A) m *= s;
        return r;
    }

    // X A^i X^{-1}
    MpvTensor gauged(const Mat& X) const {
        Mat Xi = X.inverse();
        MpvTensor r = *this;
        for (auto& m : r.A) m = X * m * Xi;
        return r;
    }

    // Coefficient matrix with rows vec(A^i).
    Mat span_matrix() const {
        Mat s(d(), D() * D());
        for (int i = 0; i < d(); ++i) s.row(i) = la::vec(A[std::size_t(i)]).transpose();
        return s;
    }
};

// M[i*d + j] is the D x D matrix for ket i, bra j.
struct MpdoTensor {
    int dim = 0;
    std::vector<Mat> M;

    MpdoTensor() = default;
    MpdoTensor(int d, int D) : dim(d), M(std::size_t(d * d), Mat::Zero(D, D)) {}

    int d() const { return dim; }
    int D() const { return M.empty() ? 0 : int(M[0].rows()); }
    Mat& at(int i, int j) { return M[std::size_t(i * dim + j)]; }
    const Mat& at(int i, int j) const { return M[std::size_t(i * dim + j)]; }

    MpvTensor mpv_view() const { return MpvTensor(M); }

    static MpdoTensor from_mpv_view(const MpvTensor& v, int d) {
        if (v.d() != d * d) throw PreconditionError("MPV view has wrong physical dimension");
        MpdoTensor m;
        m.dim = d;
        m.M = v.A;
        return m;
    }

    void check() const {
        if (dim < 1 || int(M.size()) != dim * dim) throw PreconditionError("bad MPDO shape");
        mpv_view().check();
    }

    MpdoTensor scaled(cd s) const {
        MpdoTensor r = *this;
        for (auto& m : r.M) m *= s;
        return r;
    }

    // Local basis change on the physical legs: M -> U M U^dagger (U is d' x d).
    MpdoTensor conjugated(const Mat& U) const {
        const int dn = int(U.rows());
        MpdoTensor r(dn, D());
        for (int a = 0; a < dn; ++a)
            for (int b = 0; b < dn; ++b) {
                Mat acc = Mat::Zero(D(), D());
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j) {
                        cd c = U(a, i) * std::conj(U(b, j));
                        if (c != 0.0) acc += c * at(i, j);
                    }
                r.at(a, b) = acc;
            }
        return r;
    }

    // Physical operator for a fixed pair of virtual indices.
    Mat phys_op(int alpha, int beta) const {
        Mat o(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) o(i, j) = at(i, j)(alpha, beta);
        return o;
    }
};

struct TransferMap {
    Mat matrix;
    int left_dim = 0;
    int right_dim = 0;
};

struct DenseState {
    int N = 0;
    int local_dim = 0;
    Vec data;
};

struct DenseOperator {
    int N = 0;
    int local_dim = 0;
    Mat data;
    double hermitian_residual = 0;
};

inline MpvTensor block(const MpvTensor& A, int p) {
    if (p < 1) throw PreconditionError("blocking factor must be >= 1");
    double bits = p * std::log2(double(A.d()));
    if (bits > std::log2(double(config().phys_cap)) + 1e-9)
        throw PreconditionError("blocking too large: d^p exceeds the physical-dimension cap");
    std::vector<Mat> cur = A.A;
    for (int k = 1; k < p; ++k) {
        std::vector<Mat> nxt;
        nxt.reserve(cur.size() * A.A.size());
        for (const auto& c : cur)
            for (const auto& a : A.A) nxt.push_back(c * a);
        cur = std::move(nxt);
    }
    return MpvTensor(std::move(cur));
}

// Blocking of an MPDO tensor: physical pair (i1..ip ; j1..jp), row-major.
inline MpdoTensor block(const MpdoTensor& M, int p) {
    if (p < 1) throw PreconditionError("blocking factor must be >= 1");
    const int d = M.d();
    double bits = 2 * p * std::log2(double(d));
    if (bits > std::log2(double(config().phys_cap)) + 1e-9)
        throw PreconditionError("blocking too large: d^p exceeds the physical-dimension cap");
    MpdoTensor cur = M;
    for (int k = 1; k < p; ++k) {
        const int dc = cur.d();
        MpdoTensor nxt(dc * d, M.D());
        for (int i1 = 0; i1 < dc; ++i1)
            for (int j1 = 0; j1 < dc; ++j1)
                for (int i2 = 0; i2 < d; ++i2)
                    for (int j2 = 0; j2 < d; ++j2)
                        nxt.at(i1 * d + i2, j1 * d + j2) = cur.at(i1, j1) * M.at(i2, j2);
        cur = std::move(nxt);
    }
    return cur;
}

inline TransferMap transfer_map(const MpvTensor& A, const MpvTensor& B) {
    if (A.d() != B.d()) throw PreconditionError("transfer_map: physical dimension mismatch");
    TransferMap t;
    t.left_dim = A.D();
    t.right_dim = B.D();
    t.matrix = Mat::Zero(A.D() * B.D(), A.D() * B.D());
    for (int i = 0; i < A.d(); ++i) t.matrix += la::kron(A[i], B[i].conjugate());
    return t;
}

namespace detail {

inline void check_cap(int N, int d, int cap_bits, const char* what) {
    if (N < 1) throw PreconditionError(std::string(what) + ": N must be >= 1");
    if (N * std::log2(double(d)) > cap_bits + 1e-9)
        throw PreconditionError(std::string(what) + ": dense cap exceeded");
}

// All ordered products A^{i1}..A^{iN}; index row-major with i1 most significant.
inline void products(const std::vector<Mat>& A, int N, const std::function<void(long long, const Mat&)>& f) {
    const int d = int(A.size());
    std::function<void(int, long long, const Mat&)> rec = [&](int depth, long long idx, const Mat& pre) {
        if (depth == N) {
            f(idx, pre);
            return;
        }
        for (int i = 0; i < d; ++i) {
            if (A[std::size_t(i)].isZero(0.0)) continue;
            rec(depth + 1, idx * d + i, depth == 0 ? Mat(A[std::size_t(i)]) : Mat(pre * A[std::size_t(i)]));
        }
    };
    // Skipped branches are zero; the caller pre-zeroes its output.
    rec(0, 0, Mat());
}

} // namespace detail

inline DenseState mpv_dense(const MpvTensor& A, int N) {
    detail::check_cap(N, A.d(), config().pure_cap_bits, "mpv_dense");
    DenseState s;
    s.N = N;
    s.local_dim = A.d();
    s.data = Vec::Zero(la::ipow(A.d(), N));
    detail::products(A.A, N, [&](long long idx, const Mat& m) { s.data(idx) = m.trace(); });
    return s;
}

// Ring of N sites; row index (i1..iN), column (j1..jN).
inline DenseOperator mpdo_dense(const MpdoTensor& M, int N) {
    detail::check_cap(2 * N, M.d(), config().mixed_cap_bits, "mpdo_dense");
    const int d = M.d();
    const long long dim = la::ipow(d, N);
    DenseOperator o;
    o.N = N;
    o.local_dim = d;
    o.data = Mat::Zero(dim, dim);
    detail::products(M.M, N, [&](long long idx, const Mat& m) {
        // idx enumerates (i1 j1)(i2 j2)... in base d^2
        long long row = 0, col = 0, rem = idx, mul = 1;
        for (int n = 0; n < N; ++n) {
            long long pair = rem % (d * d);
            rem /= (d * d);
            row += (pair / d) * mul;
            col += (pair % d) * mul;
            mul *= d;
        }
        o.data(row, col) = m.trace();
    });
    o.hermitian_residual = la::herm_residual(o.data);
    return o;
}

// Open-boundary segment: the D x D matrix of every product (used for associativity checks).
inline std::vector<Mat> mpv_segment(const MpvTensor& A, int N) {
    detail::check_cap(N, A.d(), config().pure_cap_bits, "mpv_segment");
    std::vector<Mat> out(std::size_t(la::ipow(A.d(), N)), Mat::Zero(A.D(), A.D()));
    detail::products(A.A, N, [&](long long idx, const Mat& m) { out[std::size_t(idx)] = m; });
    return out;
}

// Physical boundary operator of an open segment: sum_{ab} X(b,a) (M...M)_{ab}, dim d^L.
inline Mat boundary_map(const MpdoTensor& M, int L, const Mat& X) {
    detail::check_cap(2 * L, M.d(), config().mixed_cap_bits, "boundary_map");
    const int d = M.d();
    const long long dim = la::ipow(d, L);
    Mat out = Mat::Zero(dim, dim);
    detail::products(M.M, L, [&](long long idx, const Mat& m) {
        long long row = 0, col = 0, rem = idx, mul = 1;
        for (int n = 0; n < L; ++n) {
            long long pair = rem % (d * d);
            rem /= (d * d);
            row += (pair / d) * mul;
            col += (pair % d) * mul;
            mul *= d;
        }
        out(row, col) = (X.transpose().cwiseProduct(m)).sum();
    });
    return out;
}

} // namespace tnfp
