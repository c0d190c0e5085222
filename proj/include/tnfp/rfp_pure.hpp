#pragma once

#include "canonical.hpp"

namespace tnfp {

// ------------------------------------------------------- site utilities

namespace sites {

// Digit of site n (n = 0 most significant) in a row-major multi-index.
inline long long digit(long long idx, int n, int N, int d) {
    for (int k = N - 1; k > n; --k) idx /= d;
    return idx % d;
}

// Reshape psi into M[kept][rest]; kept sites in the listed order.
inline Mat split_state(const Vec& psi, int N, int d, const std::vector<int>& kept) {
    std::vector<int> rest;
    for (int n = 0; n < N; ++n)
        if (std::find(kept.begin(), kept.end(), n) == kept.end()) rest.push_back(n);
    const long long dk = la::ipow(d, int(kept.size())), dr = la::ipow(d, int(rest.size()));
    Mat M(dk, dr);
    std::vector<long long> stride(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) stride[std::size_t(n)] = la::ipow(d, N - 1 - n);
    for (long long a = 0; a < dk; ++a) {
        long long base = 0, rem = a;
        for (int k = int(kept.size()) - 1; k >= 0; --k) {
            base += (rem % d) * stride[std::size_t(kept[std::size_t(k)])];
            rem /= d;
        }
        for (long long b = 0; b < dr; ++b) {
            long long idx = base, r2 = b;
            for (int k = int(rest.size()) - 1; k >= 0; --k) {
                idx += (r2 % d) * stride[std::size_t(rest[std::size_t(k)])];
                r2 /= d;
            }
            M(a, b) = psi(idx);
        }
    }
    return M;
}

inline Mat reduced_state(const Vec& psi, int N, int d, const std::vector<int>& kept) {
    Mat M = split_state(psi, N, d, kept);
    return M * M.adjoint();
}

// Apply an L-site operator to sites start..start+L-1 (mod N) of a vector.
inline Vec apply_local(const Mat& O, int L, int start, int N, int d, const Vec& v) {
    std::vector<int> kept;
    for (int k = 0; k < L; ++k) kept.push_back((start + k) % N);
    Mat M = split_state(v, N, d, kept);
    Mat R = O * M;
    // scatter back
    Vec out = Vec::Zero(v.size());
    std::vector<int> rest;
    for (int n = 0; n < N; ++n)
        if (std::find(kept.begin(), kept.end(), n) == kept.end()) rest.push_back(n);
    std::vector<long long> stride(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) stride[std::size_t(n)] = la::ipow(d, N - 1 - n);
    for (long long a = 0; a < R.rows(); ++a) {
        long long base = 0, rem = a;
        for (int k = L - 1; k >= 0; --k) {
            base += (rem % d) * stride[std::size_t(kept[std::size_t(k)])];
            rem /= d;
        }
        for (long long b = 0; b < R.cols(); ++b) {
            long long idx = base, r2 = b;
            for (int k = int(rest.size()) - 1; k >= 0; --k) {
                idx += (r2 % d) * stride[std::size_t(rest[std::size_t(k)])];
                r2 /= d;
            }
            out(idx) = R(a, b);
        }
    }
    return out;
}

} // namespace sites

// ------------------------------------------------------------- flow

struct FlowTrace {
    std::vector<double> residuals;  // ||E^2 - E|| per step
    bool converged = false;
    int steps = 0;
    TransferMap limit;
};

inline FlowTrace renormalization_flow(const TransferMap& T, int max_steps = 60) {
    double r = la::spectral_radius(T.matrix);
    if (std::abs(r - 1.0) > 1e-8) throw NumericalError("unnormalized input: transfer map spectral radius " + std::to_string(r));
    FlowTrace f;
    Mat E = T.matrix;
    for (int k = 0; k <= max_steps; ++k) {
        Mat E2 = E * E;
        double res = (E2 - E).norm();
        f.residuals.push_back(res);
        f.steps = k;
        if (res < 1e-10 * std::max(1.0, E.norm())) {
            f.converged = true;
            break;
        }
        E = E2;
        if (!E.allFinite()) break;
    }
    f.limit = {E, T.left_dim, T.right_dim};
    return f;
}

// Transfer map of the CFII representative with the global scale removed.
inline TransferMap cfii_transfer(const MpvTensor& A) {
    auto c = to_cfii(A);
    MpvTensor t = c.tensor.scaled(1.0 / c.cf.scale);
    return transfer_map(t, t);
}

inline FlowTrace renormalization_flow(const MpvTensor& A, int max_steps = 60) {
    return renormalization_flow(cfii_transfer(A), max_steps);
}

struct RfpVerdict {
    bool rfp = false;
    double residual = 0;  // ||E^2 - E||
};

inline RfpVerdict is_rfp_pure(const MpvTensor& A) {
    Mat E = cfii_transfer(A).matrix;
    RfpVerdict v;
    v.residual = (E * E - E).norm();
    v.rfp = v.residual < 1e-8;
    return v;
}

// ------------------------------------------------------ decomposition

struct RfpDecomposition {
    std::vector<RVec> lambda;      // per BNT, trace one
    std::vector<MpvTensor> U;      // per BNT, U^i_j with A^{II}_j = Lambda_j^{1/2} U_j
    std::vector<Mat> gauges;       // per block: X_{j,q} G_j^{-1}
    std::vector<cd> weights;       // per block, unimodular
    std::vector<int> block_bnt;
    double scale = 1;
    int period = 1;
    Mat basis;
    double isometry_residual = 0;

    MpvTensor tensor() const {
        MpvTensor out;
        for (int i = 0; i < U[0].d(); ++i) {
            std::vector<Mat> parts;
            for (std::size_t b = 0; b < weights.size(); ++b) {
                int j = block_bnt[b];
                Mat L = lambda[std::size_t(j)].cwiseSqrt().cast<cd>().asDiagonal();
                const Mat& X = gauges[b];
                parts.push_back(scale * weights[b] * X * L * U[std::size_t(j)][i] * X.inverse());
            }
            out.A.push_back(la::direct_sum(parts));
        }
        return out;
    }
};

inline RfpDecomposition rfp_decompose(const MpvTensor& A) {
    auto v = is_rfp_pure(A);
    if (!v.rfp) throw PreconditionError("rfp_decompose: tensor is not a fixed point (residual " + std::to_string(v.residual) + ")");
    auto c = to_cfii(A);
    RfpDecomposition r;
    r.scale = c.cf.scale;
    r.period = c.cf.period;
    r.basis = c.cf.basis;
    r.lambda = c.lambda;
    for (std::size_t j = 0; j < c.bnt.size(); ++j) {
        Mat Li = c.lambda[j].cwiseSqrt().cwiseInverse().cast<cd>().asDiagonal();
        MpvTensor U = c.bnt[j];
        for (auto& m : U.A) m = Li * m;
        r.U.push_back(U);
    }
    for (const auto& b : c.cf.blocks) {
        r.weights.push_back(b.mu);
        r.block_bnt.push_back(b.bnt);
        r.gauges.push_back(b.X * c.gauge[std::size_t(b.bnt)].inverse());
    }
    // isometry across all j: sum_i U^i_{j;ab} conj(U^i_{j';a'b'}) = delta
    std::vector<Vec> cols;
    for (const auto& U : r.U) {
        const int D = U.D();
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) {
                Vec v(U.d());
                for (int i = 0; i < U.d(); ++i) v(i) = U[i](a, b);
                cols.push_back(v);
            }
    }
    Mat V(A.d() == 0 ? 0 : r.U[0].d(), Eigen::Index(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) V.col(Eigen::Index(k)) = cols[k];
    r.isometry_residual = (V.adjoint() * V - Mat::Identity(V.cols(), V.cols())).norm();
    if (r.isometry_residual > 1e-8)
        throw NumericalError("decomposition failed: isometry residual " + std::to_string(r.isometry_residual));
    return r;
}

// ---------------------------------------------------- CID / LO

inline std::vector<Mat> gell_mann_basis(int d) {
    std::vector<Mat> B;
    B.push_back(Mat::Identity(d, d) / std::sqrt(double(d)));
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
            Mat s = Mat::Zero(d, d), a = Mat::Zero(d, d);
            s(j, k) = s(k, j) = 1 / std::sqrt(2.0);
            a(j, k) = cd(0, -1 / std::sqrt(2.0));
            a(k, j) = cd(0, 1 / std::sqrt(2.0));
            B.push_back(s);
            B.push_back(a);
        }
    for (int l = 1; l < d; ++l) {
        Mat h = Mat::Zero(d, d);
        for (int m = 0; m < l; ++m) h(m, m) = 1;
        h(l, l) = -l;
        B.push_back(h / std::sqrt(double(l * (l + 1))));
    }
    return B;
}

struct CidReport {
    bool cid = false;
    double deviation = 0;
};

// Correlations of separated regions compared across all admissible shifts.
inline CidReport is_cid(const MpvTensor& A, int N, double tol = 1e-8) {
    if (N < 4) throw PreconditionError("is_cid: need N >= 4");
    Vec psi = mpv_dense(A, N).data;
    double nrm = psi.norm();
    if (nrm == 0) throw NumericalError("is_cid: state vanishes");
    psi /= nrm;
    const int d = A.d();
    CidReport rep;
    auto basis = gell_mann_basis(d);
    auto corr = [&](const Mat& rho, const std::vector<Mat>& ops_a, const std::vector<Mat>& ops_b) {
        std::vector<cd> out;
        for (const auto& oa : ops_a)
            for (const auto& ob : ops_b) out.push_back((rho * la::kron(oa, ob)).trace());
        return out;
    };
    auto compare = [&](const std::vector<cd>& ref, const std::vector<cd>& got) {
        for (std::size_t k = 0; k < ref.size(); ++k) rep.deviation = std::max(rep.deviation, std::abs(ref[k] - got[k]));
    };
    // single sites, at least one site apart on both sides of the ring
    std::vector<cd> ref;
    for (int n = 2; n <= N - 2; ++n) {
        auto c = corr(sites::reduced_state(psi, N, d, {0, n}), basis, basis);
        if (ref.empty()) ref = c;
        else compare(ref, c);
    }
    if (d <= 3 && N >= 7) {
        std::vector<Mat> pair;
        for (const auto& a : basis)
            for (const auto& b : basis) pair.push_back(la::kron(a, b));
        std::vector<cd> ref2;
        for (int n = 3; n <= N - 4; ++n) {
            auto c = corr(sites::reduced_state(psi, N, d, {0, 1, n, n + 1}), pair, pair);
            if (ref2.empty()) ref2 = c;
            else compare(ref2, c);
        }
    }
    rep.cid = rep.deviation < tol;
    return rep;
}

inline bool is_locally_orthogonal(const CanonicalDecomposition& dec, double tol = 1e-10) {
    for (std::size_t j = 0; j < dec.bnt.size(); ++j)
        for (std::size_t k = j + 1; k < dec.bnt.size(); ++k)
            if (transfer_map(dec.bnt[j], dec.bnt[k]).matrix.norm() > tol) return false;
    return true;
}

// --------------------------------------------------- parent Hamiltonian

struct ParentHamiltonian {
    int L = 0;
    int d = 0;
    Mat P;        // projector on S_L
    Mat P_perp;
    bool commuting = false;
    double commutator = 0;  // max_j ||[tau_j(P), P]||_F
    std::vector<std::pair<int, int>> ground_dim;  // (N, kernel dimension)
    std::vector<std::pair<int, int>> expected_dim;  // (N, rank of the basis-element states)
    bool parent = true;  // kernel equals the span at every checked N
};

namespace detail {

// || [P x 1_j, 1_j x P] ||_F without forming (L+j)-site matrices.
inline double shifted_commutator(const Mat& Qs, int L, int j, int d) {
    const long long dl = la::ipow(d, L), dj = la::ipow(d, j);
    const Eigen::Index r = Qs.cols();
    Mat P = Qs * Qs.adjoint();
    Mat Pt = P.transpose();
    double acc = 0;
    // columns of V: s_k (first L sites) tensor e_c (last j sites)
    for (Eigen::Index k = 0; k < r; ++k)
        for (long long c = 0; c < dj; ++c) {
            // vector on L+j sites as (d^j x d^L) matrix: rows = first j sites, cols = last L sites
            Vec v = Vec::Zero(dl * dj);
            for (long long a = 0; a < dl; ++a) v(a * dj + c) = Qs(a, k);
            Mat M = la::runvec(v, dj, dl);
            Vec yv = la::rvec(M * Pt);
            // project out span(V): coefficients of yv on s_k' x e_c'
            Mat Y = la::runvec(yv, dl, dj);  // rows = first L sites, cols = last j sites
            Mat coeff = Qs.adjoint() * Y;    // r x d^j
            Mat W = Y - Qs * coeff;
            acc += W.squaredNorm();
        }
    return std::sqrt(2.0 * acc);
}

} // namespace detail

inline ParentHamiltonian parent_hamiltonian(const MpvTensor& A, int L, int N_check = 8) {
    A.check();
    const int d = A.d();
    if (L < 1 || L * std::log2(double(d)) > 14 + 1e-9) throw PreconditionError("parent_hamiltonian: interaction range outside cap");
    auto seg = mpv_segment(A, L);
    const int D = A.D();
    Mat S(Eigen::Index(seg.size()), D * D);
    for (std::size_t i = 0; i < seg.size(); ++i) S.row(Eigen::Index(i)) = la::rvec(seg[i]).transpose();
    Mat Qs = la::orth(S, 1e-10);
    const long long dl = la::ipow(d, L);
    if (Qs.cols() >= dl) throw PreconditionError("no complement: S_L spans the whole local space");
    ParentHamiltonian H;
    H.L = L;
    H.d = d;
    H.P = Qs * Qs.adjoint();
    H.P_perp = Mat::Identity(dl, dl) - H.P;
    for (int j = 1; j < L; ++j) H.commutator = std::max(H.commutator, detail::shifted_commutator(Qs, L, j, d));
    H.commuting = H.commutator < 1e-8;

    // parenthood at small N: ground space = intersection of ranges of tau_j(P)
    auto cf = canonical_form(A);
    if (cf.period != 1) {
        H.parent = false;  // periodic input: basis-element states need blocking
        return H;
    }
    // v = Bc lies in range(tau_s(P)) iff c has eigenvalue 1 under B^dagger tau_s(P) B
    auto restrict = [&](const Mat& B, int s, int n) {
        Mat PB(B.rows(), B.cols());
        for (Eigen::Index k = 0; k < B.cols(); ++k) PB.col(k) = sites::apply_local(H.P, L, s, n, d, B.col(k));
        auto e = la::eigh(B.adjoint() * PB);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index k = 0; k < e.values.size(); ++k)
            if (e.values(k) > 1 - 1e-9) keep.push_back(k);
        Mat C(B.cols(), Eigen::Index(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) C.col(Eigen::Index(k)) = e.vectors.col(keep[k]);
        return Mat(B * C);
    };
    // open-chain ground space, grown one site at a time, then closed into a ring
    Mat open = Qs;
    for (int N = L + 1; N <= N_check; ++N) {
        if (N * std::log2(double(d)) > 14 + 1e-9) break;
        const long long dn = la::ipow(d, N);
        open = restrict(la::kron(open, Mat::Identity(d, d)), N - L, N);
        Mat B = open;
        for (int s = N - L + 1; s < N && B.cols() > 0; ++s) B = restrict(B, s, N);
        H.ground_dim.push_back({N, int(B.cols())});
        Mat V(dn, cf.g());
        for (int j = 0; j < cf.g(); ++j) V.col(j) = mpv_dense(cf.bnt[std::size_t(j)], N).data;
        int expect = int(la::rank(V, 1e-9));
        H.expected_dim.push_back({N, expect});
        bool inside = (V - B * (B.adjoint() * V)).norm() < 1e-8 * std::max(1.0, V.norm());
        if (int(B.cols()) != expect || !inside) H.parent = false;
    }
    return H;
}

// ------------------------------------------------------- entropies

struct EntropyProfile {
    std::vector<double> S;  // S_1..S_{N-1}
    bool sal = false;
};

inline EntropyProfile entropy_profile_pure(const MpvTensor& A, int N, double tol = 1e-9) {
    Vec psi = mpv_dense(A, N).data;
    double nrm = psi.norm();
    if (nrm == 0) throw NumericalError("entropy_profile_pure: state vanishes");
    psi /= nrm;
    EntropyProfile p;
    for (int L = 1; L < N; ++L) {
        std::vector<int> kept;
        for (int k = 0; k < L; ++k) kept.push_back(k);
        Mat M = sites::split_state(psi, N, A.d(), kept);
        Eigen::JacobiSVD<Mat> svd(M);
        RVec s2 = svd.singularValues().array().square();
        p.S.push_back(la::entropy_bits(s2));
    }
    p.sal = true;
    for (int L = 2; L <= N / 2; ++L)
        if (std::abs(p.S[std::size_t(L - 1)] - p.S[0]) > tol) p.sal = false;
    return p;
}

// ---------------------------------------------------- decorrelation

struct DecorrelationReport {
    bool decorrelated = false;
    bool projector_condition = false;  // [P_AX, P_XB] = 0 and P_AX P_XB = P_AXB
    bool agree = false;
    double decorrelation_residual = 0;
    double commutator = 0;
    double product_residual = 0;
    Mat P_AX, P_XB;
};

namespace detail {

// Partial trace of an operator on (a x b) over the b factor or the a factor.
inline Mat trace_right(const Mat& rho, long long a, long long b) {
    Mat r = Mat::Zero(a, a);
    for (long long i = 0; i < a; ++i)
        for (long long j = 0; j < a; ++j)
            for (long long k = 0; k < b; ++k) r(i, j) += rho(i * b + k, j * b + k);
    return r;
}

inline Mat trace_left(const Mat& rho, long long a, long long b) {
    Mat r = Mat::Zero(b, b);
    for (long long k = 0; k < a; ++k) r += rho.block(k * b, k * b, b, b);
    return r;
}

} // namespace detail

inline DecorrelationReport decorrelation_check(const Mat& K, int dA, int dX, int dB, double tol = 1e-9) {
    const long long n = (long long)dA * dX * dB;
    if (K.rows() != n) throw PreconditionError("decorrelation_check: partition dimensions do not match the basis");
    if ((K.adjoint() * K - Mat::Identity(K.cols(), K.cols())).norm() > 1e-8)
        throw PreconditionError("decorrelation_check: basis is not orthonormal");
    DecorrelationReport rep;
    const long long rest_a = (long long)dX * dB, rest_b = (long long)dA * dX;
    // O_A = e_ij x 1, O_B = 1 x e_kl
    auto opA = [&](int i, int j) {
        Mat Q = Mat::Zero(n, K.cols());  // (O_A^dagger K) rows
        for (long long r = 0; r < rest_a; ++r) Q.row(i * rest_a + r) = K.row(j * rest_a + r);
        return Q;  // O_A K with O_A = |i><j|
    };
    auto opB = [&](int k, int l) {
        Mat Q = Mat::Zero(n, K.cols());
        for (long long r = 0; r < rest_b; ++r) Q.row(r * dB + k) = K.row(r * dB + l);
        return Q;
    };
    std::vector<Mat> AK, AdK, BK, BdK;
    for (int i = 0; i < dA; ++i)
        for (int j = 0; j < dA; ++j) {
            AK.push_back(opA(i, j));
            AdK.push_back(opA(j, i));
        }
    for (int k = 0; k < dB; ++k)
        for (int l = 0; l < dB; ++l) {
            BK.push_back(opB(k, l));
            BdK.push_back(opB(l, k));
        }
    for (std::size_t a = 0; a < AK.size(); ++a)
        for (std::size_t b = 0; b < BK.size(); ++b) {
            // K^dagger O_A P^perp O_B K and K^dagger O_B P^perp O_A K
            Mat t1 = AdK[a].adjoint() * BK[b] - (K.adjoint() * AK[a]) * (K.adjoint() * BK[b]);
            Mat t2 = BdK[b].adjoint() * AK[a] - (K.adjoint() * BK[b]) * (K.adjoint() * AK[a]);
            rep.decorrelation_residual = std::max({rep.decorrelation_residual, t1.norm(), t2.norm()});
        }
    rep.decorrelated = rep.decorrelation_residual < tol;
    Mat P = K * K.adjoint();
    Mat sAX = detail::trace_right(P, rest_b, dB);
    Mat sXB = detail::trace_left(P, dA, rest_a);
    rep.P_AX = la::kron(la::support_projector(sAX, 1e-10), Mat::Identity(dB, dB));
    rep.P_XB = la::kron(Mat::Identity(dA, dA), la::support_projector(sXB, 1e-10));
    rep.commutator = (rep.P_AX * rep.P_XB - rep.P_XB * rep.P_AX).norm();
    rep.product_residual = (rep.P_AX * rep.P_XB - P).norm();
    rep.projector_condition = rep.commutator < 1e-8 && rep.product_residual < 1e-8;
    rep.agree = rep.decorrelated == rep.projector_condition;
    return rep;
}

} // namespace tnfp
