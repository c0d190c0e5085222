#pragma once

#include "tensor_core.hpp"

#include <map>

namespace tnfp::examples {

inline MpvTensor ghz() {
    MpvTensor A(2, 2);
    A[0](0, 0) = 1;
    A[1](1, 1) = 1;
    return A;
}

// Not a fixed point, yet correlations are distance independent.
inline MpvTensor zcl_not_rfp() {
    MpvTensor A(2, 2);
    A[0](0, 0) = 1;
    A[0](1, 1) = 1 / std::sqrt(2.0);
    A[1](1, 1) = 1 / std::sqrt(2.0);
    return A;
}

inline MpvTensor aklt() {
    MpvTensor A(3, 2);
    A[0] << 0, 1, 1, 0;
    A[1] << 0, cd(0, -1), cd(0, 1), 0;
    A[2] << 1, 0, 0, -1;
    return A;
}

// Each site holds two qubits; right qubit of n paired with left qubit of n+1.
inline MpvTensor bell_chain() {
    MpvTensor A(4, 2);
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) A[2 * m + n](m, n) = 1 / std::sqrt(2.0);
    return A;
}

inline MpvTensor w_state() {
    MpvTensor A(2, 2);
    A[0] = Mat::Identity(2, 2);
    A[1](0, 1) = 1;
    return A;
}

// M^{ij} = A^i (x) conj(A^j)
inline MpdoTensor pure_to_mpdo(const MpvTensor& A) {
    const int d = A.d();
    MpdoTensor M(d, A.D() * A.D());
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M.at(i, j) = la::kron(A[i], A[j].conjugate());
    return M;
}

// rho^{(N)} = 1 + sigma_z^{(x)N}
inline MpdoTensor toric() {
    MpdoTensor M(2, 2);
    M.at(0, 0) = Mat::Identity(2, 2);
    M.at(1, 1) << 1, 0, 0, -1;
    return M;
}

inline MpdoTensor max_mixed(int d = 2) {
    MpdoTensor M(d, 1);
    for (int i = 0; i < d; ++i) M.at(i, i)(0, 0) = 1;
    return M;
}

inline MpdoTensor product(const Mat& rho) {
    const int d = int(rho.rows());
    MpdoTensor M(d, 1);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M.at(i, j)(0, 0) = rho(i, j);
    return M;
}

// Bell chain; with probability p both qubits of a site are flipped.
inline MpdoTensor flip_chain(double p = 0.25) {
    MpvTensor A = bell_chain();
    Mat X(2, 2);
    X << 0, 1, 1, 0;
    std::vector<Mat> kraus{std::sqrt(1 - p) * Mat::Identity(4, 4), std::sqrt(p) * la::kron(X, X)};
    MpdoTensor M(4, 4);
    for (const auto& K : kraus) {
        std::vector<Mat> B(4, Mat::Zero(2, 2));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) B[std::size_t(i)] += K(i, j) * A[j];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) M.at(i, j) += la::kron(B[std::size_t(i)], B[std::size_t(j)].conjugate());
    }
    return M;
}

// Labelled bond blocks: each site is (+)_k C^{n_k} (x) C^{m_k}; eta[k][h] acts on
// C^{m_k} (right part of site n) (x) C^{n_h} (left part of site n+1).
struct EtaChain {
    std::vector<int> n, m;
    std::vector<std::vector<Mat>> eta;

    int labels() const { return int(n.size()); }
    int site_dim() const {
        int d = 0;
        for (int k = 0; k < labels(); ++k) d += n[std::size_t(k)] * m[std::size_t(k)];
        return d;
    }
    int offset(int k) const {
        int o = 0;
        for (int q = 0; q < k; ++q) o += n[std::size_t(q)] * m[std::size_t(q)];
        return o;
    }
};

// Virtual index (k, a, b) runs over matrix units E_ab on C^{m_k}; bond dimension sum m_k^2.
inline MpdoTensor eta_chain_tensor(const EtaChain& c) {
    const int K = c.labels(), d = c.site_dim();
    std::vector<int> voff(std::size_t(K) + 1, 0);
    for (int k = 0; k < K; ++k) voff[std::size_t(k) + 1] = voff[std::size_t(k)] + c.m[std::size_t(k)] * c.m[std::size_t(k)];
    const int D = voff[std::size_t(K)];
    MpdoTensor M(d, D);
    for (int kp = 0; kp < K; ++kp)
        for (int k = 0; k < K; ++k) {
            const Mat& eta = c.eta[std::size_t(kp)][std::size_t(k)];
            const int mp = c.m[std::size_t(kp)], nk = c.n[std::size_t(k)], mk = c.m[std::size_t(k)];
            for (int a = 0; a < mp; ++a)
                for (int b = 0; b < mp; ++b) {
                    Mat y = eta.block(a * nk, b * nk, nk, nk);
                    if (y.isZero(0.0)) continue;
                    for (int a2 = 0; a2 < mk; ++a2)
                        for (int b2 = 0; b2 < mk; ++b2) {
                            Mat G = Mat::Zero(mk, mk);
                            G(a2, b2) = 1;
                            Mat op = la::kron(y, G);
                            const int alpha = voff[std::size_t(kp)] + a * mp + b;
                            const int beta = voff[std::size_t(k)] + a2 * mk + b2;
                            const int o = c.offset(k);
                            for (int i = 0; i < nk * mk; ++i)
                                for (int j = 0; j < nk * mk; ++j)
                                    if (op(i, j) != 0.0) M.at(o + i, o + j)(alpha, beta) = op(i, j);
                        }
                }
        }
    return M;
}

// Classical two-label ring with transfer [[1, 1/2], [1/2, 1]], embedded on two qubits per site.
inline MpdoTensor classical_ring() {
    EtaChain c;
    c.n = {1, 1};
    c.m = {1, 1};
    c.eta = {{Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 0.5)}, {Mat::Constant(1, 1, 0.5), Mat::Constant(1, 1, 1.0)}};
    Mat V = Mat::Zero(4, 2);
    V(0, 0) = 1;  // |00>
    V(3, 1) = 1;  // |11>
    return eta_chain_tensor(c).conjugated(V);
}

struct NamedMpv {
    std::string name;
    MpvTensor tensor;
};

struct NamedMpdo {
    std::string name;
    MpdoTensor tensor;
};

inline std::vector<NamedMpv> pure_library() {
    return {{"ghz", ghz()}, {"aklt", aklt()}, {"zcl_not_rfp", zcl_not_rfp()}, {"bell_chain", bell_chain()}, {"w_state", w_state()}};
}

inline std::vector<NamedMpdo> mixed_library() {
    return {{"toric", toric()},
            {"max_mixed", max_mixed()},
            {"flip_chain", flip_chain()},
            {"classical_ring", classical_ring()},
            {"aklt_mpdo", pure_to_mpdo(aklt())},
            {"ghz_mpdo", pure_to_mpdo(ghz())}};
}

} // namespace tnfp::examples
