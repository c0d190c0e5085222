#pragma once

#include "rfp_pure.hpp"

#include <functional>
#include <map>

namespace tnfp {

// --------------------------------------------------------------- basics

// Sum_i M^{ii}
inline Mat physical_trace(const MpdoTensor& M) {
    Mat E = Mat::Zero(M.D(), M.D());
    for (int i = 0; i < M.d(); ++i) E += M.at(i, i);
    return E;
}

// Reduced state of L consecutive sites of the N-site ring (unnormalized).
inline Mat mpdo_marginal(const MpdoTensor& M, int N, int L) {
    if (L < 1 || L > N) throw PreconditionError("mpdo_marginal: need 1 <= L <= N");
    Mat E = physical_trace(M);
    Mat X = Mat::Identity(M.D(), M.D());
    for (int k = L; k < N; ++k) X = X * E;
    return boundary_map(M, L, X);
}

// Compress the physical space to the span used by the local operators (entropy preserving).
inline MpdoTensor compress_physical(const MpdoTensor& M, Mat* V_out = nullptr) {
    const int d = M.d(), D = M.D();
    Mat cols(d, 2 * D * D * d);
    Eigen::Index c = 0;
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) {
            Mat o = M.phys_op(a, b);
            cols.middleCols(c, d) = o;
            cols.middleCols(c + d, d) = o.adjoint();
            c += 2 * d;
        }
    Mat V = la::orth(cols, 1e-12);
    if (V_out) *V_out = V;
    if (V.cols() == d) return M;
    return M.conjugated(V.adjoint());
}

struct MpdoValidation {
    std::vector<int> N;
    std::vector<double> hermitian_residual;
    std::vector<double> min_eigenvalue;
    bool hermitian = true;
    bool positive = true;
};

inline MpdoValidation validate_mpdo(const MpdoTensor& M, const std::vector<int>& Ns, double tol = 1e-10) {
    M.check();
    MpdoValidation v;
    for (int N : Ns) {
        auto rho = mpdo_dense(M, N);
        double scale = std::max(1e-300, rho.data.norm());
        double mn = la::min_eigenvalue(la::hermitize(rho.data));
        v.N.push_back(N);
        v.hermitian_residual.push_back(rho.hermitian_residual);
        v.min_eigenvalue.push_back(mn);
        if (rho.hermitian_residual > tol * scale) v.hermitian = false;
        if (mn < -tol * scale) v.positive = false;
    }
    v.positive = v.positive && v.hermitian;
    return v;
}

// ------------------------------------------------------------------ ZCL

struct MixedZcl {
    bool zcl = false;
    cd lambda = 0;   // E^2 = lambda E
    Mat E;           // physical trace of the canonical-form tensor
    double residual = 0;
};

inline MpdoTensor canonical_mpdo(const MpdoTensor& M, CanonicalDecomposition* out = nullptr) {
    auto cf = canonical_form(M.mpv_view());
    MpdoTensor K = MpdoTensor::from_mpv_view(cf.tensor(), int(std::lround(std::sqrt(double(cf.d)))));
    if (out) *out = std::move(cf);
    return K;
}

inline MixedZcl is_zcl_mixed(const MpdoTensor& M) {
    M.check();
    MixedZcl z;
    z.E = physical_trace(canonical_mpdo(M));
    // E^2 = lambda E forces tr E^2 = lambda tr E
    cd trE = z.E.trace();
    double nE = z.E.norm();
    if (nE == 0 || std::abs(trE) < 1e-10 * nE) {
        z.residual = nE;
        return z;
    }
    z.lambda = (z.E * z.E).trace() / trE;
    z.residual = (z.E * z.E - z.lambda * z.E).norm() / (nE * nE);
    z.zcl = z.residual < 1e-8;
    return z;
}

// ---------------------------------------------------------- purification

struct Purification {
    bool success = false;
    MpvTensor tensor;      // physical index i * ancilla + a
    int ancilla = 0;
    int bond = 0;
    std::string method;    // "square" or "diagonal"
    double min_eigenvalue = 0;  // most negative local factor eigenvalue on failure
    std::string note;
};

namespace detail {

// Factor a PSD matrix as F F^dagger with F having rank-many columns.
inline std::optional<Mat> psd_factor(const Mat& C, double* min_eig) {
    auto e = la::eigh(C);
    double top = std::max(1e-300, e.values.cwiseAbs().maxCoeff());
    *min_eig = std::min(*min_eig, e.values.minCoeff());
    if (e.values.minCoeff() < -1e-9 * top) return std::nullopt;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = e.values.size() - 1; k >= 0; --k)
        if (e.values(k) > 1e-12 * top) keep.push_back(k);
    Mat F(C.rows(), Eigen::Index(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        F.col(Eigen::Index(k)) = e.vectors.col(keep[k]) * std::sqrt(e.values(keep[k]));
    // a diagonal C factors as its own square root
    if ((C - Mat(C.diagonal().asDiagonal())).norm() < 1e-14 * top) {
        std::vector<Eigen::Index> nz;
        for (Eigen::Index k = 0; k < C.rows(); ++k)
            if (C(k, k).real() > 1e-12 * top) nz.push_back(k);
        F = Mat::Zero(C.rows(), Eigen::Index(nz.size()));
        for (std::size_t k = 0; k < nz.size(); ++k) F(nz[k], Eigen::Index(k)) = std::sqrt(C(nz[k], nz[k]).real());
    }
    return F;
}

inline Mat dft(int n) {
    Mat F(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) F(j, k) = std::polar(1.0 / std::sqrt(double(n)), 2 * M_PI * j * k / n);
    return F;
}

} // namespace detail

inline Purification purify(const MpdoTensor& M) {
    M.check();
    const int d = M.d(), D = M.D();
    Purification p;
    p.min_eigenvalue = 0;
    const int D0 = int(std::lround(std::sqrt(double(D))));
    if (D0 * D0 == D) {
        // C[(i,a,b),(j,a',b')] = M^{ij}[(a,a'),(b,b')]
        const int n = d * D0 * D0;
        Mat C(n, n);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int a = 0; a < D0; ++a)
                    for (int b = 0; b < D0; ++b)
                        for (int a2 = 0; a2 < D0; ++a2)
                            for (int b2 = 0; b2 < D0; ++b2)
                                C((i * D0 + a) * D0 + b, (j * D0 + a2) * D0 + b2) = M.at(i, j)(a * D0 + a2, b * D0 + b2);
        if (la::herm_residual(C) < 1e-10 * std::max(1.0, C.norm())) {
            if (auto F = detail::psd_factor(C, &p.min_eigenvalue)) {
                const int r = int(F->cols());
                p.tensor = MpvTensor(d * r, D0);
                for (int i = 0; i < d; ++i)
                    for (int a = 0; a < r; ++a)
                        for (int x = 0; x < D0; ++x)
                            for (int y = 0; y < D0; ++y) p.tensor[i * r + a](x, y) = (*F)((i * D0 + x) * D0 + y, a);
                p.success = true;
                p.ancilla = r;
                p.bond = D0;
                p.method = "square";
                return p;
            }
        }
    }
    // Diagonal embedding: ancilla slots are disjoint per virtual pair (a, b).
    std::vector<Mat> gauges{Mat::Identity(D, D)};
    if (D > 1) gauges.push_back(detail::dft(D));
    for (const auto& G : gauges) {
        MpdoTensor Mg = M;
        Mat Gi = G.inverse();
        for (auto& m : Mg.M) m = G * m * Gi;
        std::vector<Mat> factors;
        bool ok = true;
        for (int a = 0; a < D && ok; ++a)
            for (int b = 0; b < D && ok; ++b) {
                Mat o = Mg.phys_op(a, b);
                if (la::herm_residual(o) > 1e-10 * std::max(1.0, o.norm())) {
                    ok = false;
                    break;
                }
                auto F = detail::psd_factor(o, &p.min_eigenvalue);
                if (!F) ok = false;
                else factors.push_back(*F);
            }
        if (!ok) continue;
        int r = 0;
        for (const auto& F : factors) r += int(F.cols());
        p.tensor = MpvTensor(d * r, D);
        int slot = 0;
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) {
                const Mat& F = factors[std::size_t(a * D + b)];
                for (Eigen::Index k = 0; k < F.cols(); ++k, ++slot)
                    for (int i = 0; i < d; ++i) p.tensor[i * r + slot](a, b) = F(i, k);
            }
        p.success = true;
        p.ancilla = r;
        p.bond = D;
        p.method = "diagonal";
        return p;
    }
    p.note = "no local factorization found; this does not rule out a purification";
    return p;
}

// Trace the ancilla out of the purified ring state.
inline Mat purification_state(const Purification& p, int d, int N) {
    Vec psi = mpv_dense(p.tensor, N).data;
    const long long dn = la::ipow(d, N), an = la::ipow(p.ancilla, N);
    // index (i1 a1)(i2 a2)... -> split system and ancilla
    Mat S = Mat::Zero(dn, an);
    for (long long idx = 0; idx < psi.size(); ++idx) {
        long long rem = idx, sys = 0, anc = 0, ms = 1, ma = 1;
        for (int n = 0; n < N; ++n) {
            long long pair = rem % (d * p.ancilla);
            rem /= (d * p.ancilla);
            sys += (pair / p.ancilla) * ms;
            anc += (pair % p.ancilla) * ma;
            ms *= d;
            ma *= p.ancilla;
        }
        S(sys, anc) = psi(idx);
    }
    return S * S.adjoint();
}

struct PrfpReport {
    bool prfp = false;
    bool zcl = false;
    bool agree = false;
    std::string warning;
    Purification purification;
};

inline PrfpReport is_prfp(const MpdoTensor& M) {
    PrfpReport r;
    r.purification = purify(M);
    if (!r.purification.success)
        throw PreconditionError("is_prfp: purification failed (min local eigenvalue " + std::to_string(r.purification.min_eigenvalue) + ")");
    r.prfp = is_rfp_pure(r.purification.tensor).rfp;
    r.zcl = is_zcl_mixed(M).zcl;
    r.agree = r.prfp == r.zcl;
    if (!r.agree) r.warning = "purification verdict and traced-transfer ZCL disagree";
    return r;
}

// --------------------------------------------------- mutual information

struct MutualInfoProfile {
    int N = 0;
    std::vector<double> S;  // S_1..S_N
    std::vector<double> I;  // I_1..I_{N/2}
    double bound = 0;       // 4 log2 D
    bool sal = false;
};

inline MutualInfoProfile mutual_info_profile(const MpdoTensor& M0, int N, double tol = 1e-9) {
    M0.check();
    if (N < 2) throw PreconditionError("mutual_info_profile: need N >= 2");
    MpdoTensor M = compress_physical(M0);
    detail::check_cap(2 * N, M.d(), config().mixed_cap_bits, "mutual_info_profile");
    MutualInfoProfile p;
    p.N = N;
    p.bound = 4 * std::log2(double(M0.D()));
    Mat rhoN = mpdo_dense(M, N).data;
    cd tr = rhoN.trace();
    double nrm = rhoN.norm();
    if (std::abs(tr) < 1e-14 * std::max(1.0, nrm)) throw NumericalError("mutual_info_profile: state has zero trace");
    auto full = la::eigh(rhoN / tr);
    if (full.values.minCoeff() < -1e-9 * std::max(1.0, full.values.maxCoeff()) || la::herm_residual(rhoN) > 1e-9 * std::max(1.0, nrm))
        throw PreconditionError("mutual_info_profile: non-PSD state");
    for (int L = 1; L < N; ++L) p.S.push_back(la::von_neumann_bits(mpdo_marginal(M, N, L) / tr));
    p.S.push_back(la::entropy_bits(full.values));
    for (int L = 1; L <= N / 2; ++L)
        p.I.push_back(p.S[std::size_t(L - 1)] + p.S[std::size_t(N - L - 1)] - p.S[std::size_t(N - 1)]);
    p.sal = true;
    for (std::size_t L = 1; L < p.I.size(); ++L)
        if (std::abs(p.I[L] - p.I[0]) > tol) p.sal = false;
    return p;
}

// --------------------------------------------------------- simplicity

struct SimplicityReport {
    bool simple = true;
    std::vector<int> nilpotent;  // BNT indices with nilpotent physical trace
    std::vector<Mat> traced;     // B_k
};

inline SimplicityReport is_simple(const MpdoTensor& M) {
    M.check();
    auto cf = canonical_form(M.mpv_view());
    const int d = int(std::lround(std::sqrt(double(cf.d))));
    SimplicityReport r;
    for (std::size_t k = 0; k < cf.bnt.size(); ++k) {
        auto Mk = MpdoTensor::from_mpv_view(cf.bnt[k], d);
        Mat B = physical_trace(Mk);
        double scale = 0;
        for (const auto& m : Mk.M) scale = std::max(scale, m.norm());
        Mat P = Mat::Identity(B.rows(), B.cols());
        for (Eigen::Index q = 0; q < B.rows(); ++q) P = P * B;
        r.traced.push_back(B);
        if (P.norm() <= 1e-10 * std::pow(std::max(scale, 1e-300), double(B.rows()))) {
            r.simple = false;
            r.nilpotent.push_back(int(k));
        }
    }
    return r;
}

// ------------------------------------------------------ GSNNCH extraction

namespace detail {

struct AlgebraSplit {
    Mat U;                   // unitary on the support, columns ordered (k, i, s)
    std::vector<int> n, m;   // per label: algebra factor, multiplicity
};

inline std::vector<Mat> star_algebra(std::vector<Mat> gens, int dim) {
    std::vector<Mat> g2 = gens;
    for (const auto& g : gens) g2.push_back(g.adjoint());
    g2.push_back(Mat::Identity(dim, dim));
    return generated_algebra(g2, dim);
}

inline Mat polar_unitary(const Mat& W) {
    Eigen::JacobiSVD<Mat> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

// Decompose a *-algebra (given by a basis) as (+)_k M(n_k) (x) 1_{m_k}.
inline AlgebraSplit split_algebra(const std::vector<Mat>& alg, int dim, std::mt19937_64& rng) {
    // center: z = sum c_j B_j with [z, B_i] = 0
    const Eigen::Index nb = Eigen::Index(alg.size());
    Mat sys(nb * dim * dim, nb);
    for (Eigen::Index j = 0; j < nb; ++j) {
        Vec col(nb * dim * dim);
        for (Eigen::Index i = 0; i < nb; ++i) {
            Mat c = alg[std::size_t(j)] * alg[std::size_t(i)] - alg[std::size_t(i)] * alg[std::size_t(j)];
            col.segment(i * dim * dim, dim * dim) = la::vec(c);
        }
        sys.col(j) = col;
    }
    Mat cz = la::null_space(sys, 1e-9);
    std::normal_distribution<double> g(0, 1);
    Mat z = Mat::Zero(dim, dim);
    for (Eigen::Index q = 0; q < cz.cols(); ++q) {
        Mat e = Mat::Zero(dim, dim);
        for (Eigen::Index j = 0; j < nb; ++j) e += cz(j, q) * alg[std::size_t(j)];
        z += g(rng) * la::hermitize(e);
    }
    auto clusters = [](const RVec& v, double tol) {
        std::vector<std::vector<Eigen::Index>> out;
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            if (!out.empty() && std::abs(v(k) - v(out.back().back())) < tol) out.back().push_back(k);
            else out.push_back({k});
        }
        return out;
    };
    auto ez = la::eigh(z);
    double zs = std::max(1.0, ez.values.cwiseAbs().maxCoeff());
    AlgebraSplit out;
    out.U = Mat::Zero(dim, dim);
    Eigen::Index col = 0;
    for (const auto& cl : clusters(ez.values, 1e-7 * zs)) {
        Mat Qk(dim, Eigen::Index(cl.size()));
        for (std::size_t q = 0; q < cl.size(); ++q) Qk.col(Eigen::Index(q)) = ez.vectors.col(cl[q]);
        // random Hermitian element inside the block
        Mat h = Mat::Zero(Qk.cols(), Qk.cols());
        for (const auto& B : alg) h += g(rng) * la::hermitize(Qk.adjoint() * B * Qk);
        auto eh = la::eigh(h);
        double hs = std::max(1.0, eh.values.cwiseAbs().maxCoeff());
        auto cls = clusters(eh.values, 1e-7 * hs);
        const int nk = int(cls.size()), mk = int(cls[0].size());
        for (const auto& c : cls)
            if (int(c.size()) != mk) throw NumericalError("site algebra decomposition failed: unequal multiplicities");
        std::vector<Mat> P;
        for (const auto& c : cls) {
            Mat p(Qk.cols(), mk);
            for (int q = 0; q < mk; ++q) p.col(q) = eh.vectors.col(c[std::size_t(q)]);
            P.push_back(p);
        }
        std::vector<Mat> frames{P[0]};
        for (int j = 1; j < nk; ++j) {
            Mat best;
            double bn = 0;
            for (const auto& B : alg) {
                Mat W = P[std::size_t(j)].adjoint() * (Qk.adjoint() * B * Qk) * P[0];
                if (W.norm() > bn) {
                    bn = W.norm();
                    best = W;
                }
            }
            if (bn < 1e-9) throw NumericalError("site algebra decomposition failed: disconnected block");
            frames.push_back(P[std::size_t(j)] * polar_unitary(best));
        }
        for (int i = 0; i < nk; ++i)
            for (int s = 0; s < mk; ++s) out.U.col(col++) = Qk * frames[std::size_t(i)].col(s);
        out.n.push_back(nk);
        out.m.push_back(mk);
    }
    if ((out.U.adjoint() * out.U - Mat::Identity(dim, dim)).norm() > 1e-8)
        throw NumericalError("site algebra decomposition failed: frame not unitary");
    return out;
}

// Matrix of a two-site operator placed on sites (j, j+1 mod N).
inline Mat embed_pair(const Mat& G, int j, int N, int d) {
    const long long dn = la::ipow(d, N);
    Mat out = Mat::Zero(dn, dn);
    const int s1 = j, s2 = (j + 1) % N;
    auto digit_stride = [&](int s) { return la::ipow(d, N - 1 - s); };
    const long long st1 = digit_stride(s1), st2 = digit_stride(s2);
    for (long long r = 0; r < dn; ++r) {
        const long long a1 = (r / st1) % d, a2 = (r / st2) % d;
        const long long base = r - a1 * st1 - a2 * st2;
        for (int b1 = 0; b1 < d; ++b1)
            for (int b2 = 0; b2 < d; ++b2) {
                cd v = G(a1 * d + a2, b1 * d + b2);
                if (v != 0.0) out(r, base + b1 * st1 + b2 * st2) = v;
            }
    }
    return out;
}

} // namespace detail

struct GsnnchOptions {
    int N_check = 6;
    bool require_sal = true;
    std::uint64_t seed = 7;
};

struct GsnnchStructure {
    bool applicable = false;
    std::string reason;        // when not applicable or failed
    bool success = false;      // sal && primitive && zcl_form
    bool sal = false;
    bool zcl_mixed = false;    // tensor-level traced-transfer test
    Mat U;                     // site isometry d x d_s, columns (k, i, s)
    std::vector<int> n, m;     // left / right subspin dims per label
    std::vector<std::vector<Mat>> eta;  // eta[k][h] on C^{m_k} (x) C^{n_h}, normalized by rho(T)
    std::vector<std::vector<Mat>> h;    // -log eta on its support
    RMat T;                    // tr eta, spectral radius one
    double scale = 1;          // spectral radius of the raw label transfer matrix
    bool primitive = false;
    bool rank_one = false;
    bool marginals_factorize = false;
    bool zcl_form = false;
    RVec a, b;                 // T = a b^T, b.a = 1
    Vec Phi, Psi;              // boundary functionals of the traced transfer map
    double commutator = 0;
    double reassembly_residual = 0;
    MpdoTensor tensor;         // canonical-form tensor divided by the scale
    int labels() const { return int(n.size()); }
};

namespace detail {

inline bool is_primitive(const RMat& T, double tol = 1e-12) {
    const Eigen::Index n = T.rows();
    if ((T.array() < -tol).any()) return false;
    RMat B = (T.array() > tol).cast<double>();
    RMat P = B;
    const long long bound = (n - 1) * (n - 1) + 1;
    for (long long k = 1; k <= bound; ++k) {
        if ((P.array() > 0).all()) return true;
        P = ((P * B).array() > 0).cast<double>();
    }
    return false;
}

} // namespace detail

inline GsnnchStructure extract_gsnnch(const MpdoTensor& K, const GsnnchOptions& opt = {}) {
    K.check();
    GsnnchStructure g;
    auto simple = is_simple(K);
    if (!simple.simple) {
        g.reason = "not simple";
        return g;
    }
    CanonicalDecomposition cf;
    MpdoTensor Kc = canonical_mpdo(K, &cf);
    if (cf.period != 1) {
        g.reason = "periodic tensor";
        return g;
    }
    g.sal = mutual_info_profile(K, opt.N_check).sal;
    g.zcl_mixed = is_zcl_mixed(K).zcl;
    if (opt.require_sal && !g.sal) {
        g.reason = "not SAL";
        return g;
    }
    g.applicable = true;
    const int d = K.d();
    std::mt19937_64 rng(opt.seed);

    // (1) three-site marginal and the middle-site algebra
    Mat s3 = mpdo_marginal(Kc, std::max(3, opt.N_check), 3);
    s3 = la::hermitize(s3 / s3.trace());
    Mat sAB = la::ptrace(s3, {d, d, d}, {0, 1});
    Mat sB = la::ptrace(sAB, {d, d}, {1});
    Mat V = la::orth(la::support_projector(sB, 1e-10), 1e-8);
    const int ds = int(V.cols());
    Mat sBi = (V.adjoint() * sB * V).inverse();
    std::vector<Mat> gens;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Mat O = Mat::Zero(d, d);
            O(i, j) = 1;
            Mat F = la::ptrace(la::kron(O, Mat::Identity(d, d)) * sAB, {d, d}, {1});
            gens.push_back(V.adjoint() * F * V * sBi);
        }
    auto alg = detail::star_algebra(gens, ds);
    auto split = detail::split_algebra(alg, ds, rng);
    g.U = V * split.U;
    g.n = split.n;
    g.m = split.m;
    const int L = g.labels();
    std::vector<int> off(std::size_t(L) + 1, 0);
    for (int k = 0; k < L; ++k) off[std::size_t(k) + 1] = off[std::size_t(k)] + g.n[std::size_t(k)] * g.m[std::size_t(k)];

    // (2) ring states of sizes 1, 2, 3 in structure coordinates
    std::vector<Mat> ring(4);
    for (int N = 1; N <= 3; ++N) {
        Mat W = g.U;
        for (int q = 1; q < N; ++q) W = la::kron(W, g.U);
        ring[std::size_t(N)] = W.adjoint() * mpdo_dense(Kc, N).data * W;
    }
    auto label_block = [&](const Mat& op, const std::vector<int>& ks) {
        const int N = int(ks.size());
        std::vector<long long> idx{0};
        for (int q = 0; q < N; ++q) {
            std::vector<long long> nxt;
            const int k = ks[std::size_t(q)];
            for (long long base : idx)
                for (int x = off[std::size_t(k)]; x < off[std::size_t(k) + 1]; ++x) nxt.push_back(base * ds + x);
            idx = std::move(nxt);
        }
        Mat B(Eigen::Index(idx.size()), Eigen::Index(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < idx.size(); ++c) B(Eigen::Index(r), Eigen::Index(c)) = op(idx[r], idx[c]);
        return B;
    };
    auto w = [&](const std::vector<int>& ks) { return label_block(ring[ks.size()], ks).trace().real(); };

    // (3) label transfer matrix up to diagonal similarity
    RMat T = RMat::Constant(L, L, std::nan(""));
    double wmax = 0;
    for (int k = 0; k < L; ++k)
        for (int h = 0; h < L; ++h) wmax = std::max(wmax, std::abs(w({k, h})));
    const double wtol = 1e-10 * std::max(1.0, wmax);
    for (int k = 0; k < L; ++k) T(k, k) = w({k});
    std::vector<char> seen(std::size_t(L), 0);
    seen[0] = 1;
    std::vector<int> queue{0};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        int k = queue[qi];
        for (int h = 0; h < L; ++h)
            if (!seen[std::size_t(h)] && w({k, h}) > wtol) {
                T(k, h) = T(h, k) = std::sqrt(w({k, h}));
                seen[std::size_t(h)] = 1;
                queue.push_back(h);
            }
    }
    if (int(queue.size()) != L) {
        g.reason = "label graph not connected through two-cycles";
        return g;
    }
    for (bool progress = true; progress;) {
        progress = false;
        for (int k = 0; k < L; ++k)
            for (int h = 0; h < L; ++h) {
                if (!std::isnan(T(k, h))) continue;
                if (std::abs(w({k, h})) <= wtol && !std::isnan(T(h, k)) && std::abs(T(h, k)) > 1e-8) {
                    T(k, h) = 0;
                    progress = true;
                    continue;
                }
                for (int p = 0; p < L; ++p) {
                    if (std::isnan(T(h, p)) || std::isnan(T(p, k)) || std::abs(T(h, p) * T(p, k)) < 1e-8) continue;
                    T(k, h) = w({k, h, p}) / (T(h, p) * T(p, k));
                    progress = true;
                    break;
                }
            }
    }
    if (T.array().isNaN().any()) {
        g.reason = "label transfer matrix not determined by rings of size <= 3";
        return g;
    }

    // (4) bond blocks
    g.eta.assign(std::size_t(L), std::vector<Mat>(std::size_t(L)));
    for (int k = 0; k < L; ++k)
        for (int h = 0; h < L; ++h) {
            const int nk = g.n[std::size_t(k)], mk = g.m[std::size_t(k)], nh = g.n[std::size_t(h)], mh = g.m[std::size_t(h)];
            if (std::abs(T(k, h)) < 1e-10 * std::max(1.0, T.cwiseAbs().maxCoeff())) {
                g.eta[std::size_t(k)][std::size_t(h)] = Mat::Zero(mk * nh, mk * nh);
                continue;
            }
            Mat eta;
            if (std::abs(T(h, k)) > 1e-8) {
                Mat B = label_block(ring[2], {k, h});
                eta = la::ptrace(B, {nk, mk, nh, mh}, {1, 2}) / T(h, k);
            } else {
                int best = -1;
                double bv = 0;
                for (int l = 0; l < L; ++l)
                    if (std::abs(T(h, l) * T(l, k)) > bv) {
                        bv = std::abs(T(h, l) * T(l, k));
                        best = l;
                    }
                if (best < 0 || bv < 1e-8) {
                    g.reason = "bond block not reachable from ring states";
                    return g;
                }
                const int nl = g.n[std::size_t(best)], ml = g.m[std::size_t(best)];
                Mat B = label_block(ring[3], {k, h, best});
                eta = la::ptrace(B, {nk, mk, nh, mh, nl, ml}, {1, 2}) / (T(h, best) * T(best, k));
            }
            g.eta[std::size_t(k)][std::size_t(h)] = la::hermitize(eta);
        }

    g.scale = la::spectral_radius(T.cast<cd>());
    if (g.scale <= 0) throw NumericalError("extract_gsnnch: label transfer matrix vanishes");
    T /= g.scale;
    for (auto& row : g.eta)
        for (auto& e : row) {
            e /= g.scale;
            double top = std::max(1e-300, e.norm());
            if (e.size() && la::min_eigenvalue(e) < -1e-8 * top)
                throw NumericalError("extract_gsnnch: bond block not positive semidefinite");
        }
    g.T = T;
    g.tensor = Kc.scaled(1.0 / g.scale);

    // (5) primitivity, rank one, marginals
    g.primitive = detail::is_primitive(T, 1e-10);
    Eigen::EigenSolver<RMat> es(T), esl(T.transpose());
    auto perron = [](const Eigen::EigenSolver<RMat>& s) {
        Eigen::Index k;
        s.eigenvalues().real().maxCoeff(&k);
        RVec v = s.eigenvectors().col(k).real();
        if (v.sum() < 0) v = -v;
        return v;
    };
    g.a = perron(es);
    g.b = perron(esl);
    g.b /= g.b.dot(g.a);
    g.rank_one = (T - g.a * g.b.transpose()).norm() < 1e-8 * std::max(1.0, T.norm());
    g.marginals_factorize = true;
    for (int k = 0; k < L && g.marginals_factorize; ++k)
        for (int h = 0; h < L; ++h) {
            const Mat& e = g.eta[std::size_t(k)][std::size_t(h)];
            const int mk = g.m[std::size_t(k)], nh = g.n[std::size_t(h)];
            // right marginal independent of h, left marginal independent of k (up to scalars)
            Mat r = la::ptrace(e, {mk, nh}, {0}), l = la::ptrace(e, {mk, nh}, {1});
            Mat r0 = la::ptrace(g.eta[std::size_t(k)][0], {mk, g.n[0]}, {0});
            Mat l0 = la::ptrace(g.eta[0][std::size_t(h)], {g.m[0], nh}, {1});
            auto prop = [](const Mat& x, const Mat& y) {
                double nx = x.norm(), ny = y.norm();
                if (nx < 1e-12 || ny < 1e-12) return true;
                return (x / nx - y / ny).norm() < 1e-7;
            };
            if (!prop(r, r0) || !prop(l, l0)) {
                g.marginals_factorize = false;
                break;
            }
        }
    // the T and S maps only use tr eta = T, so the marginal condition is reported but not required
    g.zcl_form = g.rank_one;
    {
        Mat E = physical_trace(g.tensor);
        Eigen::ComplexEigenSolver<Mat> ce(E), cl(E.adjoint());
        Eigen::Index k, kl;
        ce.eigenvalues().cwiseAbs().maxCoeff(&k);
        cl.eigenvalues().cwiseAbs().maxCoeff(&kl);
        g.Phi = ce.eigenvectors().col(k);
        g.Psi = cl.eigenvectors().col(kl);
        cd ov = g.Psi.dot(g.Phi);
        if (std::abs(ov) > 1e-12) g.Psi /= std::conj(ov);
    }

    // (6) local Hamiltonian and commutation on three sites (structure coordinates)
    g.h.assign(std::size_t(L), std::vector<Mat>(std::size_t(L)));
    for (int k = 0; k < L; ++k)
        for (int h = 0; h < L; ++h) {
            const Mat& e = g.eta[std::size_t(k)][std::size_t(h)];
            g.h[std::size_t(k)][std::size_t(h)] = la::herm_apply(e, [](double x) { return x > 1e-12 ? -std::log(x) : 0.0; });
        }
    // two-site operator (+)_{k,h} 1 (x) X_{kh} (x) 1 in structure coordinates
    auto pair_op = [&](const std::vector<std::vector<Mat>>& X) {
        Mat G = Mat::Zero(ds * ds, ds * ds);
        for (int k = 0; k < L; ++k)
            for (int h = 0; h < L; ++h) {
                const int nk = g.n[std::size_t(k)], mk = g.m[std::size_t(k)], nh = g.n[std::size_t(h)], mh = g.m[std::size_t(h)];
                Mat B = la::kron(la::kron(Mat::Identity(nk, nk), X[std::size_t(k)][std::size_t(h)]), Mat::Identity(mh, mh));
                // (i1, s1, i2, s2) ordering already matches (b1 (x) [b2 (x) b1'] (x) b2')
                for (int r = 0; r < B.rows(); ++r)
                    for (int c = 0; c < B.cols(); ++c) {
                        if (B(r, c) == 0.0) continue;
                        int x1 = r / (nh * mh), x2 = r % (nh * mh), y1 = c / (nh * mh), y2 = c % (nh * mh);
                        G((off[std::size_t(k)] + x1) * ds + off[std::size_t(h)] + x2,
                          (off[std::size_t(k)] + y1) * ds + off[std::size_t(h)] + y2) = B(r, c);
                    }
            }
        return G;
    };
    {
        Mat H = pair_op(g.h);
        Mat I = Mat::Identity(ds, ds);
        Mat h12 = la::kron(H, I), h23 = la::kron(I, H);
        g.commutator = (h12 * h23 - h23 * h12).norm();
    }

    // (7) reassembly against the dense ring states
    Mat G = pair_op(g.eta);
    Mat UU = la::kron(g.U, g.U);
    Mat Gp = UU * G * UU.adjoint();
    for (int N = 3; N <= opt.N_check; ++N) {
        if (2 * N * std::log2(double(d)) > config().mixed_cap_bits + 1e-9 || la::ipow(d, N) > 256) break;
        Mat P = Mat::Identity(la::ipow(d, N), la::ipow(d, N));
        for (int j = 0; j < N; ++j) P = P * detail::embed_pair(Gp, j, N, d);
        Mat ref = mpdo_dense(g.tensor, N).data;
        g.reassembly_residual = std::max(g.reassembly_residual, (P - ref).norm() / std::max(1.0, ref.norm()));
    }
    if (g.reassembly_residual > 1e-8) {
        g.reason = "reassembly residual " + std::to_string(g.reassembly_residual);
        return g;
    }
    g.success = g.sal && g.primitive && g.zcl_form;
    if (!g.success) g.reason = !g.primitive ? "label transfer not primitive" : (!g.zcl_form ? "no ZCL form" : "not SAL");
    return g;
}

// --------------------------------------------------------- T and S maps

struct Channel {
    int in_sites = 0, out_sites = 0, d = 0;
    std::function<Mat(const Mat&)> apply;
    Mat choi;                 // (in (x) out) ordering
    double tp_residual = 0;   // || tr_out choi - 1 ||
    double min_choi_eigenvalue = 0;
};

struct TsChannels {
    Channel T;  // two sites -> three sites
    Channel S;  // three sites -> two sites
    double worst_T = 0, worst_S = 0;      // identity residuals over all boundary matrix units
    double worst_T2 = -1, worst_S2 = -1;  // composed maps (blocked tensor), -1 when skipped
    bool verified = false;
};

namespace detail {

inline Channel finish_channel(std::function<Mat(const Mat&)> f, int in_sites, int out_sites, int d) {
    Channel c;
    c.in_sites = in_sites;
    c.out_sites = out_sites;
    c.d = d;
    c.apply = std::move(f);
    const long long di = la::ipow(d, in_sites), dout = la::ipow(d, out_sites);
    c.choi = Mat::Zero(di * dout, di * dout);
    Mat tr_out = Mat::Zero(di, di);
    for (long long a = 0; a < di; ++a)
        for (long long b = 0; b < di; ++b) {
            Mat E = Mat::Zero(di, di);
            E(a, b) = 1;
            Mat out = c.apply(E);
            c.choi.block(a * dout, b * dout, dout, dout) = out;
            tr_out(a, b) = out.trace();
        }
    c.tp_residual = (tr_out - Mat::Identity(di, di)).norm();
    c.min_choi_eigenvalue = la::min_eigenvalue(c.choi);
    return c;
}

// Apply a channel to sites [pre, pre + in) of an n-site operator.
inline Mat apply_at(const Channel& c, const Mat& X, int pre, int post) {
    const int d = c.d;
    const long long dp = la::ipow(d, pre), dq = la::ipow(d, post);
    const long long di = la::ipow(d, c.in_sites), dout = la::ipow(d, c.out_sites);
    Mat out = Mat::Zero(dp * dout * dq, dp * dout * dq);
    for (long long a = 0; a < dp; ++a)
        for (long long b = 0; b < dp; ++b)
            for (long long e = 0; e < dq; ++e)
                for (long long f = 0; f < dq; ++f) {
                    Mat sub(di, di);
                    for (long long r = 0; r < di; ++r)
                        for (long long s = 0; s < di; ++s) sub(r, s) = X((a * di + r) * dq + e, (b * di + s) * dq + f);
                    if (sub.isZero(0.0)) continue;
                    Mat y = c.apply(sub);
                    for (long long r = 0; r < dout; ++r)
                        for (long long s = 0; s < dout; ++s) out((a * dout + r) * dq + e, (b * dout + s) * dq + f) += y(r, s);
                }
    return out;
}

} // namespace detail

inline TsChannels build_ts_channels(const GsnnchStructure& g) {
    if (!g.applicable || !g.zcl_form || !g.primitive)
        throw PreconditionError("build_ts_channels: structure lacks the ZCL form (rank-one primitive label transfer)");
    const int L = g.labels();
    const int d = int(g.U.rows()), ds = int(g.U.cols());
    std::vector<int> off(std::size_t(L) + 1, 0);
    for (int k = 0; k < L; ++k) off[std::size_t(k) + 1] = off[std::size_t(k)] + g.n[std::size_t(k)] * g.m[std::size_t(k)];
    auto site_index = [off, g](int k, int i, int s) { return off[std::size_t(k)] + i * g.m[std::size_t(k)] + s; };

    // Structure-coordinate maps, captured by value since the channels outlive this call.
    // Row/column labels per site must agree (pinching).
    auto T_struct = [=](const Mat& Y) {
        Mat out = Mat::Zero(ds * ds * ds, ds * ds * ds);
        for (int k1 = 0; k1 < L; ++k1)
            for (int k2 = 0; k2 < L; ++k2) {
                const int n1 = g.n[std::size_t(k1)], m1 = g.m[std::size_t(k1)], n2 = g.n[std::size_t(k2)], m2 = g.m[std::size_t(k2)];
                // R on (i1, s2): trace s1 and i2
                Mat R = Mat::Zero(n1 * m2, n1 * m2);
                for (int i1 = 0; i1 < n1; ++i1)
                    for (int j1 = 0; j1 < n1; ++j1)
                        for (int s2 = 0; s2 < m2; ++s2)
                            for (int t2 = 0; t2 < m2; ++t2) {
                                cd acc = 0;
                                for (int s1 = 0; s1 < m1; ++s1)
                                    for (int i2 = 0; i2 < n2; ++i2)
                                        acc += Y(site_index(k1, i1, s1) * ds + site_index(k2, i2, s2),
                                                 site_index(k1, j1, s1) * ds + site_index(k2, i2, t2));
                                R(i1 * m2 + s2, j1 * m2 + t2) = acc;
                            }
                if (R.isZero(0.0)) continue;
                const double norm = g.a(k1) * g.b(k2);
                for (int l = 0; l < L; ++l) {
                    const int nl = g.n[std::size_t(l)], ml = g.m[std::size_t(l)];
                    const Mat& e1 = g.eta[std::size_t(k1)][std::size_t(l)];  // (s1', i_l)
                    const Mat& e2 = g.eta[std::size_t(l)][std::size_t(k2)];  // (s_l, i3')
                    // out: site1 (k1, i1, s1'), site2 (l, il, sl), site3 (k2, i3', s2)
                    for (int i1 = 0; i1 < n1; ++i1)
                        for (int j1 = 0; j1 < n1; ++j1)
                            for (int s2 = 0; s2 < m2; ++s2)
                                for (int t2 = 0; t2 < m2; ++t2) {
                                    cd r = R(i1 * m2 + s2, j1 * m2 + t2);
                                    if (r == 0.0) continue;
                                    for (int x1 = 0; x1 < m1 * nl; ++x1)
                                        for (int y1 = 0; y1 < m1 * nl; ++y1) {
                                            cd v1 = e1(x1, y1);
                                            if (v1 == 0.0) continue;
                                            const int sp = x1 / nl, il = x1 % nl, tp = y1 / nl, jl = y1 % nl;
                                            for (int x2 = 0; x2 < ml * n2; ++x2)
                                                for (int y2 = 0; y2 < ml * n2; ++y2) {
                                                    cd v2 = e2(x2, y2);
                                                    if (v2 == 0.0) continue;
                                                    const int sl = x2 / n2, i3 = x2 % n2, tl = y2 / n2, j3 = y2 % n2;
                                                    const long long row = (long long)(site_index(k1, i1, sp) * ds + site_index(l, il, sl)) * ds + site_index(k2, i3, s2);
                                                    const long long col = (long long)(site_index(k1, j1, tp) * ds + site_index(l, jl, tl)) * ds + site_index(k2, j3, t2);
                                                    out(row, col) += r * v1 * v2 / norm;
                                                }
                                        }
                                }
                }
            }
        return out;
    };
    auto S_struct = [=](const Mat& Y) {
        Mat out = Mat::Zero(ds * ds, ds * ds);
        for (int k1 = 0; k1 < L; ++k1)
            for (int k3 = 0; k3 < L; ++k3) {
                const int n1 = g.n[std::size_t(k1)], m1 = g.m[std::size_t(k1)], n3 = g.n[std::size_t(k3)], m3 = g.m[std::size_t(k3)];
                // R on (i1, s3): trace s1, the whole middle site and i3
                Mat R = Mat::Zero(n1 * m3, n1 * m3);
                for (int i1 = 0; i1 < n1; ++i1)
                    for (int j1 = 0; j1 < n1; ++j1)
                        for (int s3 = 0; s3 < m3; ++s3)
                            for (int t3 = 0; t3 < m3; ++t3) {
                                cd acc = 0;
                                for (int s1 = 0; s1 < m1; ++s1)
                                    for (int x = 0; x < ds; ++x)
                                        for (int i3 = 0; i3 < n3; ++i3)
                                            acc += Y((long long)(site_index(k1, i1, s1) * ds + x) * ds + site_index(k3, i3, s3),
                                                     (long long)(site_index(k1, j1, s1) * ds + x) * ds + site_index(k3, i3, t3));
                                R(i1 * m3 + s3, j1 * m3 + t3) = acc;
                            }
                if (R.isZero(0.0)) continue;
                const Mat& e = g.eta[std::size_t(k1)][std::size_t(k3)];  // (s1', i3')
                const double norm = g.a(k1) * g.b(k3);
                for (int i1 = 0; i1 < n1; ++i1)
                    for (int j1 = 0; j1 < n1; ++j1)
                        for (int s3 = 0; s3 < m3; ++s3)
                            for (int t3 = 0; t3 < m3; ++t3) {
                                cd r = R(i1 * m3 + s3, j1 * m3 + t3);
                                if (r == 0.0) continue;
                                for (int x = 0; x < m1 * n3; ++x)
                                    for (int y = 0; y < m1 * n3; ++y) {
                                        cd v = e(x, y);
                                        if (v == 0.0) continue;
                                        const int sp = x / n3, ip = x % n3, tp = y / n3, jp = y % n3;
                                        out(site_index(k1, i1, sp) * ds + site_index(k3, ip, s3),
                                            site_index(k1, j1, tp) * ds + site_index(k3, jp, t3)) += r * v / norm;
                                    }
                            }
            }
        return out;
    };

    // Physical maps; weight outside the support goes to a fixed state.
    Mat W2 = la::kron(g.U, g.U), W3 = la::kron(W2, g.U);
    Mat P2 = W2 * W2.adjoint(), P3 = W3 * W3.adjoint();
    Mat omega3 = W3 * T_struct(Mat::Identity(ds * ds, ds * ds) / double(ds * ds)) * W3.adjoint();
    Mat omega2 = W2 * S_struct(Mat::Identity(ds * ds * ds, ds * ds * ds) / double(ds * ds * ds)) * W2.adjoint();
    const long long d2 = la::ipow(d, 2), d3 = la::ipow(d, 3);
    auto Tphys = [=](const Mat& X) -> Mat {
        cd leak = (Mat::Identity(d2, d2) - P2).cwiseProduct(X.transpose()).sum();
        return W3 * T_struct(W2.adjoint() * X * W2) * W3.adjoint() + leak * omega3;
    };
    auto Sphys = [=](const Mat& X) -> Mat {
        cd leak = (Mat::Identity(d3, d3) - P3).cwiseProduct(X.transpose()).sum();
        return W2 * S_struct(W3.adjoint() * X * W3) * W2.adjoint() + leak * omega2;
    };
    TsChannels ts;
    ts.T = detail::finish_channel(Tphys, 2, 3, d);
    ts.S = detail::finish_channel(Sphys, 3, 2, d);

    const MpdoTensor& K = g.tensor;
    const int D = K.D();
    const bool four = 8 * std::log2(double(d)) <= config().mixed_cap_bits + 1e-9;
    if (four) ts.worst_T2 = ts.worst_S2 = 0;
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) {
            Mat X = Mat::Zero(D, D);
            X(a, b) = 1;
            Mat M2 = boundary_map(K, 2, X), M3 = boundary_map(K, 3, X);
            double sc = std::max(1.0, M3.norm());
            ts.worst_T = std::max(ts.worst_T, (ts.T.apply(M2) - M3).norm() / sc);
            ts.worst_S = std::max(ts.worst_S, (ts.S.apply(M3) - M2).norm() / sc);
            if (four) {
                Mat M4 = boundary_map(K, 4, X);
                Mat t2 = detail::apply_at(ts.T, ts.T.apply(M2), 1, 0);
                Mat s2 = ts.S.apply(detail::apply_at(ts.S, M4, 0, 1));
                double s4 = std::max(1.0, M4.norm());
                ts.worst_T2 = std::max(ts.worst_T2, (t2 - M4).norm() / s4);
                ts.worst_S2 = std::max(ts.worst_S2, (s2 - M2).norm() / s4);
            }
        }
    const double tol = 1e-9;
    ts.verified = ts.worst_T < tol && ts.worst_S < tol && ts.T.tp_residual < 1e-9 && ts.S.tp_residual < 1e-9 &&
                  ts.T.min_choi_eigenvalue > -1e-9 && ts.S.min_choi_eigenvalue > -1e-9 &&
                  (!four || (ts.worst_T2 < tol && ts.worst_S2 < tol));
    if (ts.worst_T > tol || ts.worst_S > tol)
        throw NumericalError("build_ts_channels: identity residual T " + std::to_string(ts.worst_T) + ", S " + std::to_string(ts.worst_S));
    return ts;
}

} // namespace tnfp
