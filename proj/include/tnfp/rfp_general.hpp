#pragma once

#include "mpdo_analysis.hpp"

namespace tnfp {

// ------------------------------------------------------------ vertical CF

struct VerticalCF {
    int d = 0;
    std::vector<MpdoTensor> M;        // BNT elements, common scale of the input kept
    std::vector<std::vector<cd>> mu;  // block weights per label
    std::vector<double> m;            // m_alpha = sum of weights
    Mat U;                            // virtual basis that block-triangularizes the input
    std::vector<Mat> gauges;          // per block, in block order
    std::vector<int> block_label;
    bool positive = true;             // every weight real and > 0
    double reassembly_residual = 0;
    int labels() const { return int(M.size()); }
};

inline VerticalCF vertical_cf(const MpdoTensor& M0) {
    M0.check();
    auto cf = canonical_form(M0.mpv_view());
    if (cf.period != 1)
        throw PreconditionError("vertical_cf: periodic tensor; a blocking of " + std::to_string(cf.period) +
                                " sites is needed first");
    VerticalCF v;
    v.d = M0.d();
    v.U = cf.basis;
    for (const auto& A : cf.bnt) v.M.push_back(MpdoTensor::from_mpv_view(A.scaled(cf.scale), v.d));
    v.mu.assign(v.M.size(), {});
    v.m.assign(v.M.size(), 0.0);
    for (const auto& b : cf.blocks) {
        v.mu[std::size_t(b.bnt)].push_back(b.mu);
        v.gauges.push_back(b.X);
        v.block_label.push_back(b.bnt);
        v.m[std::size_t(b.bnt)] += b.mu.real();
        if (std::abs(b.mu.imag()) > 1e-9 || b.mu.real() <= 1e-12) v.positive = false;
    }
    for (int N = 1; N <= 4; ++N) {
        if (2 * N * std::log2(double(v.d)) > config().mixed_cap_bits + 1e-9) break;
        Mat ref = mpdo_dense(M0, N).data;
        Mat acc = Mat::Zero(ref.rows(), ref.cols());
        for (int a = 0; a < v.labels(); ++a) {
            cd w = 0;
            for (cd x : v.mu[std::size_t(a)]) w += std::pow(x, N);
            acc += w * mpdo_dense(v.M[std::size_t(a)], N).data;
        }
        v.reassembly_residual = std::max(v.reassembly_residual, (acc - ref).norm() / std::max(1.0, ref.norm()));
    }
    if (v.reassembly_residual > 1e-8) throw NumericalError("vertical_cf: reassembly residual " + std::to_string(v.reassembly_residual));
    return v;
}

// Ring-traced L-site operator tr(M ... M).
inline DenseOperator boundary_operator(const MpdoTensor& M, int L) { return mpdo_dense(M, L); }

// ------------------------------------------------------------ Prony

struct PowerSumFit {
    bool ok = false;
    std::vector<cd> roots;
    std::vector<double> multiplicity;  // as fitted, before rounding
    std::vector<int> mult;             // rounded
    double residual = 0;               // worst misfit over the input samples
};

// s_j = sum_k mult_k x_k^{L0 + j}; fit the fewest distinct x_k.
inline PowerSumFit fit_power_sums(const std::vector<cd>& s, int L0, double tol = 1e-9) {
    PowerSumFit f;
    const int K = int(s.size());
    double scale = 0;
    for (cd x : s) scale = std::max(scale, std::abs(x));
    if (scale < tol) {
        f.ok = true;
        return f;
    }
    for (int n = 1; 2 * n <= K; ++n) {
        // recurrence s_{j+n} = sum_q a_q s_{j+q}
        const int rows = K - n;
        Mat H(rows, n);
        Vec rhs(rows);
        for (int j = 0; j < rows; ++j) {
            for (int q = 0; q < n; ++q) H(j, q) = s[std::size_t(j + q)];
            rhs(j) = s[std::size_t(j + n)];
        }
        Vec a = H.completeOrthogonalDecomposition().solve(rhs);
        if ((H * a - rhs).norm() > tol * scale * std::sqrt(double(rows))) continue;
        Mat C = Mat::Zero(n, n);
        for (int q = 0; q < n; ++q) C(n - 1, q) = a(q);
        for (int q = 0; q + 1 < n; ++q) C(q, q + 1) = 1;
        Vec x = la::eigenvalues(C);
        Mat V(K, n);
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < n; ++k) V(j, k) = std::pow(x(k), L0 + j);
        Vec sv(K);
        for (int j = 0; j < K; ++j) sv(j) = s[std::size_t(j)];
        Vec w = V.completeOrthogonalDecomposition().solve(sv);
        f.residual = (V * w - sv).norm() / scale;
        f.roots.clear();
        f.multiplicity.clear();
        f.mult.clear();
        for (int k = 0; k < n; ++k) {
            if (std::abs(x(k)) < tol || std::abs(w(k)) < tol) continue;
            f.roots.push_back(x(k));
            f.multiplicity.push_back(w(k).real());
            f.mult.push_back(int(std::lround(w(k).real())));
        }
        f.ok = f.residual < 1e-7;
        return f;
    }
    return f;
}

// ------------------------------------------------------------ algebra

struct FusionBlock {
    int gamma = -1;
    cd weight;          // chi entry for this copy
    Mat X;              // gauge onto M_gamma
};

struct FusionResult {
    int alpha = 0, beta = 0;
    Mat U;                           // virtual basis of the stacked product
    std::vector<FusionBlock> blocks;
    std::vector<std::vector<cd>> chi; // per gamma
    double residual = 0;
};

// Stack M_alpha over M_beta through the shared physical leg and split into BNT copies.
inline MpdoTensor stack(const MpdoTensor& A, const MpdoTensor& B) {
    const int d = A.d();
    MpdoTensor P(d, A.D() * B.D());
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Mat acc = Mat::Zero(P.D(), P.D());
            for (int k = 0; k < d; ++k) acc += la::kron(A.at(i, k), B.at(k, j));
            P.at(i, j) = acc;
        }
    return P;
}

inline FusionResult fusion_isometry(const VerticalCF& V, int alpha, int beta) {
    const MpdoTensor& A = V.M[std::size_t(alpha)];
    const MpdoTensor& B = V.M[std::size_t(beta)];
    FusionResult r;
    r.alpha = alpha;
    r.beta = beta;
    r.chi.assign(std::size_t(V.labels()), {});
    MpdoTensor P = stack(A, B);
    bool zero = true;
    for (const auto& m : P.M) zero = zero && m.norm() < 1e-12;
    if (zero) return r;
    auto cf = canonical_form(P.mpv_view());
    if (cf.period != 1) throw NumericalError("fusion_isometry: periodic product block");
    r.U = cf.basis;
    std::vector<double> ref_scale;
    for (const auto& M : V.M) ref_scale.push_back(std::sqrt(transfer_radius(M.mpv_view())));
    for (const auto& b : cf.blocks) {
        const MpvTensor& Aj = cf.bnt[std::size_t(b.bnt)];
        bool found = false;
        for (int g = 0; g < V.labels() && !found; ++g) {
            MpvTensor Mg = V.M[std::size_t(g)].mpv_view();
            if (Mg.D() != Aj.D()) continue;
            auto w = find_gauge(Mg, Aj);
            if (!w.equivalent) continue;
            cd chi = cf.scale * b.mu * std::polar(1.0, w.phi) / ref_scale[std::size_t(g)];
            r.blocks.push_back({g, chi, b.X * w.X});
            r.chi[std::size_t(g)].push_back(chi);
            found = true;
        }
        if (!found)
            throw NumericalError("fusion_isometry: product block of bond dimension " + std::to_string(Aj.D()) +
                                 " matches no BNT element");
    }
    for (int L = 1; L <= 3; ++L) {
        if (2 * L * std::log2(double(V.d)) > config().mixed_cap_bits + 1e-9) break;
        Mat ref = mpdo_dense(P, L).data;
        Mat acc = Mat::Zero(ref.rows(), ref.cols());
        for (const auto& fb : r.blocks) acc += std::pow(fb.weight, L) * mpdo_dense(V.M[std::size_t(fb.gamma)], L).data;
        r.residual = std::max(r.residual, (acc - ref).norm() / std::max(1.0, ref.norm()));
    }
    return r;
}

struct AlgebraStructure {
    int labels = 0;
    int L0 = 0;
    std::vector<int> L;                                  // fitted lengths
    std::vector<std::vector<cd>> c;                      // c[L index][(a*G + b)*G + g]
    std::vector<PowerSumFit> chi;                        // per triple
    std::vector<FusionResult> fusion;                    // per (a, b)
    double closure_residual = 0;
    double associativity_residual = 0;
    double prediction_residual = 0;                      // c at L0 + K from chi vs solved
    double fusion_chi_residual = 0;                      // fusion weights vs power-sum chi
    double idempotent_factor = 0;                        // kappa with m = kappa sum c m m
    double idempotent_residual = 0;
    bool closed = false, chi_positive = false;
    bool L_independent = false, integer_coefficients = false, idempotent_ok = false;
    std::string failure;

    cd coef(int li, int a, int b, int g) const { return c[std::size_t(li)][std::size_t((a * labels + b) * labels + g)]; }
};

namespace detail {

// Coefficients expressing O_a O_b in span{O_g} at length L, plus the relative residual.
inline std::pair<std::vector<cd>, double> solve_structure(const std::vector<Mat>& O) {
    const int G = int(O.size());
    Mat B(O[0].size(), G);
    for (int g = 0; g < G; ++g) B.col(g) = la::vec(O[std::size_t(g)]);
    auto qr = B.colPivHouseholderQr();
    std::vector<cd> c(std::size_t(G * G * G));
    double worst = 0;
    for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b) {
            Vec p = la::vec(O[std::size_t(a)] * O[std::size_t(b)]);
            Vec x = qr.solve(p);
            double scale = std::max(1.0, O[std::size_t(a)].norm() * O[std::size_t(b)].norm());
            worst = std::max(worst, (B * x - p).norm() / scale);
            for (int g = 0; g < G; ++g) c[std::size_t((a * G + b) * G + g)] = x(g);
        }
    return {c, worst};
}

inline std::vector<Mat> boundary_set(const VerticalCF& V, int L) {
    std::vector<Mat> O;
    for (const auto& M : V.M) O.push_back(mpdo_dense(M, L).data);
    return O;
}

} // namespace detail

// K lengths feed the fit; length L0 + K is held out as a prediction check.
inline AlgebraStructure fit_algebra(const VerticalCF& V, int K = 5) {
    AlgebraStructure s;
    const int G = V.labels();
    s.labels = G;
    if (G == 0) {
        s.failure = "empty tensor";
        return s;
    }
    auto fits = [&](int L) { return 2 * L * std::log2(double(V.d)) <= config().mixed_cap_bits + 1e-9; };
    // first length where the O_L are independent
    for (int L = 1; fits(L); ++L) {
        auto O = detail::boundary_set(V, L);
        Mat B(O[0].size(), G);
        for (int g = 0; g < G; ++g) B.col(g) = la::vec(O[std::size_t(g)]);
        if (la::rank(B, 1e-9) == G) {
            s.L0 = L;
            break;
        }
    }
    if (s.L0 == 0 || !fits(s.L0 + K)) {
        s.failure = "dense cap too small for the fit window";
        throw PreconditionError("fit_algebra: " + s.failure);
    }
    for (int L = s.L0; L <= s.L0 + K; ++L) {
        auto [c, res] = detail::solve_structure(detail::boundary_set(V, L));
        s.L.push_back(L);
        s.c.push_back(std::move(c));
        if (L < s.L0 + K) s.closure_residual = std::max(s.closure_residual, res);
    }
    s.closed = s.closure_residual < 1e-8;
    if (!s.closed) {
        s.failure = "not closed";
        return s;
    }
    // associativity at each fitted length
    for (std::size_t li = 0; li < s.L.size(); ++li)
        for (int a = 0; a < G; ++a)
            for (int b = 0; b < G; ++b)
                for (int g = 0; g < G; ++g)
                    for (int e = 0; e < G; ++e) {
                        cd lhs = 0, rhs = 0;
                        for (int q = 0; q < G; ++q) {
                            lhs += s.coef(int(li), a, b, q) * s.coef(int(li), q, g, e);
                            rhs += s.coef(int(li), b, g, q) * s.coef(int(li), a, q, e);
                        }
                        s.associativity_residual = std::max(s.associativity_residual, std::abs(lhs - rhs));
                    }
    // chi per triple from the first K lengths, then predict the last
    s.chi_positive = true;
    for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b)
            for (int g = 0; g < G; ++g) {
                std::vector<cd> seq;
                for (int li = 0; li < K; ++li) seq.push_back(s.coef(li, a, b, g));
                auto f = fit_power_sums(seq, s.L0);
                if (!f.ok) {
                    s.chi_positive = false;
                    if (s.failure.empty()) s.failure = "chi fit failed";
                }
                cd pred = 0;
                for (std::size_t k = 0; k < f.roots.size(); ++k) {
                    pred += f.multiplicity[k] * std::pow(f.roots[k], s.L0 + K);
                    if (std::abs(f.roots[k].imag()) > 1e-7 || f.roots[k].real() <= 0 ||
                        std::abs(f.multiplicity[k] - f.mult[k]) > 1e-6 || f.mult[k] < 1)
                        s.chi_positive = false;
                }
                s.prediction_residual = std::max(s.prediction_residual, std::abs(pred - s.coef(K, a, b, g)));
                s.chi.push_back(std::move(f));
            }
    if (s.prediction_residual > 1e-7) {
        s.chi_positive = false;
        if (s.failure.empty()) s.failure = "chi prediction fails";
    }
    if (!s.chi_positive && s.failure.empty()) s.failure = "chi not positive";

    s.L_independent = true;
    s.integer_coefficients = true;
    for (std::size_t li = 0; li < s.c.size(); ++li)
        for (std::size_t q = 0; q < s.c[li].size(); ++q) {
            cd x = s.c[li][q];
            if (std::abs(x - s.c[0][q]) > 1e-9) s.L_independent = false;
            if (std::abs(x.imag()) > 1e-9 || std::abs(x.real() - std::round(x.real())) > 1e-9) s.integer_coefficients = false;
        }

    // m_g = kappa sum_{ab} c1_{abg} m_a m_b with c1 = sum chi
    {
        std::vector<double> rhs(std::size_t(G), 0.0);
        for (int a = 0; a < G; ++a)
            for (int b = 0; b < G; ++b)
                for (int g = 0; g < G; ++g) {
                    const auto& f = s.chi[std::size_t((a * G + b) * G + g)];
                    double c1 = 0;
                    for (std::size_t k = 0; k < f.roots.size(); ++k) c1 += f.multiplicity[k] * f.roots[k].real();
                    rhs[std::size_t(g)] += c1 * V.m[std::size_t(a)] * V.m[std::size_t(b)];
                }
        double num = 0, den = 0;
        for (int g = 0; g < G; ++g) {
            num += V.m[std::size_t(g)] * rhs[std::size_t(g)];
            den += rhs[std::size_t(g)] * rhs[std::size_t(g)];
        }
        s.idempotent_factor = den > 0 ? num / den : 0;
        for (int g = 0; g < G; ++g)
            s.idempotent_residual = std::max(s.idempotent_residual, std::abs(V.m[std::size_t(g)] - s.idempotent_factor * rhs[std::size_t(g)]));
        s.idempotent_ok = s.idempotent_factor > 0 && s.idempotent_residual < 1e-8;
    }

    // fusion weights against the power-sum chi
    for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b) {
            auto fr = fusion_isometry(V, a, b);
            for (int g = 0; g < G; ++g) {
                const auto& f = s.chi[std::size_t((a * G + b) * G + g)];
                for (int L = s.L0; L < s.L0 + K; ++L) {
                    cd x = 0, y = 0;
                    for (cd w : fr.chi[std::size_t(g)]) x += std::pow(w, L);
                    for (std::size_t k = 0; k < f.roots.size(); ++k) y += f.multiplicity[k] * std::pow(f.roots[k], L);
                    s.fusion_chi_residual = std::max(s.fusion_chi_residual, std::abs(x - y));
                }
            }
            s.fusion.push_back(std::move(fr));
        }
    return s;
}

inline bool algebra_window_fits(const VerticalCF& V, int K) {
    if (V.labels() == 0) return false;
    int L0 = 0;
    for (int L = 1; 2 * L * std::log2(double(V.d)) <= config().mixed_cap_bits + 1e-9; ++L) {
        auto O = detail::boundary_set(V, L);
        Mat B(O[0].size(), V.labels());
        for (int g = 0; g < V.labels(); ++g) B.col(g) = la::vec(O[std::size_t(g)]);
        if (la::rank(B, 1e-9) == V.labels()) {
            L0 = L;
            break;
        }
    }
    return L0 > 0 && 2 * (L0 + K) * std::log2(double(V.d)) <= config().mixed_cap_bits + 1e-9;
}

struct RfpMpdoVerdict {
    bool rfp = false;
    std::string reason;
    VerticalCF vcf;
    AlgebraStructure algebra;
    bool zcl = false;  // reported alongside, not part of the verdict
};

inline RfpMpdoVerdict is_rfp_mpdo(const MpdoTensor& M) {
    RfpMpdoVerdict v;
    try {
        v.vcf = vertical_cf(M);
    } catch (const PreconditionError& e) {
        v.reason = e.what();
        return v;
    }
    v.zcl = is_zcl_mixed(M).zcl;
    if (!v.vcf.positive) {
        v.reason = "block weights not positive";
        return v;
    }
    // widest window the dense cap allows; four lengths still pin two roots
    int K = 5;
    while (K > 4 && !algebra_window_fits(v.vcf, K)) --K;
    try {
        v.algebra = fit_algebra(v.vcf, K);
    } catch (const std::runtime_error& e) {
        v.reason = e.what();
        return v;
    }
    const auto& a = v.algebra;
    if (!a.closed) v.reason = "not closed";
    else if (!a.chi_positive) v.reason = a.failure;
    else if (!a.idempotent_ok) v.reason = "idempotent condition fails";
    else if (a.fusion_chi_residual > 1e-7) v.reason = "fusion weights disagree with chi";
    else v.rfp = true;
    return v;
}

// ------------------------------------------------- projector decomposition

struct ProjectorGibbs {
    int N = 0;
    std::vector<Mat> P;
    std::vector<double> lambda;
    Mat H;                      // commuting Gibbs part (zero when every weight is one)
    double idempotent_residual = 0;
    double commutator = 0;
    double residual = 0;        // || sum lambda_i P_i e^{-H} - rho ||
    bool verified = false;
};

inline ProjectorGibbs projector_gibbs_decomposition(const MpdoTensor& M, int N, std::uint64_t seed = 3) {
    auto v = is_rfp_mpdo(M);
    if (!v.rfp) throw PreconditionError("projector_gibbs_decomposition: not an RFP (" + v.reason + ")");
    if (!v.algebra.L_independent || !v.algebra.integer_coefficients)
        throw PreconditionError("projector_gibbs_decomposition: needs L-independent integer coefficients");
    ProjectorGibbs pg;
    pg.N = N;
    Mat rho = mpdo_dense(M, N).data;
    const Eigen::Index dim = rho.rows();
    // on-site weights; a common weight w contributes w^N on every block
    std::vector<Mat> O = detail::boundary_set(v.vcf, N);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    Mat Z = Mat::Zero(dim, dim);
    for (const auto& o : O) {
        Mat h = la::hermitize(o);
        Mat k = la::hermitize(cd(0, -1) * (o - o.adjoint()) / 2.0);
        Z += g(rng) * h + g(rng) * k;
    }
    auto ez = la::eigh(Z);
    double zs = std::max(1.0, ez.values.cwiseAbs().maxCoeff());
    std::vector<std::vector<Eigen::Index>> cls;
    for (Eigen::Index k = 0; k < ez.values.size(); ++k) {
        if (!cls.empty() && std::abs(ez.values(k) - ez.values(cls.back().back())) < 1e-8 * zs) cls.back().push_back(k);
        else cls.push_back({k});
    }
    Mat acc = Mat::Zero(dim, dim);
    for (const auto& c : cls) {
        Mat Q(dim, Eigen::Index(c.size()));
        for (std::size_t q = 0; q < c.size(); ++q) Q.col(Eigen::Index(q)) = ez.vectors.col(c[q]);
        Mat P = Q * Q.adjoint();
        double lam = (P * rho).trace().real() / double(c.size());
        if (std::abs(lam) < 1e-12 * std::max(1.0, rho.norm())) continue;
        pg.P.push_back(P);
        pg.lambda.push_back(lam);
        acc += lam * P;
        pg.idempotent_residual = std::max(pg.idempotent_residual, (P * P - P).norm());
    }
    pg.H = Mat::Zero(dim, dim);
    for (const auto& P : pg.P) pg.commutator = std::max(pg.commutator, (P * rho - rho * P).norm());
    pg.residual = (acc - rho).norm() / std::max(1.0, rho.norm());
    pg.verified = pg.residual < 1e-9 && pg.idempotent_residual < 1e-9 && pg.commutator < 1e-9 * std::max(1.0, rho.norm());
    if (!pg.verified)
        throw NumericalError("projector_gibbs_decomposition: undetermined decomposition, residual " + std::to_string(pg.residual));
    return pg;
}

// ------------------------------------------------------- rank and spectral checks

struct GaugeRfpCheck {
    bool rfp = false;
    bool spectrum_01 = false;
    bool diagonalizable = false;
    bool agrees_with_pure = false;
};

inline GaugeRfpCheck gauge_rfp_spectral_check(const MpvTensor& A) {
    Mat E = cfii_transfer(A).matrix;
    GaugeRfpCheck g;
    Vec ev = la::eigenvalues(E);
    g.spectrum_01 = true;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (std::abs(ev(k)) > 1e-6 && std::abs(ev(k) - 1.0) > 1e-6) g.spectrum_01 = false;
    // Jordan blocks at 0 or 1 would break these rank equalities
    Mat I = Mat::Identity(E.rows(), E.cols());
    g.diagonalizable = la::rank(E, 1e-8) == la::rank(E * E, 1e-8) &&
                       la::rank(E - I, 1e-8) == la::rank((E - I) * (E - I), 1e-8);
    g.rfp = g.spectrum_01 && g.diagonalizable;
    g.agrees_with_pure = g.rfp == is_rfp_pure(A).rfp;
    return g;
}

// A^{ijk}_{ab} = delta_{ia} delta_{kb} N_{ijk}; N_{ijk} = 0 iff exactly two of i, j, k are 0.
inline MpvTensor fibonacci_tensor() {
    MpvTensor A(8, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                const int zeros = (i == 0) + (j == 0) + (k == 0);
                if (zeros != 2) A[(i * 2 + j) * 2 + k](i, k) = 1;
            }
    return A;
}

// Diagonal MPDO with the Fibonacci weights on the diagonal.
inline MpdoTensor fibonacci_mpdo() {
    MpvTensor A = fibonacci_tensor();
    MpdoTensor M(8, 2);
    for (int x = 0; x < 8; ++x) M.at(x, x) = A[x];
    return M;
}

struct FibonacciRank {
    long long closed_form = 0;
    long long brute_force = -1;  // -1 when not computed
};

inline FibonacciRank fibonacci_rank(int N, int brute_max = 4) {
    if (N < 1) throw PreconditionError("fibonacci_rank: N must be >= 1");
    FibonacciRank r;
    // x^n = x^{n-1} T with T = [[1,1],[1,2]]; rank = x_00 + x_11
    long long x00 = 1, x01 = 1, x10 = 1, x11 = 2;
    for (int n = 2; n <= N; ++n) {
        long long y00 = x00 + x01, y01 = x00 + 2 * x01, y10 = x10 + x11, y11 = x10 + 2 * x11;
        x00 = y00, x01 = y01, x10 = y10, x11 = y11;
    }
    r.closed_form = x00 + x11;
    if (N <= brute_max) {
        // the operator is diagonal; its rank is the number of nonzero diagonal entries
        Vec diag = mpv_dense(fibonacci_tensor(), N).data;
        r.brute_force = (diag.array().abs() > 1e-12).count();
    }
    return r;
}

// All (r, s) with r s^{N-1} = ranks[N-1] for every N; empty means no strong-RFP growth law fits.
inline std::vector<std::pair<int, int>> geometric_rank_fits(const std::vector<long long>& ranks, int max_rs = 50) {
    std::vector<std::pair<int, int>> out;
    for (int r = 1; r <= max_rs; ++r)
        for (int s = 1; s <= max_rs; ++s) {
            bool ok = true;
            long long v = r;
            for (std::size_t n = 0; n < ranks.size() && ok; ++n) {
                if (v != ranks[n]) ok = false;
                v *= s;
            }
            if (ok) out.emplace_back(r, s);
        }
    return out;
}

} // namespace tnfp
