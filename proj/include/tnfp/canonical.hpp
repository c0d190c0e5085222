#pragma once

#include "tensor_core.hpp"

#include <map>
#include <optional>
#include <tuple>
#include <variant>

namespace tnfp {

// ---------------------------------------------------------------- spectra

inline double transfer_radius(const MpvTensor& A) { return la::spectral_radius(transfer_map(A, A).matrix); }

// A / sqrt(rho(E)); returns the tensor unchanged when rho = 0.
inline MpvTensor normalize_radius(const MpvTensor& A, double* r_out = nullptr) {
    double r = transfer_radius(A);
    if (r_out) *r_out = r;
    if (r <= 0) return A;
    return A.scaled(1.0 / std::sqrt(r));
}

// Eigenvalues of a radius-normalized map with |lambda| > 1 - 10 tol.
inline std::vector<cd> peripheral(const Vec& ev, double tol) {
    std::vector<cd> out;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev(i)) > 1.0 - 10 * tol) out.push_back(ev(i));
    std::sort(out.begin(), out.end(), [](cd a, cd b) { return std::arg(a) < std::arg(b); });
    return out;
}

// Right fixed point of X -> sum A X A^dagger for a normal, radius-1 tensor (PSD, unit trace).
inline Mat right_fixed_point(const MpvTensor& A) {
    const int D = A.D();
    Mat E = transfer_map(A, A).matrix - Mat::Identity(D * D, D * D);
    Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeFullV);
    Mat R = la::runvec(svd.matrixV().col(D * D - 1), D, D);
    R = la::hermitize(R * (std::abs(R.trace()) > 0 ? std::conj(R.trace()) / std::abs(R.trace()) : cd(1)));
    return R / R.trace().real();
}

// Left fixed point: X -> sum A^dagger X A.
inline Mat left_fixed_point(const MpvTensor& A) {
    MpvTensor Ad = A;
    for (auto& m : Ad.A) m = m.adjoint().eval();
    return right_fixed_point(Ad);
}

// ------------------------------------------------- invariant subspaces

namespace detail {

// Orthonormal Q spanning a subspace; checks A^i Q inside span(Q).
inline double invariance_residual(const MpvTensor& A, const Mat& Q) {
    Mat P = Q * Q.adjoint();
    double r = 0, n = 0;
    for (const auto& a : A.A) {
        r = std::max(r, ((Mat::Identity(P.rows(), P.cols()) - P) * a * Q).norm());
        n = std::max(n, a.norm());
    }
    return n > 0 ? r / n : r;
}

// Spectral projection of vec(1) on the eigenvalue-1 space of the normalized CPM.
inline std::optional<Mat> cesaro_candidate(const MpvTensor& A, bool dual) {
    const int D = A.D();
    double r = transfer_radius(A);
    if (r <= 0) return std::nullopt;
    MpvTensor B = A.scaled(1.0 / std::sqrt(r));
    if (dual)
        for (auto& m : B.A) m = m.adjoint().eval();
    Mat E = transfer_map(B, B).matrix;
    Mat I = Mat::Identity(D * D, D * D);
    Mat K = la::null_space(E - I, 1e-9);
    Mat L = la::null_space((E - I).adjoint(), 1e-9);
    if (K.cols() == 0 || K.cols() != L.cols()) return std::nullopt;
    Mat G = L.adjoint() * K;
    if (la::rank(G, 1e-9) < G.rows()) return std::nullopt;
    Vec v = K * G.inverse() * (L.adjoint() * la::rvec(Mat::Identity(D, D)));
    Mat F = la::hermitize(la::runvec(v, D, D));
    auto e = la::eigh(F);
    double top = e.values.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < D; ++i)
        if (e.values(i) > 1e-8 * top) keep.push_back(i);
    if (keep.empty() || int(keep.size()) == D) return std::nullopt;
    Mat Q(D, Eigen::Index(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) Q.col(Eigen::Index(k)) = e.vectors.col(keep[k]);
    if (dual) Q = la::complement(Q, D);
    return Q;
}

// Basis (as D x D matrices) of the unital algebra generated by the A^i.
inline std::vector<Mat> generated_algebra(const std::vector<Mat>& gens, int D) {
    la::SpanTracker span(D * D, 1e-9);
    std::vector<Mat> basis;
    auto push = [&](const Mat& m) {
        if (span.add(la::rvec(m))) basis.push_back(m);
    };
    push(Mat::Identity(D, D));
    for (const auto& g : gens) push(g);
    for (std::size_t k = 0; k < basis.size() && !span.full(); ++k)
        for (const auto& g : gens) push(basis[k] * g);
    return basis;
}

inline Mat spin(const std::vector<Mat>& alg, const Vec& v) {
    Mat cols(v.size(), Eigen::Index(alg.size()));
    for (std::size_t k = 0; k < alg.size(); ++k) cols.col(Eigen::Index(k)) = alg[k] * v;
    return la::orth(cols, 1e-9);
}

// Proper invariant subspaces found by spinning kernel vectors of b - lambda.
inline std::optional<Mat> meataxe(const MpvTensor& A) {
    const int D = A.D();
    if (D < 2) return std::nullopt;
    auto alg = generated_algebra(A.A, D);
    if (int(alg.size()) == D * D) return std::nullopt;
    std::vector<Mat> algd;
    for (const auto& m : alg) algd.push_back(m.adjoint());

    std::mt19937_64 rng(0x5eed);
    std::optional<Mat> best;
    auto consider = [&](const Mat& Q) {
        if (Q.cols() == 0 || Q.cols() >= D) return;
        if (invariance_residual(A, Q) > 1e-8) return;
        if (!best || Q.cols() < best->cols() ||
            (Q.cols() == best->cols() && (Q * Q.adjoint())(0, 0).real() > ((*best) * best->adjoint())(0, 0).real() + 1e-9))
            best = Q;
    };
    for (int attempt = 0; attempt < 4; ++attempt) {
        Mat b = Mat::Zero(D, D);
        Mat c = la::random_gaussian(Eigen::Index(alg.size()), 1, rng);
        for (std::size_t k = 0; k < alg.size(); ++k) b += c(Eigen::Index(k), 0) * alg[k];
        Vec ev = la::eigenvalues(b);
        for (Eigen::Index e = 0; e < ev.size(); ++e) {
            Mat shift = b - ev(e) * Mat::Identity(D, D);
            for (int side = 0; side < 2; ++side) {
                Mat N = la::null_space(side == 0 ? shift : Mat(shift.adjoint()), 1e-7);
                const auto& use = side == 0 ? alg : algd;
                std::vector<Vec> seeds;
                for (Eigen::Index j = 0; j < N.cols(); ++j) seeds.push_back(N.col(j));
                if (N.cols() > 1) seeds.push_back(N * la::random_gaussian(N.cols(), 1, rng));
                for (const auto& s : seeds) {
                    Mat W = spin(use, s);
                    if (W.cols() == 0 || W.cols() == D) continue;
                    consider(side == 0 ? W : la::complement(W, D));
                }
            }
        }
        if (best) break;
    }
    return best;
}

} // namespace detail

// Orthonormal basis Q of a proper invariant subspace (A^i Q in span Q), if any.
inline std::optional<Mat> find_invariant_subspace(const MpvTensor& A) {
    const int D = A.D();
    if (D < 2) return std::nullopt;
    for (bool dual : {false, true}) {
        auto q = detail::cesaro_candidate(A, dual);
        if (q && detail::invariance_residual(A, *q) < 1e-8) return q;
    }
    return detail::meataxe(A);
}

// ------------------------------------------------------------ normality

struct NormalityCertificate {
    enum class Kind { normal, invariant_subspace, peripheral_spectrum } kind = Kind::normal;
    Mat projector;                // invariant_subspace witness P with A^i P = P A^i P
    std::vector<cd> peripheral;   // normalized peripheral spectrum
    double subleading = 0;        // largest non-peripheral modulus (normalized)
    bool is_normal() const { return kind == Kind::normal; }
};

inline NormalityCertificate is_normal(const MpvTensor& A) {
    A.check();
    const double tol = config().tol;
    NormalityCertificate c;
    if (auto Q = find_invariant_subspace(A)) {
        c.kind = NormalityCertificate::Kind::invariant_subspace;
        c.projector = (*Q) * Q->adjoint();
        return c;
    }
    Vec ev = la::eigenvalues(transfer_map(A, A).matrix);
    double r = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
    if (r <= 0) {
        c.kind = NormalityCertificate::Kind::peripheral_spectrum;
        return c;
    }
    ev /= r;
    c.peripheral = peripheral(ev, tol);
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev(i)) <= 1.0 - 10 * tol) c.subleading = std::max(c.subleading, std::abs(ev(i)));
    bool ok = c.peripheral.size() == 1 && std::abs(c.peripheral[0] - 1.0) < 1e-8;
    c.kind = ok ? NormalityCertificate::Kind::normal : NormalityCertificate::Kind::peripheral_spectrum;
    return c;
}

// ------------------------------------------------------------ gauges

struct GaugeWitness {
    bool equivalent = false;
    double phi = 0;        // B = e^{i phi} X A X^{-1} after radius normalization
    Mat X;
    double residual = 0;
    double radius = 0;     // spectral radius of the normalized mixed transfer map
    double scale_ratio = 1; // sqrt(rho_B / rho_A)
};

inline GaugeWitness find_gauge(const MpvTensor& A, const MpvTensor& B) {
    if (A.d() != B.d()) throw PreconditionError("find_gauge: physical dimension mismatch");
    if (!is_normal(A).is_normal() || !is_normal(B).is_normal())
        throw PreconditionError("find_gauge: both inputs must be normal");
    double ra = 0, rb = 0;
    MpvTensor a = normalize_radius(A, &ra), b = normalize_radius(B, &rb);
    GaugeWitness w;
    w.scale_ratio = std::sqrt(rb / ra);
    Mat E = transfer_map(a, b).matrix;
    Eigen::ComplexEigenSolver<Mat> es(E);
    Eigen::Index k = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&k);
    cd lam = es.eigenvalues()(k);
    w.radius = std::abs(lam);
    if (std::abs(w.radius - 1.0) > 1e-6) return w;
    Mat Z = la::runvec(es.eigenvectors().col(k), a.D(), b.D());
    Mat R = right_fixed_point(a);
    Mat X = Z.adjoint() * R.inverse();
    if (X.rows() != X.cols() || la::rank(X, 1e-9) < X.rows()) return w;
    X = la::normalize_gauge(X);
    double phi = -std::arg(lam);
    if (phi < 0) phi += 2 * M_PI;
    Mat Xi = X.inverse();
    double res = 0, nb = 0;
    for (int i = 0; i < a.d(); ++i) {
        res = std::max(res, (b[i] - std::polar(1.0, phi) * X * a[i] * Xi).norm());
        nb = std::max(nb, b[i].norm());
    }
    w.residual = nb > 0 ? res / nb : res;
    w.phi = phi;
    w.X = X;
    w.equivalent = w.residual < 1e-8;
    return w;
}

// ------------------------------------------------------------ power sums

inline bool match_power_sums(std::vector<cd> a, std::vector<cd> b, int N_max = 0, double tol = 1e-8) {
    auto prune = [&](std::vector<cd>& v) {
        v.erase(std::remove_if(v.begin(), v.end(), [&](cd x) { return std::abs(x) < tol; }), v.end());
    };
    prune(a);
    prune(b);
    // direct: greedy nearest matching
    bool direct = a.size() == b.size();
    if (direct) {
        std::vector<bool> used(b.size(), false);
        for (cd x : a) {
            int best = -1;
            double bd = 1e300;
            for (std::size_t j = 0; j < b.size(); ++j)
                if (!used[j] && std::abs(x - b[j]) < bd) {
                    bd = std::abs(x - b[j]);
                    best = int(j);
                }
            if (best < 0 || bd > 1e3 * tol) {
                direct = false;
                break;
            }
            used[std::size_t(best)] = true;
        }
    }
    int n = std::max<int>(N_max, int(std::max(a.size(), b.size())));
    bool sums = true;
    double scale = 1;
    for (cd x : a) scale = std::max(scale, std::abs(x));
    for (cd x : b) scale = std::max(scale, std::abs(x));
    for (int N = 1; N <= n && sums; ++N) {
        cd pa = 0, pb = 0;
        for (cd x : a) pa += std::pow(x / scale, N);
        for (cd x : b) pb += std::pow(x / scale, N);
        if (std::abs(pa - pb) > 1e3 * tol * std::max<double>(1.0, double(n))) sums = false;
    }
    if (direct != sums) throw NumericalError("match_power_sums: direct and power-sum comparisons disagree");
    return direct;
}

// ------------------------------------------------------------ canonical form

struct CanonicalBlock {
    cd mu;      // weight, |mu| <= 1
    Mat X;      // gauge: block = mu X A_j X^{-1}
    int bnt = 0;
};

struct CanonicalDecomposition {
    std::vector<MpvTensor> bnt;
    std::vector<CanonicalBlock> blocks;
    double scale = 1;  // tensor = scale * (direct sum of blocks)
    int period = 1;    // blocking factor applied before decomposition
    Mat basis;         // unitary; basis^dagger A basis is block upper triangular
    int d = 0;

    int g() const { return int(bnt.size()); }

    // Block-diagonal reassembly (describes block(A, period)).
    MpvTensor tensor() const {
        MpvTensor out;
        for (int i = 0; i < d; ++i) {
            std::vector<Mat> parts;
            for (const auto& b : blocks) {
                const auto& A = bnt[std::size_t(b.bnt)];
                parts.push_back(scale * b.mu * b.X * A[i] * b.X.inverse());
            }
            out.A.push_back(la::direct_sum(parts));
        }
        return out;
    }
};

namespace detail {

inline void split_recursive(const MpvTensor& A, const Mat& frame, std::vector<Mat>& out) {
    MpvTensor loc;
    for (const auto& a : A.A) loc.A.push_back(frame.adjoint() * a * frame);
    auto Q = find_invariant_subspace(loc);
    if (!Q) {
        out.push_back(frame);
        return;
    }
    Mat Qc = la::complement(*Q, frame.cols());
    split_recursive(A, frame * (*Q), out);
    split_recursive(A, frame * Qc, out);
}

inline std::string fingerprint(const MpvTensor& A) {
    std::string s;
    char buf[64];
    for (const auto& m : A.A)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%+.6f%+.6f;", m(i, j).real() + 0.0, m(i, j).imag() + 0.0);
                s += buf;
            }
    return s;
}

} // namespace detail

// Orthonormal frames of the irreducible diagonal blocks (upper-triangular order).
inline std::vector<Mat> irreducible_frames(const MpvTensor& A) {
    std::vector<Mat> frames;
    detail::split_recursive(A, Mat::Identity(A.D(), A.D()), frames);
    return frames;
}

inline CanonicalDecomposition canonical_form(const MpvTensor& A0, int max_period = 64) {
    A0.check();
    const double tol = config().tol;
    MpvTensor A = A0;
    int period = 1;
    for (;;) {
        auto frames = irreducible_frames(A);
        struct Piece {
            MpvTensor t;
            double r;
            Mat frame;
        };
        std::vector<Piece> pieces;
        double rmax = 0;
        for (const auto& f : frames) {
            MpvTensor t;
            for (const auto& a : A.A) t.A.push_back(f.adjoint() * a * f);
            double r = transfer_radius(t);
            rmax = std::max(rmax, r);
            pieces.push_back({t, r, f});
        }
        long long need = 1;
        std::vector<Piece> kept;
        for (auto& p : pieces) {
            if (rmax <= 0 || p.r < tol * rmax) continue;
            p.t = p.t.scaled(1.0 / std::sqrt(p.r));
            Vec ev = la::eigenvalues(transfer_map(p.t, p.t).matrix);
            int per = 0;
            double worst = 0;
            for (Eigen::Index i = 0; i < ev.size(); ++i) {
                double m = std::abs(ev(i));
                if (m > 1.0 - 10 * tol) ++per;
                else if (m > 1.0 - 1e-6) worst = std::max(worst, m);
            }
            if (worst > 0)
                throw NumericalError("ill-conditioned spectrum: eigenvalue modulus " + std::to_string(worst) +
                                     " within 1e-6 of the peripheral circle");
            need = la::lcm(need, std::max(per, 1));
            kept.push_back(p);
        }
        if (need > 1) {
            if (period * need > max_period) throw NumericalError("canonical_form: periodicity too large to block");
            period *= int(need);
            A = block(A0, period);
            continue;
        }

        CanonicalDecomposition cf;
        cf.d = A.d();
        cf.period = period;
        cf.scale = std::sqrt(rmax);
        Mat basis(A.D(), 0);
        for (const auto& f : frames) {
            basis.conservativeResize(Eigen::NoChange, basis.cols() + f.cols());
            basis.rightCols(f.cols()) = f;
        }
        cf.basis = basis;
        if (kept.empty()) return cf;

        // sort pieces: descending weight, dimension, fingerprint
        std::sort(kept.begin(), kept.end(), [](const Piece& x, const Piece& y) {
            if (std::abs(x.r - y.r) > 1e-9 * std::max(x.r, y.r)) return x.r > y.r;
            if (x.t.D() != y.t.D()) return x.t.D() < y.t.D();
            return detail::fingerprint(x.t) < detail::fingerprint(y.t);
        });
        for (const auto& p : kept) {
            cd mu = std::sqrt(p.r / rmax);
            bool matched = false;
            for (std::size_t j = 0; j < cf.bnt.size() && !matched; ++j) {
                if (cf.bnt[j].D() != p.t.D()) continue;
                auto w = find_gauge(cf.bnt[j], p.t);
                if (!w.equivalent) continue;
                cf.blocks.push_back({mu * std::polar(1.0, w.phi), w.X, int(j)});
                matched = true;
            }
            if (!matched) {
                cf.bnt.push_back(p.t);
                cf.blocks.push_back({mu, Mat::Identity(p.t.D(), p.t.D()), int(cf.bnt.size() - 1)});
            }
        }
        return cf;
    }
}

// -------------------------------------------------------------- CFII

struct CfiiResult {
    MpvTensor tensor;                 // direct sum of scale * mu * A_j^{II}
    std::vector<MpvTensor> bnt;       // A_j^{II} = G_j A_j G_j^{-1}
    std::vector<Mat> gauge;           // G_j
    std::vector<RVec> lambda;         // diagonal of Lambda_j, trace one
    CanonicalDecomposition cf;
};

inline CfiiResult to_cfii(const MpvTensor& A) {
    CfiiResult out;
    out.cf = canonical_form(A);
    for (std::size_t j = 0; j < out.cf.bnt.size(); ++j) {
        const auto& N = out.cf.bnt[j];
        Mat Y = left_fixed_point(N);
        auto ey = la::eigh(Y);
        if (ey.values.minCoeff() < 1e-10 * ey.values.maxCoeff())
            throw NumericalError("to_cfii: left fixed point not full rank in block " + std::to_string(j));
        Mat Ys = la::psd_pow_support(Y, 0.5), Yi = la::psd_pow_support(Y, -0.5);
        Mat R = right_fixed_point(N);
        auto ew = la::eigh(Ys * R * Ys);
        if (ew.values.minCoeff() < 1e-10 * ew.values.maxCoeff())
            throw NumericalError("to_cfii: right fixed point not full rank in block " + std::to_string(j));
        // descending Lambda for a deterministic layout
        Mat W = ew.vectors.rowwise().reverse();
        RVec lam = ew.values.reverse();
        lam /= lam.sum();
        Mat G = W.adjoint() * Ys;
        Mat Gi = Yi * W;
        MpvTensor T = N;
        for (auto& m : T.A) m = G * m * Gi;
        // Trace preservation fixes the scale of the left fixed point; renormalize exactly.
        Mat tp = Mat::Zero(T.D(), T.D());
        for (const auto& m : T.A) tp += m.adjoint() * m;
        double s = tp.trace().real() / double(T.D());
        for (auto& m : T.A) m /= std::sqrt(s);
        out.bnt.push_back(T);
        out.gauge.push_back(G);
        out.lambda.push_back(lam);
    }
    for (int i = 0; i < out.cf.d; ++i) {
        std::vector<Mat> parts;
        for (const auto& b : out.cf.blocks) parts.push_back(out.cf.scale * b.mu * out.bnt[std::size_t(b.bnt)][i]);
        out.tensor.A.push_back(parts.empty() ? Mat::Zero(0, 0) : la::direct_sum(parts));
    }
    return out;
}

// ----------------------------------------------------- injectivity

struct InjectivityReport {
    bool injective = false;
    int L = 0;     // blocking length reached (success) or last tried
    int rank = 0;  // span rank at L
};

// Words of length L span S_L; S_L = S_{L-1} * span{A^i}.
inline InjectivityReport is_injective(const MpvTensor& A) {
    A.check();
    const int D = A.D();
    const long long Lmax = la::ipow(D, 4);
    std::vector<Mat> cur;
    {
        Mat b = la::orth(A.span_matrix().transpose(), 1e-10);
        for (Eigen::Index k = 0; k < b.cols(); ++k) cur.push_back(la::unvec(b.col(k), D, D));
    }
    InjectivityReport rep;
    for (int L = 1;; ++L) {
        rep.L = L;
        rep.rank = int(cur.size());
        if (rep.rank == D * D) {
            rep.injective = true;
            return rep;
        }
        if (L >= Lmax || cur.empty()) return rep;
        Mat cols(D * D, Eigen::Index(cur.size() * A.A.size()));
        Eigen::Index c = 0;
        for (const auto& s : cur)
            for (const auto& a : A.A) cols.col(c++) = la::vec(s * a);
        Mat b = la::orth(cols, 1e-10);
        cur.clear();
        for (Eigen::Index k = 0; k < b.cols(); ++k) cur.push_back(la::unvec(b.col(k), D, D));
    }
}

struct BlockInjectiveResult {
    MpvTensor tensor;  // block(canonical-form tensor, L)
    int L = 0;
    int period = 1;
    int rank = 0;
    int target = 0;
};

inline BlockInjectiveResult to_block_injective(const MpvTensor& A) {
    auto cf = canonical_form(A);
    BlockInjectiveResult res;
    res.period = cf.period;
    std::vector<int> dims;
    int target = 0, Dtot = 0;
    for (const auto& t : cf.bnt) {
        dims.push_back(t.D());
        target += t.D() * t.D();
        Dtot += t.D();
    }
    res.target = target;
    if (cf.bnt.empty()) throw NumericalError("to_block_injective: tensor has no nonzero block");
    const int d = cf.d;
    // direct sum of BNT elements, one copy each
    auto sum_vec = [&](const std::vector<Mat>& parts) {
        Vec v(target);
        Eigen::Index o = 0;
        for (const auto& p : parts) {
            v.segment(o, p.size()) = la::vec(p);
            o += p.size();
        }
        return v;
    };
    auto to_parts = [&](const Vec& v) {
        std::vector<Mat> parts;
        Eigen::Index o = 0;
        for (int D : dims) {
            parts.push_back(la::unvec(v.segment(o, D * D), D, D));
            o += D * D;
        }
        return parts;
    };
    std::vector<std::vector<Mat>> gens;
    for (int i = 0; i < d; ++i) {
        std::vector<Mat> p;
        for (const auto& t : cf.bnt) p.push_back(t[i]);
        gens.push_back(p);
    }
    Mat cols(target, d);
    for (int i = 0; i < d; ++i) cols.col(i) = sum_vec(gens[std::size_t(i)]);
    Mat basis = la::orth(cols, 1e-10);
    const long long Lmax = 3 * la::ipow(Dtot, 5);
    for (int L = 1;; ++L) {
        res.rank = int(basis.cols());
        if (res.rank == target) {
            res.L = L;
            res.tensor = block(cf.tensor(), L);
            return res;
        }
        if (L >= Lmax || basis.cols() == 0)
            throw NumericalError("not block-injective within bound");
        Mat nc(target, basis.cols() * d);
        Eigen::Index c = 0;
        for (Eigen::Index k = 0; k < basis.cols(); ++k) {
            auto parts = to_parts(basis.col(k));
            for (int i = 0; i < d; ++i) {
                std::vector<Mat> prod;
                for (std::size_t j = 0; j < parts.size(); ++j) prod.push_back(parts[j] * gens[std::size_t(i)][j]);
                nc.col(c++) = sum_vec(prod);
            }
        }
        basis = la::orth(nc, 1e-10);
    }
}

// ------------------------------------------------ fundamental theorem

struct EquivalenceReport {
    enum class Verdict { equal, proportional, inequivalent } verdict = Verdict::inequivalent;
    int g_a = 0, g_b = 0;
    std::vector<int> match;             // BNT j of A -> j' of B
    std::vector<GaugeWitness> witnesses;
    cd theta = 1;                       // V_B^{(N)} = theta^N V_A^{(N)}
    std::optional<Mat> global_gauge;    // B = theta X A X^{-1} when a single block
    std::string reason;
};

inline const char* verdict_name(EquivalenceReport::Verdict v) {
    switch (v) {
        case EquivalenceReport::Verdict::equal: return "equal";
        case EquivalenceReport::Verdict::proportional: return "proportional";
        default: return "inequivalent";
    }
}

inline EquivalenceReport fundamental_theorem_check(const MpvTensor& A, const MpvTensor& B) {
    EquivalenceReport rep;
    if (A.d() != B.d()) {
        rep.reason = "physical dimensions differ";
        return rep;
    }
    auto ca = canonical_form(A), cb = canonical_form(B);
    int period = int(la::lcm(ca.period, cb.period));
    if (ca.period != period) ca = canonical_form(block(A, period));
    if (cb.period != period) cb = canonical_form(block(B, period));
    rep.g_a = ca.g();
    rep.g_b = cb.g();
    if (rep.g_a != rep.g_b) {
        rep.reason = "different number of basis elements";
        return rep;
    }
    std::vector<bool> used(std::size_t(rep.g_b), false);
    for (int j = 0; j < rep.g_a; ++j) {
        bool found = false;
        for (int k = 0; k < rep.g_b && !found; ++k) {
            if (used[std::size_t(k)] || ca.bnt[std::size_t(j)].D() != cb.bnt[std::size_t(k)].D()) continue;
            auto w = find_gauge(ca.bnt[std::size_t(j)], cb.bnt[std::size_t(k)]);
            if (w.equivalent) {
                used[std::size_t(k)] = true;
                rep.match.push_back(k);
                rep.witnesses.push_back(w);
                found = true;
            }
        }
        if (!found) {
            rep.reason = "basis element " + std::to_string(j) + " has no gauge-equivalent partner";
            return rep;
        }
    }
    // weights per class, B's carried back to A's normalization: nu e^{i phi}
    std::vector<std::vector<cd>> wa(std::size_t(rep.g_a)), wb(std::size_t(rep.g_a));
    for (const auto& b : ca.blocks) wa[std::size_t(b.bnt)].push_back(ca.scale * b.mu);
    for (int j = 0; j < rep.g_a; ++j) {
        const auto& w = rep.witnesses[std::size_t(j)];
        for (const auto& b : cb.blocks)
            if (b.bnt == rep.match[std::size_t(j)]) wb[std::size_t(j)].push_back(cb.scale * b.mu * std::polar(1.0, w.phi));
    }
    auto try_theta = [&](cd th) {
        for (int j = 0; j < rep.g_a; ++j) {
            std::vector<cd> s;
            for (cd x : wa[std::size_t(j)]) s.push_back(th * x);
            double mx = 0;
            for (cd x : s) mx = std::max(mx, std::abs(x));
            std::vector<cd> a = s, b = wb[std::size_t(j)];
            for (auto& x : a) x /= mx;
            for (auto& x : b) x /= mx;
            if (!match_power_sums(a, b)) return false;
        }
        return true;
    };
    std::vector<cd> cands{1.0};
    if (!wa.empty() && !wa[0].empty())
        for (cd y : wb[0]) cands.push_back(y / wa[0][0]);
    for (cd th : cands) {
        if (!try_theta(th)) continue;
        rep.theta = th;
        rep.verdict = std::abs(th - 1.0) < 1e-8 ? EquivalenceReport::Verdict::equal
                                                 : EquivalenceReport::Verdict::proportional;
        if (rep.g_a == 1 && ca.blocks.size() == 1 && cb.blocks.size() == 1 && ca.period == 1 &&
            ca.bnt[0].D() == A.D() && cb.bnt[0].D() == B.D()) {
            const auto& w = rep.witnesses[0];
            Mat Xa = ca.basis * ca.blocks[0].X;
            Mat Xb = cb.basis * cb.blocks[0].X;
            rep.global_gauge = la::normalize_gauge(Xb * w.X * Xa.inverse());
        }
        return rep;
    }
    rep.reason = "weight multisets differ";
    return rep;
}

} // namespace tnfp
