#include "corpus.hpp"

#include <gtest/gtest.h>

using namespace tnfp;
namespace ex = tnfp::examples;

namespace {

struct CapGuard {
    int saved = config().mixed_cap_bits;
    explicit CapGuard(int bits) { config().mixed_cap_bits = bits; }
    ~CapGuard() { config().mixed_cap_bits = saved; }
};

Mat qubit_state(double p, cd c) {
    Mat r(2, 2);
    r << p, c, std::conj(c), 1 - p;
    return r;
}

} // namespace

TEST(Validate, ToricParityProjector) {
    auto v = validate_mpdo(ex::toric(), {1, 2, 3, 4});
    EXPECT_TRUE(v.hermitian);
    EXPECT_TRUE(v.positive);
    auto rho = mpdo_dense(ex::toric(), 3).data;
    auto ev = la::eigh(rho).values;
    for (Eigen::Index k = 0; k < ev.size(); ++k) EXPECT_NEAR(ev(k), k < 4 ? 0.0 : 2.0, 1e-12);
}

TEST(Validate, MaxMixedAndBroken) {
    EXPECT_TRUE(validate_mpdo(ex::max_mixed(3), {1, 2, 3, 4}).positive);
    MpdoTensor bad(2, 1);
    bad.at(0, 1)(0, 0) = 1;
    auto v = validate_mpdo(bad, {1, 2});
    EXPECT_FALSE(v.hermitian);
    EXPECT_FALSE(v.positive);
    EXPECT_GT(v.hermitian_residual[0], 0.5);
}

TEST(Validate, CapExceeded) {
    EXPECT_THROW(validate_mpdo(ex::max_mixed(2), {9}), PreconditionError);
}

TEST(MixedZcl, Examples) {
    auto t = is_zcl_mixed(ex::toric());
    EXPECT_TRUE(t.zcl);
    EXPECT_NEAR(std::abs(t.lambda), 2.0, 1e-10);
    EXPECT_FALSE(is_zcl_mixed(ex::classical_ring()).zcl);
    EXPECT_TRUE(is_zcl_mixed(ex::max_mixed()).zcl);
    EXPECT_TRUE(is_zcl_mixed(ex::flip_chain()).zcl);
    EXPECT_TRUE(is_zcl_mixed(ex::pure_to_mpdo(ex::ghz())).zcl);
    EXPECT_FALSE(is_zcl_mixed(ex::pure_to_mpdo(ex::aklt())).zcl);
}

TEST(Purify, ReproducesState) {
    for (const auto& [name, M] : ex::mixed_library()) {
        auto p = purify(M);
        ASSERT_TRUE(p.success) << name;
        for (int N = 1; N <= 4; ++N) {
            Mat ref = mpdo_dense(M, N).data;
            if (la::ipow(M.d() * p.ancilla, N) > (1 << 14)) break;
            EXPECT_LT((purification_state(p, M.d(), N) - ref).norm(), 1e-9 * std::max(1.0, ref.norm())) << name << " N=" << N;
        }
    }
}

TEST(Purify, ToricDiagonalEmbedding) {
    auto p = purify(ex::toric());
    ASSERT_TRUE(p.success);
    EXPECT_EQ(p.method, "diagonal");
    EXPECT_EQ(p.bond, 2);
    EXPECT_EQ(p.ancilla, 4);
}

TEST(Purify, MaxMixedCopyTensor) {
    auto p = purify(ex::max_mixed(2));
    ASSERT_TRUE(p.success);
    EXPECT_EQ(p.ancilla, 2);
    EXPECT_EQ(p.bond, 1);
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a) EXPECT_NEAR(std::abs(p.tensor[i * 2 + a](0, 0)), i == a ? 1.0 : 0.0, 1e-12);
}

// Random virtual gauge keeps every state PSD but breaks every local factorization tried.
TEST(Purify, FailureIsReported) {
    std::mt19937_64 rng(2);
    Mat X = la::random_gaussian(2, 2, rng);
    MpdoTensor M = ex::toric();
    for (auto& m : M.M) m = X * m * X.inverse();
    EXPECT_TRUE(validate_mpdo(M, {1, 2, 3, 4, 5, 6}, 1e-9).positive);
    auto p = purify(M);
    EXPECT_FALSE(p.success);
    EXPECT_FALSE(p.note.empty());
    EXPECT_THROW(is_prfp(M), PreconditionError);
}

TEST(Prfp, Examples) {
    auto e = is_prfp(ex::flip_chain());
    EXPECT_TRUE(e.prfp);
    EXPECT_TRUE(e.agree);
    auto a = is_prfp(ex::pure_to_mpdo(ex::aklt()));
    EXPECT_FALSE(a.prfp);
    EXPECT_TRUE(a.agree);
    EXPECT_TRUE(is_prfp(ex::max_mixed()).prfp);
    EXPECT_TRUE(is_prfp(ex::toric()).prfp);
    for (double p : {0.1, 0.4}) EXPECT_TRUE(is_prfp(ex::flip_chain(p)).prfp) << p;
}

TEST(MutualInfo, FlipChainEntropies) {
    auto m = mutual_info_profile(ex::flip_chain(0.25), 4);
    const double S[] = {2.0, 2.9544, 3.8802, 2.7839};
    for (int L = 0; L < 4; ++L) EXPECT_NEAR(m.S[std::size_t(L)], S[L], 5e-4);
    ASSERT_EQ(m.I.size(), 2u);
    EXPECT_NEAR(m.I[0], 3.0963, 5e-4);
    EXPECT_NEAR(m.I[1], 3.1250, 5e-4);
    EXPECT_FALSE(m.sal);
}

TEST(MutualInfo, ToricSaturates) {
    auto m = mutual_info_profile(ex::toric(), 6);
    for (double I : m.I) EXPECT_NEAR(I, 1.0, 1e-9);
    EXPECT_TRUE(m.sal);
    EXPECT_NEAR(m.bound, 4.0, 1e-12);
}

// Two-state Markov ring: the end-to-end correlation still moves I_L at N = 6.
TEST(MutualInfo, ClassicalRingFiniteSize) {
    auto m = mutual_info_profile(ex::classical_ring(), 6);
    ASSERT_EQ(m.I.size(), 3u);
    EXPECT_NEAR(m.I[0], 0.15618, 1e-4);
    EXPECT_NEAR(m.I[1], 0.16409, 1e-4);
    EXPECT_NEAR(m.I[2], 0.16487, 1e-4);
}

TEST(MutualInfo, RejectsNonPsd) {
    MpdoTensor M(2, 1);
    M.at(0, 0)(0, 0) = 1;
    M.at(1, 1)(0, 0) = -0.5;
    EXPECT_THROW(mutual_info_profile(M, 2), PreconditionError);
}

TEST(MutualInfo, MonotoneAndBounded) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        auto M = corpus::random_local_psd_mpdo(2, 1 + t % 3, rng);
        auto m = mutual_info_profile(M, 6);
        for (std::size_t L = 0; L + 1 < m.I.size(); ++L) EXPECT_LE(m.I[L], m.I[L + 1] + 1e-9) << t;
        for (double I : m.I) EXPECT_LE(I, m.bound + 1e-9) << t;
    }
}

TEST(Simple, Examples) {
    auto t = is_simple(ex::toric());
    EXPECT_FALSE(t.simple);
    ASSERT_EQ(t.nilpotent.size(), 1u);
    EXPECT_LT(t.traced[std::size_t(t.nilpotent[0])].norm(), 1e-12);
    EXPECT_TRUE(is_simple(ex::classical_ring()).simple);
    EXPECT_TRUE(is_simple(ex::max_mixed()).simple);
}

TEST(Gsnnch, NotApplicable) {
    EXPECT_FALSE(extract_gsnnch(ex::toric()).applicable);
    auto g = extract_gsnnch(ex::classical_ring());
    EXPECT_FALSE(g.applicable);
    EXPECT_EQ(g.reason, "not SAL");
}

TEST(Gsnnch, ClassicalRingStructure) {
    GsnnchOptions o;
    o.require_sal = false;
    auto g = extract_gsnnch(ex::classical_ring(), o);
    ASSERT_TRUE(g.applicable);
    ASSERT_EQ(g.labels(), 2);
    EXPECT_TRUE(g.primitive);
    EXPECT_FALSE(g.rank_one);
    EXPECT_FALSE(g.success);
    EXPECT_LT(g.reassembly_residual, 1e-9);
    // [[1, 1/2], [1/2, 1]] up to its spectral radius 3/2
    EXPECT_NEAR(g.T(0, 0), 2.0 / 3, 1e-9);
    EXPECT_NEAR(g.T(0, 1), 1.0 / 3, 1e-9);
    EXPECT_NEAR(g.scale, 1.5, 1e-9);
    EXPECT_THROW(build_ts_channels(g), PreconditionError);
}

TEST(Gsnnch, ProductStateSingleBlock) {
    Mat rho = qubit_state(0.7, cd(0.1, 0.2));
    auto g = extract_gsnnch(ex::product(rho));
    ASSERT_TRUE(g.success) << g.reason;
    ASSERT_EQ(g.labels(), 1);
    EXPECT_EQ(g.n[0] * g.m[0], 2);
    // eta is the one-site state in structure coordinates
    const Mat& eta = g.eta[0][0];
    EXPECT_NEAR(eta.trace().real(), 1.0, 1e-9);
    EXPECT_LT((g.U * eta * g.U.adjoint() - rho).norm(), 1e-9);
    EXPECT_LT(g.commutator, 1e-9);
}

TEST(Gsnnch, ZclRoundTrip) {
    CapGuard cap(20);
    std::mt19937_64 rng(4);
    for (const auto& shape : corpus::eta_shapes()) {
        auto c = corpus::random_eta_chain(shape, corpus::EtaKind::zcl, rng);
        auto M = ex::eta_chain_tensor(c);
        auto g = extract_gsnnch(M);
        ASSERT_TRUE(g.success) << g.reason;
        EXPECT_TRUE(g.rank_one);
        EXPECT_TRUE(g.marginals_factorize);
        EXPECT_NEAR(g.a.dot(g.b), 1.0, 1e-9);
        EXPECT_NEAR(std::abs(g.Psi.dot(g.Phi)), 1.0, 1e-9);
        EXPECT_LT(g.commutator, 1e-8);
        EXPECT_LT(g.reassembly_residual, 1e-8);
        for (const auto& row : g.eta)
            for (const auto& e : row)
                if (e.size()) EXPECT_GT(la::min_eigenvalue(e), -1e-9);
    }
}

TEST(Gsnnch, GenericIsNotSal) {
    CapGuard cap(20);
    std::mt19937_64 rng(6);
    auto c = corpus::random_eta_chain({{1, 1}, {1, 1}}, corpus::EtaKind::generic, rng);
    auto M = ex::eta_chain_tensor(c);
    EXPECT_FALSE(mutual_info_profile(M, 6).sal);
    EXPECT_FALSE(is_zcl_mixed(M).zcl);
    EXPECT_FALSE(extract_gsnnch(M).success);
}

TEST(Channels, MaxMixed) {
    auto g = extract_gsnnch(ex::max_mixed(2));
    ASSERT_TRUE(g.success);
    auto ts = build_ts_channels(g);
    EXPECT_TRUE(ts.verified);
    // on the states the tensor generates, T appends a maximally mixed site and S traces one out
    Mat I4 = Mat::Identity(4, 4), I8 = Mat::Identity(8, 8);
    EXPECT_LT((ts.T.apply(I4 / 4.0) - I8 / 8.0).norm(), 1e-12);
    EXPECT_LT((ts.S.apply(I8 / 8.0) - I4 / 4.0).norm(), 1e-12);
    std::mt19937_64 rng(1);
    Mat X = la::random_psd(4, 4, rng);
    Mat out = ts.T.apply(X);
    EXPECT_NEAR(std::abs(out.trace() - X.trace()), 0.0, 1e-12);
    EXPECT_LT((la::ptrace(out, {2, 2, 2}, {0, 1}) - X.trace() * I4 / 4.0).norm(), 1e-12);
}

TEST(Channels, ZclChains) {
    CapGuard cap(20);
    std::mt19937_64 rng(8);
    for (auto kind : {corpus::EtaKind::zcl, corpus::EtaKind::rank_one_left, corpus::EtaKind::rank_one_right})
        for (const auto& shape : corpus::eta_shapes()) {
            auto M = ex::eta_chain_tensor(corpus::random_eta_chain(shape, kind, rng));
            auto g = extract_gsnnch(M);
            ASSERT_TRUE(g.success) << g.reason;
            auto ts = build_ts_channels(g);
            EXPECT_TRUE(ts.verified);
            EXPECT_LT(ts.worst_T, 1e-9);
            EXPECT_LT(ts.worst_S, 1e-9);
            EXPECT_LT(ts.T.tp_residual, 1e-9);
            EXPECT_LT(ts.S.tp_residual, 1e-9);
            EXPECT_GT(ts.T.min_choi_eigenvalue, -1e-9);
            EXPECT_GT(ts.S.min_choi_eigenvalue, -1e-9);
        }
}

TEST(Separation, FlipChainZclWithoutSal) {
    EXPECT_TRUE(is_zcl_mixed(ex::flip_chain()).zcl);
    EXPECT_FALSE(mutual_info_profile(ex::flip_chain(), 4).sal);
}
