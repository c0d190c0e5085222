#include "corpus.hpp"

#include <tnfp/rfp_general.hpp>

#include <gtest/gtest.h>

using namespace tnfp;
namespace ex = tnfp::examples;

namespace {

struct CapGuard {
    int saved = config().mixed_cap_bits;
    explicit CapGuard(int bits) { config().mixed_cap_bits = bits; }
    ~CapGuard() { config().mixed_cap_bits = saved; }
};

Mat z_string(int N) {
    Mat Z = Mat::Identity(1, 1);
    Mat z(2, 2);
    z << 1, 0, 0, -1;
    for (int k = 0; k < N; ++k) Z = la::kron(Z, z);
    return Z;
}

int label_of(const VerticalCF& v, double sign) {
    for (int a = 0; a < v.labels(); ++a)
        if (std::abs(v.M[std::size_t(a)].at(1, 1)(0, 0) - sign) < 1e-9) return a;
    return -1;
}

} // namespace

TEST(VerticalCf, ToricTwoLabels) {
    auto v = vertical_cf(ex::toric());
    ASSERT_EQ(v.labels(), 2);
    EXPECT_TRUE(v.positive);
    EXPECT_LT(v.reassembly_residual, 1e-12);
    const int plus = label_of(v, 1.0), minus = label_of(v, -1.0);
    ASSERT_GE(plus, 0);
    ASSERT_GE(minus, 0);
    EXPECT_NEAR(v.m[std::size_t(plus)], 1.0, 1e-12);
    EXPECT_NEAR(v.m[std::size_t(minus)], 1.0, 1e-12);
    EXPECT_LT((boundary_operator(v.M[std::size_t(minus)], 3).data - z_string(3)).norm(), 1e-12);
}

TEST(VerticalCf, PeriodicNeedsBlocking) {
    MpdoTensor M(2, 2);
    M.at(0, 0)(0, 1) = 1;
    M.at(1, 1)(1, 0) = 1;
    EXPECT_THROW(vertical_cf(M), PreconditionError);
}

TEST(VerticalCf, GaugedToricSameWeights) {
    std::mt19937_64 rng(11);
    Mat X = la::random_gaussian(2, 2, rng) + 2.0 * Mat::Identity(2, 2);
    MpdoTensor M = ex::toric();
    for (auto& m : M.M) m = X * m * X.inverse();
    auto v = vertical_cf(M);
    ASSERT_EQ(v.labels(), 2);
    for (double m : v.m) EXPECT_NEAR(m, 1.0, 1e-9);
}

TEST(PowerSums, RecoversRootsAndMultiplicities) {
    std::vector<cd> s;
    for (int L = 2; L < 8; ++L) s.push_back(2.0 * std::pow(0.5, L) + 3.0 * std::pow(1.5, L));
    auto f = fit_power_sums(s, 2);
    ASSERT_TRUE(f.ok);
    ASSERT_EQ(f.roots.size(), 2u);
    std::vector<std::pair<double, int>> got;
    for (std::size_t k = 0; k < 2; ++k) got.emplace_back(f.roots[k].real(), f.mult[k]);
    std::sort(got.begin(), got.end());
    EXPECT_NEAR(got[0].first, 0.5, 1e-9);
    EXPECT_EQ(got[0].second, 2);
    EXPECT_NEAR(got[1].first, 1.5, 1e-9);
    EXPECT_EQ(got[1].second, 3);
}

TEST(Algebra, ToricIsZ2) {
    auto v = vertical_cf(ex::toric());
    auto a = fit_algebra(v);
    ASSERT_TRUE(a.closed);
    EXPECT_TRUE(a.chi_positive);
    EXPECT_TRUE(a.L_independent);
    EXPECT_TRUE(a.integer_coefficients);
    EXPECT_LT(a.associativity_residual, 1e-10);
    EXPECT_LT(a.prediction_residual, 1e-10);
    EXPECT_EQ(a.L.front(), 1);
    EXPECT_EQ(a.L.back(), 6);
    EXPECT_LT(a.fusion_chi_residual, 1e-9);
    const int p = label_of(v, 1.0), m = label_of(v, -1.0);
    // group law of Z2: p is the unit, m * m = p
    for (int li = 0; li < int(a.L.size()); ++li) {
        EXPECT_NEAR(std::abs(a.coef(li, p, p, p) - 1.0), 0, 1e-10);
        EXPECT_NEAR(std::abs(a.coef(li, p, m, m) - 1.0), 0, 1e-10);
        EXPECT_NEAR(std::abs(a.coef(li, m, m, p) - 1.0), 0, 1e-10);
        EXPECT_NEAR(std::abs(a.coef(li, m, m, m)), 0, 1e-10);
        EXPECT_NEAR(std::abs(a.coef(li, p, p, m)), 0, 1e-10);
    }
    EXPECT_TRUE(a.idempotent_ok);
    EXPECT_NEAR(a.idempotent_factor, 0.5, 1e-10);
}

TEST(Algebra, FusionIsometryToric) {
    auto v = vertical_cf(ex::toric());
    const int m = label_of(v, -1.0), p = label_of(v, 1.0);
    auto f = fusion_isometry(v, m, m);
    ASSERT_EQ(f.blocks.size(), 1u);
    EXPECT_EQ(f.blocks[0].gamma, p);
    EXPECT_NEAR(std::abs(f.blocks[0].weight - 1.0), 0, 1e-10);
    EXPECT_LT(f.residual, 1e-10);
}

TEST(RfpMpdo, Verdicts) {
    auto t = is_rfp_mpdo(ex::toric());
    EXPECT_TRUE(t.rfp) << t.reason;
    auto mm = is_rfp_mpdo(ex::max_mixed(3));
    EXPECT_TRUE(mm.rfp) << mm.reason;
    // the AKLT boundary operator vanishes at L = 1, so the window reaches six sites
    CapGuard cap(20);
    auto ak = is_rfp_mpdo(ex::pure_to_mpdo(ex::aklt()));
    EXPECT_FALSE(ak.rfp);
    EXPECT_EQ(ak.reason, "chi not positive");
    auto gh = is_rfp_mpdo(ex::pure_to_mpdo(ex::ghz()));
    EXPECT_TRUE(gh.rfp) << gh.reason;
}

TEST(RfpMpdo, AkltCoefficientSequence) {
    CapGuard cap(20);
    auto v = vertical_cf(ex::pure_to_mpdo(ex::aklt()));
    ASSERT_EQ(v.labels(), 1);
    auto a = fit_algebra(v, 4);
    ASSERT_TRUE(a.closed);
    for (std::size_t li = 0; li < a.L.size(); ++li) {
        const int L = a.L[li];
        EXPECT_NEAR(std::abs(a.coef(int(li), 0, 0, 0) - (std::pow(3.0, L) + 3.0 * std::pow(-1.0, L))), 0, 1e-9);
    }
    const auto& f = a.chi[0];
    ASSERT_EQ(f.roots.size(), 2u);
    // rho^2 = tr(E^L) rho with transfer spectrum {3, -1, -1, -1}
    const std::size_t k = f.roots[0].real() < 0 ? 0 : 1;
    EXPECT_NEAR(f.roots[k].real(), -1.0, 1e-9);
    EXPECT_EQ(f.mult[k], 3);
    EXPECT_NEAR(f.roots[1 - k].real(), 3.0, 1e-9);
    EXPECT_EQ(f.mult[1 - k], 1);
}

TEST(RfpMpdo, UnequalWeightsBreakIdempotence) {
    // rho = 1 + 2^{-N} Z^{(x)N}: same Z2 algebra, but the weights do not reproduce under fusion
    MpdoTensor W(2, 2);
    W.at(0, 0) << 1, 0, 0, 0.5;
    W.at(1, 1) << 1, 0, 0, -0.5;
    auto v = is_rfp_mpdo(W);
    EXPECT_TRUE(v.vcf.positive);
    EXPECT_TRUE(v.algebra.closed);
    EXPECT_FALSE(v.rfp);
    EXPECT_EQ(v.reason, "idempotent condition fails");
}

TEST(ProjectorGibbs, ToricIsTwiceParityProjector) {
    for (int N = 3; N <= 6; ++N) {
        auto pg = projector_gibbs_decomposition(ex::toric(), N);
        ASSERT_TRUE(pg.verified);
        Mat P = 0.5 * (Mat::Identity(1 << N, 1 << N) + z_string(N));
        bool found = false;
        for (std::size_t k = 0; k < pg.P.size(); ++k)
            if ((pg.P[k] - P).norm() < 1e-9) {
                found = true;
                EXPECT_NEAR(pg.lambda[k], 2.0, 1e-9);
            }
        EXPECT_TRUE(found) << "N = " << N;
        EXPECT_LT(pg.H.norm(), 1e-12);
    }
}

TEST(ProjectorGibbs, RejectsNonRfp) {
    CapGuard cap(20);
    EXPECT_THROW(projector_gibbs_decomposition(ex::pure_to_mpdo(ex::aklt()), 3), PreconditionError);
}

TEST(GaugeCheck, PureExamples) {
    auto g = gauge_rfp_spectral_check(ex::ghz());
    EXPECT_TRUE(g.rfp);
    EXPECT_TRUE(g.agrees_with_pure);
    auto a = gauge_rfp_spectral_check(ex::aklt());
    EXPECT_FALSE(a.rfp);
    EXPECT_TRUE(a.agrees_with_pure);
    auto e = gauge_rfp_spectral_check(ex::zcl_not_rfp());
    EXPECT_FALSE(e.rfp);
    EXPECT_TRUE(e.agrees_with_pure);
}

TEST(Fibonacci, RankSequence) {
    const std::vector<long long> want{3, 7, 18, 47};
    std::vector<long long> got;
    for (int N = 1; N <= 4; ++N) {
        auto r = fibonacci_rank(N);
        EXPECT_EQ(r.closed_form, want[std::size_t(N - 1)]);
        EXPECT_EQ(r.brute_force, r.closed_form);
        got.push_back(r.closed_form);
    }
    for (int N = 2; N < 12; ++N)
        EXPECT_EQ(fibonacci_rank(N + 1).closed_form, 3 * fibonacci_rank(N).closed_form - fibonacci_rank(N - 1).closed_form);
    EXPECT_TRUE(geometric_rank_fits(got).empty());
    EXPECT_EQ(geometric_rank_fits({2, 4, 8, 16}).size(), 1u);
}

TEST(Fibonacci, VacuumIsOneBlock) {
    auto v = vertical_cf(fibonacci_mpdo());
    EXPECT_EQ(v.labels(), 1);
    EXPECT_TRUE(v.positive);
}
