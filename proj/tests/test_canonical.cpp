#include "fixtures.hpp"

#include <tnfp/canonical.hpp>

#include <gtest/gtest.h>

using namespace tnfp;

namespace {

MpvTensor xx_periodic() {
    MpvTensor A(2, 2);
    A[0](0, 1) = 1;
    A[1](1, 0) = 1;
    return A;
}

MpvTensor w_state() {
    MpvTensor A(2, 2);
    A[0] = Mat::Identity(2, 2);
    A[1](0, 1) = 1;
    return A;
}

// Normal tensors used as building blocks.
MpvTensor random_normal(int d, int D, std::mt19937_64& rng) {
    for (;;) {
        auto A = fx::random_tensor(d, D, rng);
        if (is_normal(A).is_normal()) return normalize_radius(A);
    }
}

// sum_k mu_k X_k A_k X_k^{-1}, blocks along the diagonal.
MpvTensor direct_sum(const std::vector<MpvTensor>& parts, const std::vector<cd>& mu, std::mt19937_64& rng) {
    MpvTensor out;
    std::vector<Mat> gauges;
    for (const auto& p : parts) gauges.push_back(la::random_gaussian(p.D(), p.D(), rng));
    for (int i = 0; i < parts[0].d(); ++i) {
        std::vector<Mat> m;
        for (std::size_t k = 0; k < parts.size(); ++k)
            m.push_back(mu[k] * gauges[k] * parts[k][i] * gauges[k].inverse());
        out.A.push_back(la::direct_sum(m));
    }
    return out;
}

double dense_gap(const MpvTensor& a, const MpvTensor& b, int N) {
    auto va = mpv_dense(a, N).data, vb = mpv_dense(b, N).data;
    return (va - vb).norm() / std::max(1.0, va.norm());
}

} // namespace

TEST(Normality, AkltIsNormal) {
    auto c = is_normal(fx::aklt());
    EXPECT_TRUE(c.is_normal());
    ASSERT_EQ(c.peripheral.size(), 1u);
    EXPECT_NEAR(c.subleading, 1.0 / 3.0, 1e-12);
}

TEST(Normality, GhzWitness) {
    auto c = is_normal(fx::ghz());
    ASSERT_EQ(c.kind, NormalityCertificate::Kind::invariant_subspace);
    Mat P = Mat::Zero(2, 2);
    P(0, 0) = 1;
    EXPECT_LT((c.projector - P).norm(), 1e-10);
}

TEST(Normality, PeriodicTensor) {
    auto c = is_normal(xx_periodic());
    ASSERT_EQ(c.kind, NormalityCertificate::Kind::peripheral_spectrum);
    ASSERT_EQ(c.peripheral.size(), 2u);
    std::vector<double> re{c.peripheral[0].real(), c.peripheral[1].real()};
    std::sort(re.begin(), re.end());
    EXPECT_NEAR(re[0], -1, 1e-12);
    EXPECT_NEAR(re[1], 1, 1e-12);
}

TEST(Normality, WitnessIsInvariant) {
    auto A = fx::zcl_not_rfp();
    auto c = is_normal(A);
    ASSERT_EQ(c.kind, NormalityCertificate::Kind::invariant_subspace);
    for (const auto& a : A.A) EXPECT_LT((a * c.projector - c.projector * a * c.projector).norm(), 1e-10);
}

TEST(Injective, Aklt) {
    auto r = is_injective(fx::aklt());
    EXPECT_TRUE(r.injective);
    EXPECT_EQ(r.L, 2);
}

TEST(Injective, GhzNever) {
    auto r = is_injective(fx::ghz());
    EXPECT_FALSE(r.injective);
    EXPECT_EQ(r.rank, 2);
}

TEST(Injective, BondOne) {
    MpvTensor A(3, 1);
    A[2](0, 0) = 0.3;
    auto r = is_injective(A);
    EXPECT_TRUE(r.injective);
    EXPECT_EQ(r.L, 1);
}

TEST(Injective, InverseTensorExists) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        auto A = fx::random_tensor(2, 2, rng);
        auto r = is_injective(A);
        ASSERT_TRUE(r.injective);
        auto B = block(A, r.L);
        Mat S = B.span_matrix();  // rows vec(B^i)
        Mat Sinv = S.completeOrthogonalDecomposition().pseudoInverse();
        EXPECT_LT((Sinv * S - Mat::Identity(4, 4)).norm(), 1e-8);
    }
}

TEST(Canonical, Ghz) {
    auto cf = canonical_form(fx::ghz());
    EXPECT_EQ(cf.g(), 2);
    ASSERT_EQ(cf.blocks.size(), 2u);
    for (const auto& b : cf.blocks) EXPECT_NEAR(std::abs(b.mu - 1.0), 0, 1e-12);
    EXPECT_NEAR(std::abs(cf.bnt[0][0](0, 0)) + std::abs(cf.bnt[1][0](0, 0)), 1, 1e-12);
    EXPECT_LT(dense_gap(cf.tensor(), fx::ghz(), 5), 1e-12);
}

TEST(Canonical, UpperTriangularExample) {
    auto cf = canonical_form(fx::zcl_not_rfp());
    ASSERT_EQ(cf.g(), 2);
    for (const auto& b : cf.blocks) EXPECT_NEAR(std::abs(b.mu - 1.0), 0, 1e-12);
    std::vector<std::pair<double, double>> got;
    for (const auto& t : cf.bnt) got.push_back({std::abs(t[0](0, 0)), std::abs(t[1](0, 0))});
    std::sort(got.begin(), got.end());
    EXPECT_NEAR(got[0].first, 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(got[0].second, 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(got[1].first, 1, 1e-12);
    EXPECT_NEAR(got[1].second, 0, 1e-12);
    for (int N = 1; N <= 6; ++N) EXPECT_LT(dense_gap(cf.tensor(), fx::zcl_not_rfp(), N), 1e-9);
}

TEST(Canonical, PeriodicIsBlocked) {
    auto cf = canonical_form(xx_periodic());
    EXPECT_EQ(cf.period, 2);
    EXPECT_EQ(cf.g(), 2);
    for (int N = 1; N <= 4; ++N) EXPECT_LT(dense_gap(cf.tensor(), block(xx_periodic(), 2), N), 1e-10);
}

TEST(Canonical, WStateDropsOffDiagonal) {
    auto cf = canonical_form(w_state());
    EXPECT_EQ(cf.g(), 1);
    EXPECT_EQ(cf.blocks.size(), 2u);
}

TEST(Canonical, ZeroBlocksDropped) {
    MpvTensor A(2, 2);
    A[0](0, 0) = 1;
    A[1](0, 0) = 0.5;
    A[1](0, 1) = 1;  // nilpotent lower block
    auto cf = canonical_form(A);
    EXPECT_EQ(cf.blocks.size(), 1u);
}

TEST(Canonical, RoundTripRandomSums) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> dd(2, 4), DD(1, 2), nb(1, 3);
    std::uniform_real_distribution<double> u(0.3, 1.0), ph(0, 2 * M_PI);
    int failures = 0;
    for (int trial = 0; trial < 200; ++trial) {
        int d = dd(rng), g = nb(rng);
        std::vector<MpvTensor> lib;
        for (int k = 0; k < g; ++k) lib.push_back(random_normal(d, DD(rng), rng));
        std::vector<MpvTensor> parts;
        std::vector<cd> mu;
        int copies = 0;
        for (int k = 0; k < g; ++k) {
            int c = 1 + int(rng() % 2);
            for (int q = 0; q < c; ++q) {
                parts.push_back(lib[std::size_t(k)]);
                mu.push_back(std::polar(u(rng), ph(rng)));
            }
            copies += c;
        }
        mu[0] = 1.0;
        auto A = direct_sum(parts, mu, rng);
        auto cf = canonical_form(A);
        if (cf.g() != g || int(cf.blocks.size()) != copies) ++failures;
        for (int N = 1; N <= 4; ++N)
            if (dense_gap(cf.tensor(), A, N) > 1e-8) ++failures;
        auto rep = fundamental_theorem_check(cf.tensor(), A);
        if (rep.verdict != EquivalenceReport::Verdict::equal) ++failures;
    }
    EXPECT_EQ(failures, 0);
}

TEST(Cfii, GhzUnchanged) {
    auto r = to_cfii(fx::ghz());
    ASSERT_EQ(r.lambda.size(), 2u);
    for (const auto& l : r.lambda) EXPECT_NEAR(l(0), 1, 1e-12);
}

TEST(Cfii, AkltHalfHalf) {
    auto r = to_cfii(fx::aklt());
    ASSERT_EQ(r.lambda.size(), 1u);
    EXPECT_NEAR(r.lambda[0](0), 0.5, 1e-10);
    EXPECT_NEAR(r.lambda[0](1), 0.5, 1e-10);
}

TEST(Cfii, RandomNormalConditions) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        auto A = random_normal(3, 3, rng);
        auto r = to_cfii(A);
        const auto& T = r.bnt[0];
        Mat tp = Mat::Zero(3, 3), fp = Mat::Zero(3, 3);
        Mat L = r.lambda[0].cast<cd>().asDiagonal();
        for (const auto& m : T.A) {
            tp += m.adjoint() * m;
            fp += m * L * m.adjoint();
        }
        EXPECT_LT((tp - Mat::Identity(3, 3)).norm(), 1e-10);
        EXPECT_LT((fp - L).norm(), 1e-10);
        for (int N = 1; N <= 4; ++N) EXPECT_LT(dense_gap(r.tensor, A, N), 1e-9);
    }
}

TEST(Gauge, RecoversPhaseAndMatrix) {
    std::mt19937_64 rng(31);
    int fails = 0;
    for (int t = 0; t < 50; ++t) {
        auto A = random_normal(3, 3, rng);
        Mat X0 = la::random_gaussian(3, 3, rng);
        auto B = A.gauged(X0).scaled(std::polar(1.0, M_PI / 3));
        auto w = find_gauge(A, B);
        if (!w.equivalent || la::phase_distance(w.phi, M_PI / 3) > 1e-8) ++fails;
        Mat ratio = la::normalize_gauge(X0) - w.X;
        if (ratio.norm() > 1e-7) ++fails;
    }
    EXPECT_EQ(fails, 0);
}

TEST(Gauge, GhzBlocksDistinct) {
    MpvTensor a(2, 1), b(2, 1);
    a[0](0, 0) = 1;
    b[1](0, 0) = 1;
    auto w = find_gauge(a, b);
    EXPECT_FALSE(w.equivalent);
    EXPECT_NEAR(w.radius, 0, 1e-14);
}

TEST(Gauge, AkltSelf) {
    auto w = find_gauge(fx::aklt(), fx::aklt());
    EXPECT_TRUE(w.equivalent);
    EXPECT_NEAR(la::phase_distance(w.phi, 0), 0, 1e-10);
    EXPECT_LT((w.X - Mat::Identity(2, 2)).norm(), 1e-8);
}

TEST(Gauge, RejectsNonNormal) {
    EXPECT_THROW(find_gauge(fx::ghz(), fx::ghz()), PreconditionError);
}

TEST(Gauge, DenseStatesPickUpPhase) {
    std::mt19937_64 rng(41);
    auto A = random_normal(2, 2, rng);
    auto B = A.gauged(la::random_gaussian(2, 2, rng)).scaled(std::polar(1.0, 0.7));
    auto w = find_gauge(A, B);
    ASSERT_TRUE(w.equivalent);
    for (int N = 2; N <= 6; ++N) {
        Vec va = mpv_dense(A, N).data, vb = mpv_dense(B, N).data;
        EXPECT_LT((vb - std::polar(1.0, w.phi * N) * va).norm(), 1e-9 * va.norm());
    }
}

TEST(Equivalence, GaugeConjugate) {
    std::mt19937_64 rng(12);
    auto A = random_normal(2, 3, rng);
    auto B = A.gauged(la::random_gaussian(3, 3, rng));
    auto r = fundamental_theorem_check(A, B);
    EXPECT_EQ(r.verdict, EquivalenceReport::Verdict::equal);
    ASSERT_TRUE(r.global_gauge.has_value());
    auto C = A.gauged(*r.global_gauge);
    for (int i = 0; i < 2; ++i) EXPECT_LT((C[i] - B[i]).norm(), 1e-8);
}

TEST(Equivalence, BlockOrderIrrelevant) {
    MpvTensor swapped(2, 2);
    swapped[0](1, 1) = 1;
    swapped[1](0, 0) = 1;
    EXPECT_EQ(fundamental_theorem_check(fx::ghz(), swapped).verdict, EquivalenceReport::Verdict::equal);
}

TEST(Equivalence, GhzVersusW) {
    EXPECT_EQ(fundamental_theorem_check(fx::ghz(), w_state()).verdict, EquivalenceReport::Verdict::inequivalent);
}

TEST(Equivalence, Proportional) {
    auto A = fx::aklt();
    auto r = fundamental_theorem_check(A, A.scaled(std::polar(1.0, 0.4)));
    EXPECT_EQ(r.verdict, EquivalenceReport::Verdict::proportional);
    EXPECT_NEAR(std::arg(r.theta), 0.4, 1e-8);
}

TEST(BlockInjective, Ghz) {
    auto r = to_block_injective(fx::ghz());
    EXPECT_EQ(r.L, 1);
}

TEST(BlockInjective, Aklt) {
    EXPECT_EQ(to_block_injective(fx::aklt()).L, 2);
}

TEST(BlockInjective, UpperTriangularExample) {
    // the two one-dimensional blocks are already separated by single matrices
    auto r = to_block_injective(fx::zcl_not_rfp());
    EXPECT_EQ(r.target, 2);
    EXPECT_EQ(r.L, 1);
}

TEST(PowerSums, Examples) {
    const cd I(0, 1);
    EXPECT_TRUE(match_power_sums({1.0, I, -I}, {-I, 1.0, I}));
    EXPECT_FALSE(match_power_sums({1.0, 1.0}, {1.0}));
    std::vector<cd> roots, pad(5, 0.0);
    for (int k = 0; k < 5; ++k) roots.push_back(std::polar(1.0, 2 * M_PI * k / 5));
    EXPECT_FALSE(match_power_sums(roots, pad, 5));
}
