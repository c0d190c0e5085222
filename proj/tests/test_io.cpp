#include <tnfp/io.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <sys/wait.h>

using namespace tnfp;
namespace ex = tnfp::examples;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult cli(const std::string& args) {
    CliResult r;
    std::string cmd = std::string(TNFP_CLI) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string ghz_text(int entries) {
    std::string s = "tnfp-tensor 1\nkind mpv\nd 2\nD 2\nentries " + std::to_string(entries) + "\n";
    const char* vals[] = {"1 0", "0 0", "0 0", "0 0", "0 0", "0 0", "0 0", "1 0"};
    for (int k = 0; k < entries && k < 8; ++k) s += std::string(vals[k]) + "\n";
    return s;
}

} // namespace

TEST(TensorFile, ParsesGhz) {
    auto f = parse_tensor_text(ghz_text(8));
    auto A = f.mpv();
    EXPECT_LT((A[0] - ex::ghz()[0]).norm() + (A[1] - ex::ghz()[1]).norm(), 1e-15);
}

TEST(TensorFile, ToricEntryOrder) {
    auto M = example("toric-boundary").mpdo();
    // ket, bra, left, right
    EXPECT_EQ(M.at(0, 0)(0, 0), cd(1));
    EXPECT_EQ(M.at(0, 0)(1, 1), cd(1));
    EXPECT_EQ(M.at(1, 1)(0, 0), cd(1));
    EXPECT_EQ(M.at(1, 1)(1, 1), cd(-1));
    auto f = example("toric-boundary");
    int minus = 0;
    for (cd z : f.entries) minus += z == cd(-1);
    EXPECT_EQ(f.entries.size(), 16u);
    EXPECT_EQ(minus, 1);
    EXPECT_EQ(f.entries[15], cd(-1));
}

TEST(TensorFile, RoundTripBitExact) {
    std::mt19937_64 rng(5);
    MpdoTensor M(3, 2);
    for (auto& m : M.M) m = la::random_gaussian(2, 2, rng) * 1e-7;
    M.at(0, 1)(0, 0) = cd(1.0 / 3.0, -std::numeric_limits<double>::denorm_min());
    M.at(2, 2)(1, 0) = cd(std::numeric_limits<double>::max(), -0.0);
    auto f = TensorFile::from(M, "random", "seeded");
    auto g = parse_tensor_text(serialize(f));
    ASSERT_EQ(g.entries.size(), f.entries.size());
    for (std::size_t k = 0; k < f.entries.size(); ++k) {
        EXPECT_EQ(std::memcmp(&f.entries[k], &g.entries[k], sizeof(cd)), 0) << k;
    }
    EXPECT_EQ(g.name, "random");
    EXPECT_EQ(g.provenance, "seeded");
    EXPECT_EQ(serialize(g), serialize(f));
}

TEST(TensorFile, EntryCountMismatch) {
    try {
        parse_tensor_text(ghz_text(7));
        FAIL() << "no error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 5);
        EXPECT_NE(std::string(e.what()).find("expected 8"), std::string::npos);
    }
    try {
        parse_tensor_text(ghz_text(8) + "0 0\n");
        FAIL() << "no error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 14);
    }
}

TEST(TensorFile, MalformedReportsPosition) {
    std::string s = ghz_text(8);
    s.replace(s.find("1 0"), 3, "1 x");
    try {
        parse_tensor_text(s);
        FAIL() << "no error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 6);
        EXPECT_EQ(e.column, 3);
    }
    std::string bad = ghz_text(8);
    bad.replace(bad.find("kind mpv"), 8, "kind mps");
    try {
        parse_tensor_text(bad);
        FAIL() << "no error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2);
        EXPECT_EQ(e.column, 6);
    }
}

TEST(TensorFile, RejectsNonFinite) {
    std::string s = ghz_text(8);
    s.replace(s.find("1 0"), 3, "nan 0");
    EXPECT_THROW(parse_tensor_text(s), ParseError);
    s = ghz_text(8);
    s.replace(s.find("1 0"), 3, "1e400 0");
    EXPECT_THROW(parse_tensor_text(s), ParseError);
}

TEST(TensorFile, KindMismatch) {
    EXPECT_THROW(example("ghz").mpdo(), PreconditionError);
    EXPECT_THROW(example("toric-boundary").mpv(), PreconditionError);
}

TEST(Examples, Library) {
    for (const auto& n : example_names()) {
        auto f = example(n);
        EXPECT_EQ(f.entries.size(), f.expected_entries()) << n;
        EXPECT_FALSE(f.provenance.empty()) << n;
    }
    EXPECT_THROW(example("nope"), PreconditionError);
    EXPECT_THROW(example("zcl-no-sal", 1.5), PreconditionError);
    auto g = example("ghz").mpv();
    EXPECT_EQ(g[0](0, 0), cd(1));
    EXPECT_EQ(g[0](1, 1), cd(0));
    EXPECT_EQ(g[1](1, 1), cd(1));
    Mat rho = mpdo_dense(example("toric-boundary").mpdo(), 3).data;
    Mat Z(2, 2);
    Z << 1, 0, 0, -1;
    EXPECT_LT((rho - Mat::Identity(8, 8) - la::kron(la::kron(Z, Z), Z)).norm(), 1e-14);
}

TEST(Examples, CitedVerdicts) {
    EXPECT_TRUE(is_rfp_pure(example("ghz").mpv()).rfp);
    EXPECT_FALSE(is_rfp_pure(example("aklt").mpv()).rfp);
    EXPECT_FALSE(is_rfp_pure(example("zcl-example-3-6").mpv()).rfp);
    EXPECT_TRUE(is_rfp_pure(example("bell-chain").mpv()).rfp);
    EXPECT_FALSE(is_normal(example("xx-periodic").mpv()).is_normal());
    EXPECT_TRUE(is_zcl_mixed(example("toric-boundary").mpdo()).zcl);
    EXPECT_TRUE(is_zcl_mixed(example("zcl-no-sal").mpdo()).zcl);
    EXPECT_FALSE(mutual_info_profile(example("zcl-no-sal").mpdo(), 4).sal);
    EXPECT_FALSE(is_zcl_mixed(example("sal-no-zcl").mpdo()).zcl);
    EXPECT_EQ(vertical_cf(example("fibonacci-vacuum").mpdo()).labels(), 1);
}

TEST(Cli, MutualInfoExample) {
    auto r = cli("mutual-info examples/zcl-no-sal --p 0.25 --n 4 --json");
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["schema"], 1);
    EXPECT_NEAR(j["results"]["I"][0].get<double>(), 3.0963, 5e-5);
    EXPECT_NEAR(j["results"]["I"][1].get<double>(), 3.1250, 5e-5);
    EXPECT_FALSE(j["verdicts"]["sal"]["value"].get<bool>());
    EXPECT_TRUE(j["verdicts"]["sal"].contains("tol"));
}

TEST(Cli, RfpPureGhz) {
    auto r = cli("rfp-pure examples/ghz --json");
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["verdicts"]["rfp"]["value"].get<bool>());
    EXPECT_LT(j["verdicts"]["rfp"]["residual"].get<double>(), 1e-12);
}

TEST(Cli, ToricAlgebra) {
    auto r = cli("algebra examples/toric-boundary --lmax 5 --json");
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["results"]["L_independent"].get<bool>());
    EXPECT_EQ(j["results"]["labels"], 2);
    for (const auto& row : j["results"]["table"]) {
        EXPECT_EQ(row["coefficients"].size(), 4u);
        for (const auto& c : row["coefficients"]) EXPECT_NEAR(c["value"][0].get<double>(), 1.0, 1e-9);
    }
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(cli("bogus examples/ghz").code, 1);
    EXPECT_EQ(cli("rfp-pure /nonexistent/file").code, 1);
    EXPECT_EQ(cli("rfp-pure examples/aklt").code, 0);  // negative verdicts still exit 0
    EXPECT_EQ(cli("rfp-pure --n").code, 1);
    EXPECT_EQ(cli("example zcl-no-sal --p 2").code, 1);
    // gauged toric cannot be purified, and prfp requires a purification
    std::mt19937_64 rng(3);
    MpdoTensor M = ex::toric();
    Mat X = la::random_gaussian(2, 2, rng) + 2.0 * Mat::Identity(2, 2);
    for (auto& m : M.M) m = X * m * X.inverse();
    std::string path = ::testing::TempDir() + "gauged_toric.txt";
    {
        std::ofstream o(path);
        o << serialize(TensorFile::from(M));
    }
    EXPECT_EQ(cli("prfp " + path).code, 1);
    std::string broken = ::testing::TempDir() + "broken.txt";
    {
        std::ofstream o(broken);
        o << ghz_text(7);
    }
    EXPECT_EQ(cli("canon " + broken).code, 1);
}

TEST(Cli, NumericalFailureExitsTwo) {
    // channels on a tensor without the required structure is a precondition failure, not a numerical one
    EXPECT_EQ(cli("channels examples/sal-no-zcl").code, 1);
    std::string path = ::testing::TempDir() + "zero.txt";
    {
        std::ofstream o(path);
        o << serialize(TensorFile::from(MpvTensor(2, 1)));
    }
    EXPECT_EQ(cli("entropy " + path + " --n 4").code, 2);
}

TEST(Cli, DeterministicJson) {
    auto a = cli("gsnnch examples/max-mixed --json --seed 11");
    auto b = cli("gsnnch examples/max-mixed --json --seed 11");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    auto c = cli("example ghz");
    std::string path = ::testing::TempDir() + "ghz.txt";
    {
        std::ofstream o(path);
        o << c.out;
    }
    EXPECT_EQ(cli("rfp-pure " + path + " --json").out, cli("rfp-pure " + path + " --json").out);
    EXPECT_EQ(parse_tensor(path).entries, example("ghz").entries);
}
