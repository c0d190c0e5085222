#include <tnfp/io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

using namespace tnfp;
using json = nlohmann::ordered_json;

namespace {

struct Flags {
    std::string command;
    std::vector<std::string> inputs;
    int n = 0;
    int lmax = 0;
    double tol = 0;
    double p = 0.25;
    bool json = false;
    bool timings = false;
    std::uint64_t seed = 7;
};

struct UsageError : PreconditionError {
    using PreconditionError::PreconditionError;
};

json cplx(cd z) { return json::array({z.real(), z.imag()}); }

json cvec(const std::vector<cd>& v) {
    json a = json::array();
    for (cd z : v) a.push_back(cplx(z));
    return a;
}

json rmat(const RMat& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        a.push_back(row);
    }
    return a;
}

json verdict(bool value, double tol, double residual) {
    return json{{"value", value}, {"tol", tol}, {"residual", residual}};
}

TensorFile load(const std::string& arg, const Flags& f) {
    if (std::filesystem::exists(arg)) return parse_tensor(arg);
    std::string name = arg;
    if (name.rfind("examples/", 0) == 0) name = name.substr(9);
    for (const auto& e : example_names())
        if (e == name) return example(name, f.p);
    throw UsageError("cannot read '" + arg + "' and it names no built-in example");
}

MpvTensor as_mpv(const TensorFile& t) { return t.kind == "mpv" ? t.mpv() : t.mpdo().mpv_view(); }
MpdoTensor as_mpdo(const TensorFile& t) { return t.kind == "mpdo" ? t.mpdo() : examples::pure_to_mpdo(t.mpv()); }

MpvTensor pure_only(const TensorFile& t, const std::string& cmd) {
    if (t.kind != "mpv") throw UsageError(cmd + " needs an mpv tensor");
    return t.mpv();
}

int want_inputs(const Flags& f, std::size_t k) {
    if (f.inputs.size() != k)
        throw UsageError(f.command + " expects " + std::to_string(k) + " input" + (k == 1 ? "" : "s"));
    return 0;
}

int arg_or(int v, int dflt) { return v > 0 ? v : dflt; }

json canonical_json(const CanonicalDecomposition& cf) {
    json blocks = json::array();
    for (const auto& b : cf.blocks) blocks.push_back({{"bnt", b.bnt}, {"D", cf.bnt[std::size_t(b.bnt)].D()}, {"mu", cplx(b.mu)}});
    json dims = json::array();
    for (const auto& a : cf.bnt) dims.push_back(a.D());
    return {{"period", cf.period}, {"scale", cf.scale}, {"bnt_count", cf.g()}, {"bnt_D", dims}, {"blocks", blocks}};
}

json tensor_json(const TensorFile& t) {
    return {{"kind", t.kind}, {"d", t.d}, {"D", t.D}, {"name", t.name}, {"provenance", t.provenance}, {"entries", cvec(t.entries)}};
}

// ------------------------------------------------------------- commands

void run_command(const Flags& f, json& rep) {
    const std::string& c = f.command;
    json& in = rep["inputs"];
    json& v = rep["verdicts"];
    json& r = rep["results"];
    auto first = [&]() {
        want_inputs(f, 1);
        TensorFile t = load(f.inputs[0], f);
        in["tensor"] = t.name.empty() ? f.inputs[0] : t.name;
        in["kind"] = t.kind;
        in["d"] = t.d;
        in["D"] = t.D;
        return t;
    };

    if (c == "canon") {
        auto cf = canonical_form(as_mpv(first()));
        r = canonical_json(cf);
    } else if (c == "cfii") {
        auto res = to_cfii(as_mpv(first()));
        r = canonical_json(res.cf);
        json lam = json::array();
        for (const auto& l : res.lambda) lam.push_back(std::vector<double>(l.data(), l.data() + l.size()));
        r["lambda"] = lam;
    } else if (c == "bnt") {
        auto cf = canonical_form(as_mpv(first()));
        json list = json::array();
        for (std::size_t j = 0; j < cf.bnt.size(); ++j) {
            auto nc = is_normal(cf.bnt[j]);
            list.push_back({{"index", j}, {"D", cf.bnt[j].D()}, {"normal", nc.is_normal()}, {"subleading", nc.subleading},
                            {"tensor", tensor_json(TensorFile::from(cf.bnt[j]))}});
        }
        r["bnt"] = list;
    } else if (c == "gauge" || c == "equiv") {
        want_inputs(f, 2);
        TensorFile a = load(f.inputs[0], f), b = load(f.inputs[1], f);
        in["a"] = a.name.empty() ? f.inputs[0] : a.name;
        in["b"] = b.name.empty() ? f.inputs[1] : b.name;
        if (c == "gauge") {
            auto w = find_gauge(as_mpv(a), as_mpv(b));
            v["equivalent"] = verdict(w.equivalent, 1e-8, w.residual);
            r = {{"phi", w.phi}, {"scale_ratio", w.scale_ratio}, {"radius", w.radius}};
        } else {
            auto e = fundamental_theorem_check(as_mpv(a), as_mpv(b));
            static const char* names[] = {"equal", "proportional", "inequivalent"};
            r = {{"verdict", names[int(e.verdict)]}, {"g_a", e.g_a}, {"g_b", e.g_b}, {"match", e.match}, {"theta", cplx(e.theta)}};
            if (!e.reason.empty()) r["reason"] = e.reason;
            double worst = 0;
            for (const auto& w : e.witnesses) worst = std::max(worst, w.residual);
            v["equivalent"] = verdict(e.verdict != EquivalenceReport::Verdict::inequivalent, 1e-8, worst);
        }
    } else if (c == "inject") {
        MpvTensor A = as_mpv(first());
        auto ir = is_injective(A);
        r = {{"injective", ir.injective}, {"L", ir.L}, {"rank", ir.rank}};
        auto bi = to_block_injective(A);
        r["block_injective"] = {{"L", bi.L}, {"period", bi.period}, {"rank", bi.rank}, {"target", bi.target}};
    } else if (c == "rfp-pure") {
        auto rv = is_rfp_pure(pure_only(first(), c));
        v["rfp"] = verdict(rv.rfp, 1e-8, rv.residual);
    } else if (c == "flow") {
        auto ft = renormalization_flow(pure_only(first(), c));
        r = {{"converged", ft.converged}, {"steps", ft.steps}, {"residuals", ft.residuals}};
    } else if (c == "parent") {
        auto ph = parent_hamiltonian(pure_only(first(), c), arg_or(f.lmax, 2), arg_or(f.n, 8));
        in["L"] = ph.L;
        in["n"] = arg_or(f.n, 8);
        v["commuting"] = verdict(ph.commuting, 1e-8, ph.commutator);
        r = {{"parent", ph.parent}, {"ground_dim", ph.ground_dim}, {"expected_dim", ph.expected_dim}};
    } else if (c == "entropy") {
        const int N = arg_or(f.n, 6);
        in["n"] = N;
        auto ep = entropy_profile_pure(pure_only(first(), c), N);
        r = {{"S", ep.S}, {"sal", ep.sal}};
    } else if (c == "validate") {
        const int N = arg_or(f.n, 4);
        in["n"] = N;
        std::vector<int> Ns;
        for (int k = 1; k <= N; ++k) Ns.push_back(k);
        auto mv = validate_mpdo(as_mpdo(first()), Ns, config().tol);
        double herm = 0, lo = 0;
        for (double x : mv.hermitian_residual) herm = std::max(herm, x);
        for (double x : mv.min_eigenvalue) lo = std::min(lo, x);
        v["hermitian"] = verdict(mv.hermitian, config().tol, herm);
        v["positive"] = verdict(mv.positive, config().tol, -lo);
        r = {{"N", mv.N}, {"min_eigenvalue", mv.min_eigenvalue}};
    } else if (c == "zcl") {
        auto z = is_zcl_mixed(as_mpdo(first()));
        v["zcl"] = verdict(z.zcl, 1e-8, z.residual);
        r = {{"lambda", cplx(z.lambda)}};
    } else if (c == "purify") {
        auto p = purify(as_mpdo(first()));
        r = {{"success", p.success}, {"method", p.method}, {"ancilla", p.ancilla}, {"bond", p.bond},
             {"min_eigenvalue", p.min_eigenvalue}};
        if (!p.note.empty()) r["note"] = p.note;
    } else if (c == "prfp") {
        auto p = is_prfp(as_mpdo(first()));
        v["prfp"] = verdict(p.prfp, 1e-8, is_rfp_pure(p.purification.tensor).residual);
        v["zcl"] = verdict(p.zcl, 1e-8, is_zcl_mixed(as_mpdo(load(f.inputs[0], f))).residual);
        r = {{"agree", p.agree}, {"method", p.purification.method}, {"ancilla", p.purification.ancilla}};
        if (!p.warning.empty()) r["warning"] = p.warning;
    } else if (c == "mutual-info") {
        const int N = arg_or(f.n, 4);
        in["n"] = N;
        auto mi = mutual_info_profile(as_mpdo(first()), N);
        double spread = 0;
        for (double x : mi.I) spread = std::max(spread, std::abs(x - mi.I.front()));
        v["sal"] = verdict(mi.sal, 1e-9, spread);
        r = {{"S", mi.S}, {"I", mi.I}, {"bound", mi.bound}};
    } else if (c == "simple") {
        auto s = is_simple(as_mpdo(first()));
        r = {{"simple", s.simple}, {"nilpotent", s.nilpotent}};
    } else if (c == "gsnnch" || c == "channels") {
        GsnnchOptions opt;
        opt.N_check = arg_or(f.n, 6);
        opt.seed = f.seed;
        in["n"] = opt.N_check;
        auto g = extract_gsnnch(as_mpdo(first()), opt);
        r = {{"applicable", g.applicable}, {"success", g.success}, {"sal", g.sal}, {"zcl_mixed", g.zcl_mixed},
             {"primitive", g.primitive}, {"rank_one", g.rank_one}, {"marginals_factorize", g.marginals_factorize},
             {"n", g.n}, {"m", g.m}, {"T", rmat(g.T)}, {"scale", g.scale}};
        if (!g.reason.empty()) r["reason"] = g.reason;
        if (g.applicable) {
            v["commuting"] = verdict(g.commutator < 1e-8, 1e-8, g.commutator);
            v["reassembly"] = verdict(g.reassembly_residual < 1e-8, 1e-8, g.reassembly_residual);
        }
        if (c == "channels") {
            auto ts = build_ts_channels(g);
            v["T_identity"] = verdict(ts.worst_T < 1e-9, 1e-9, ts.worst_T);
            v["S_identity"] = verdict(ts.worst_S < 1e-9, 1e-9, ts.worst_S);
            v["T_trace_preserving"] = verdict(ts.T.tp_residual < 1e-9, 1e-9, ts.T.tp_residual);
            v["S_trace_preserving"] = verdict(ts.S.tp_residual < 1e-9, 1e-9, ts.S.tp_residual);
            v["T_completely_positive"] = verdict(ts.T.min_choi_eigenvalue > -1e-9, 1e-9, -std::min(0.0, ts.T.min_choi_eigenvalue));
            v["S_completely_positive"] = verdict(ts.S.min_choi_eigenvalue > -1e-9, 1e-9, -std::min(0.0, ts.S.min_choi_eigenvalue));
            r["composed_T"] = ts.worst_T2;
            r["composed_S"] = ts.worst_S2;
            r["verified"] = ts.verified;
        }
    } else if (c == "vcf") {
        auto vc = vertical_cf(as_mpdo(first()));
        json labels = json::array();
        for (int a = 0; a < vc.labels(); ++a)
            labels.push_back({{"D", vc.M[std::size_t(a)].D()}, {"m", vc.m[std::size_t(a)]}, {"mu", cvec(vc.mu[std::size_t(a)])}});
        v["reassembly"] = verdict(vc.reassembly_residual < 1e-8, 1e-8, vc.reassembly_residual);
        r = {{"labels", labels}, {"positive", vc.positive}};
    } else if (c == "algebra" || c == "fusion") {
        auto vc = vertical_cf(as_mpdo(first()));
        const int K = arg_or(f.lmax, 5);
        in["lmax"] = K;
        auto a = fit_algebra(vc, K);
        const int G = a.labels;
        if (c == "algebra") {
            json table = json::array();
            for (std::size_t li = 0; li < a.L.size(); ++li) {
                json entries = json::array();
                for (int x = 0; x < G; ++x)
                    for (int y = 0; y < G; ++y)
                        for (int z = 0; z < G; ++z) {
                            cd q = a.coef(int(li), x, y, z);
                            if (std::abs(q) > 1e-12) entries.push_back({{"a", x}, {"b", y}, {"c", z}, {"value", cplx(q)}});
                        }
                table.push_back({{"L", a.L[li]}, {"coefficients", entries}});
            }
            v["closed"] = verdict(a.closed, 1e-8, a.closure_residual);
            v["chi_prediction"] = verdict(a.prediction_residual < 1e-7, 1e-7, a.prediction_residual);
            v["associative"] = verdict(a.associativity_residual < 1e-8, 1e-8, a.associativity_residual);
            v["idempotent"] = verdict(a.idempotent_ok, 1e-8, a.idempotent_residual);
            r = {{"labels", G}, {"L0", a.L0}, {"L_independent", a.L_independent}, {"integer_coefficients", a.integer_coefficients},
                 {"chi_positive", a.chi_positive}, {"idempotent_factor", a.idempotent_factor}, {"table", table}};
            if (!a.failure.empty()) r["failure"] = a.failure;
        } else {
            json list = json::array();
            double worst = 0;
            for (const auto& fr : a.fusion) {
                json blocks = json::array();
                for (const auto& b : fr.blocks) blocks.push_back({{"gamma", b.gamma}, {"weight", cplx(b.weight)}});
                list.push_back({{"alpha", fr.alpha}, {"beta", fr.beta}, {"blocks", blocks}, {"residual", fr.residual}});
                worst = std::max(worst, fr.residual);
            }
            v["reassembly"] = verdict(worst < 1e-8, 1e-8, worst);
            v["agrees_with_fit"] = verdict(a.fusion_chi_residual < 1e-7, 1e-7, a.fusion_chi_residual);
            r = {{"fusion", list}};
        }
    } else if (c == "rfp-mpdo") {
        auto rv = is_rfp_mpdo(as_mpdo(first()));
        r = {{"rfp", rv.rfp}, {"zcl", rv.zcl}, {"labels", rv.vcf.labels()}};
        if (!rv.reason.empty()) r["reason"] = rv.reason;
        if (rv.algebra.labels > 0) {
            r["L_independent"] = rv.algebra.L_independent;
            r["integer_coefficients"] = rv.algebra.integer_coefficients;
            v["chi_prediction"] = verdict(rv.algebra.prediction_residual < 1e-7, 1e-7, rv.algebra.prediction_residual);
        }
    } else if (c == "decompose") {
        const int N = arg_or(f.n, 4);
        in["n"] = N;
        auto pg = projector_gibbs_decomposition(as_mpdo(first()), N, f.seed);
        json ranks = json::array();
        for (const auto& P : pg.P) ranks.push_back(std::lround(P.trace().real()));
        v["decomposition"] = verdict(pg.verified, 1e-9, pg.residual);
        v["idempotent"] = verdict(pg.idempotent_residual < 1e-9, 1e-9, pg.idempotent_residual);
        v["commuting"] = verdict(pg.commutator < 1e-9, 1e-9, pg.commutator);
        r = {{"lambda", pg.lambda}, {"ranks", ranks}, {"H_norm", pg.H.norm()}};
    } else if (c == "fib-rank") {
        if (!f.inputs.empty()) throw UsageError("fib-rank takes no input");
        const int N = arg_or(f.n, 4);
        in["n"] = N;
        std::vector<long long> closed;
        json rows = json::array();
        bool agree = true;
        for (int k = 1; k <= N; ++k) {
            auto fr = fibonacci_rank(k, 3);
            closed.push_back(fr.closed_form);
            json row{{"N", k}, {"closed_form", fr.closed_form}};
            if (fr.brute_force >= 0) {
                row["brute_force"] = fr.brute_force;
                agree = agree && fr.brute_force == fr.closed_form;
            }
            rows.push_back(row);
        }
        r = {{"ranks", rows}, {"brute_force_agrees", agree}, {"geometric_fits", geometric_rank_fits(closed)}};
    } else if (c == "decorrelate") {
        TensorFile t = first();
        const int N = arg_or(f.n, 4);
        if (N < 3) throw UsageError("decorrelate needs --n >= 3");
        in["n"] = N;
        Mat K;
        if (t.kind == "mpv") {
            Vec psi = mpv_dense(t.mpv(), N).data;
            K = psi * psi.adjoint();
        } else {
            K = mpdo_dense(t.mpdo(), N).data;
        }
        const int d = t.d;
        auto dr = decorrelation_check(K, d, int(la::ipow(d, N - 2)), d);
        v["decorrelated"] = verdict(dr.decorrelated, 1e-9, dr.decorrelation_residual);
        v["projector_condition"] = verdict(dr.projector_condition, 1e-9, std::max(dr.commutator, dr.product_residual));
        r = {{"agree", dr.agree}};
    } else {
        throw UsageError("unknown command '" + c + "'");
    }
}

void print_human(const json& j, const std::string& prefix, std::ostream& out) {
    if (j.is_object()) {
        if (j.contains("value") && j.contains("tol") && j.contains("residual") && j.size() == 3) {
            out << prefix << " = " << (j["value"].get<bool>() ? "true" : "false") << "  (residual " << j["residual"].dump()
                << ", tol " << j["tol"].dump() << ")\n";
            return;
        }
        for (const auto& [k, x] : j.items()) print_human(x, prefix.empty() ? k : prefix + "." + k, out);
    } else {
        out << prefix << " = " << j.dump() << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-point analysis of matrix product vectors and density operators"};
    Flags f;
    app.add_option("command", f.command, "canon cfii bnt gauge equiv inject rfp-pure flow parent entropy validate zcl purify prfp "
                                         "mutual-info simple gsnnch channels vcf algebra fusion rfp-mpdo decompose fib-rank "
                                         "decorrelate example")
        ->required();
    app.add_option("inputs", f.inputs, "tensor files or built-in example names (examples/<name>)");
    app.add_option("--n", f.n, "system size");
    app.add_option("--lmax", f.lmax, "interaction range or algebra fit window");
    app.add_option("--tol", f.tol, "numerical tolerance for rank and spectral decisions");
    app.add_option("--p", f.p, "example parameter");
    app.add_flag("--json", f.json, "structured report");
    app.add_flag("--timings", f.timings, "include wall time in the report");
    app.add_option("--seed", f.seed, "random seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    if (f.tol > 0) config().tol = f.tol;

    json rep;
    rep["schema"] = 1;
    rep["command"] = f.command;
    rep["inputs"] = json::object();
    rep["verdicts"] = json::object();
    rep["results"] = json::object();
    rep["inputs"]["seed"] = f.seed;
    rep["inputs"]["tol"] = config().tol;
    try {
        if (f.command == "example") {
            want_inputs(f, 1);
            std::string name = f.inputs[0];
            if (name.rfind("examples/", 0) == 0) name = name.substr(9);
            TensorFile t = example(name, f.p);
            if (f.json) std::cout << json{{"schema", 1}, {"command", "example"}, {"tensor", tensor_json(t)}}.dump(2) << "\n";
            else std::cout << serialize(t);
            return 0;
        }
        auto t0 = std::chrono::steady_clock::now();
        run_command(f, rep);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (f.timings) rep["timings"] = {{"seconds", secs}};
        if (f.json) {
            std::cout << rep.dump(2) << "\n";
        } else {
            std::cout << f.command << "\n";
            print_human(rep["inputs"], "input", std::cout);
            print_human(rep["verdicts"], "verdict", std::cout);
            print_human(rep["results"], "result", std::cout);
            std::cout << "time = " << secs << " s\n";
        }
        return 0;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}
