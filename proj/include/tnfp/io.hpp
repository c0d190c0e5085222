#pragma once

#include "examples.hpp"
#include "rfp_general.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tnfp {

// Parse failure with a 1-based position in the input text.
struct ParseError : PreconditionError {
    int line = 0, column = 0;
    ParseError(int l, int c, const std::string& msg)
        : PreconditionError("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + msg), line(l), column(c) {}
};

// Text layout:
//   tnfp-tensor 1
//   kind mpv|mpdo
//   d <n>
//   D <n>
//   name <rest of line>          (optional)
//   provenance <rest of line>    (optional)
//   entries <count>
//   <re> <im>                    one per line
// Entries run row-major over [physical(s), left virtual, right virtual]; for mpdo the ket index precedes the bra.
struct TensorFile {
    std::string kind = "mpv";
    int d = 0, D = 0;
    std::string name, provenance;
    std::vector<cd> entries;

    std::size_t expected_entries() const {
        const std::size_t phys = kind == "mpdo" ? std::size_t(d) * std::size_t(d) : std::size_t(d);
        return phys * std::size_t(D) * std::size_t(D);
    }

    MpvTensor mpv() const {
        if (kind != "mpv") throw PreconditionError("tensor file holds an mpdo, an mpv was expected");
        MpvTensor A(d, D);
        std::size_t q = 0;
        for (int i = 0; i < d; ++i)
            for (int a = 0; a < D; ++a)
                for (int b = 0; b < D; ++b) A[i](a, b) = entries[q++];
        return A;
    }

    MpdoTensor mpdo() const {
        if (kind != "mpdo") throw PreconditionError("tensor file holds an mpv, an mpdo was expected");
        MpdoTensor M(d, D);
        std::size_t q = 0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int a = 0; a < D; ++a)
                    for (int b = 0; b < D; ++b) M.at(i, j)(a, b) = entries[q++];
        return M;
    }

    static TensorFile from(const MpvTensor& A, std::string name = {}, std::string provenance = {}) {
        TensorFile f;
        f.kind = "mpv";
        f.d = A.d();
        f.D = A.D();
        f.name = std::move(name);
        f.provenance = std::move(provenance);
        for (int i = 0; i < f.d; ++i)
            for (int a = 0; a < f.D; ++a)
                for (int b = 0; b < f.D; ++b) f.entries.push_back(A[i](a, b));
        return f;
    }

    static TensorFile from(const MpdoTensor& M, std::string name = {}, std::string provenance = {}) {
        TensorFile f;
        f.kind = "mpdo";
        f.d = M.d();
        f.D = M.D();
        f.name = std::move(name);
        f.provenance = std::move(provenance);
        for (int i = 0; i < f.d; ++i)
            for (int j = 0; j < f.d; ++j)
                for (int a = 0; a < f.D; ++a)
                    for (int b = 0; b < f.D; ++b) f.entries.push_back(M.at(i, j)(a, b));
        return f;
    }
};

namespace detail {

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct LineCursor {
    std::string_view s;
    int line;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\r')) ++pos;
    }
    int col() {
        skip_ws();
        return int(pos) + 1;
    }
    bool done() {
        skip_ws();
        return pos >= s.size();
    }
    std::string_view word() {
        skip_ws();
        std::size_t b = pos;
        while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && s[pos] != '\r') ++pos;
        return s.substr(b, pos - b);
    }
    std::string rest() {
        skip_ws();
        std::string r(s.substr(pos));
        while (!r.empty() && (r.back() == ' ' || r.back() == '\t' || r.back() == '\r')) r.pop_back();
        pos = s.size();
        return r;
    }
    double number() {
        skip_ws();
        const int c = col();
        auto w = word();
        if (w.empty()) throw ParseError(line, c, "expected a number");
        double x = 0;
        auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), x);
        if (ec != std::errc() || p != w.data() + w.size()) {
            if (w == "nan" || w == "inf" || w == "-inf" || w == "+inf" || w == "-nan")
                throw ParseError(line, c, "non-finite value '" + std::string(w) + "'");
            throw ParseError(line, c, "malformed number '" + std::string(w) + "'");
        }
        if (!std::isfinite(x)) throw ParseError(line, c, "non-finite value '" + std::string(w) + "'");
        return x;
    }
    long long integer() {
        skip_ws();
        const int c = col();
        auto w = word();
        long long x = 0;
        auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), x);
        if (w.empty() || ec != std::errc() || p != w.data() + w.size()) throw ParseError(line, c, "expected an integer");
        return x;
    }
    void end() {
        if (!done()) throw ParseError(line, col(), "unexpected trailing text");
    }
};

} // namespace detail

inline std::string serialize(const TensorFile& f) {
    std::ostringstream o;
    o << "tnfp-tensor 1\n";
    o << "kind " << f.kind << "\n";
    o << "d " << f.d << "\n";
    o << "D " << f.D << "\n";
    if (!f.name.empty()) o << "name " << f.name << "\n";
    if (!f.provenance.empty()) o << "provenance " << f.provenance << "\n";
    o << "entries " << f.entries.size() << "\n";
    for (cd z : f.entries) o << detail::format_double(z.real()) << ' ' << detail::format_double(z.imag()) << '\n';
    return o.str();
}

inline TensorFile parse_tensor_text(const std::string& text) {
    std::vector<std::string_view> lines;
    {
        std::string_view all(text);
        std::size_t b = 0;
        while (b <= all.size()) {
            std::size_t e = all.find('\n', b);
            if (e == std::string_view::npos) e = all.size();
            lines.push_back(all.substr(b, e - b));
            b = e + 1;
        }
    }
    TensorFile f;
    bool have_kind = false, have_d = false, have_D = false, header = false;
    long long count = -1;
    std::size_t ln = 0;
    // header
    for (; ln < lines.size(); ++ln) {
        detail::LineCursor c{lines[ln], int(ln) + 1};
        if (c.done() || lines[ln][c.pos] == '#') continue;
        const int kc = c.col();
        auto key = c.word();
        if (!header) {
            if (key != "tnfp-tensor") throw ParseError(c.line, kc, "expected 'tnfp-tensor' header");
            const int vc = c.col();
            if (c.integer() != 1) throw ParseError(c.line, vc, "unsupported format version");
            c.end();
            header = true;
        } else if (key == "kind") {
            const int vc = c.col();
            auto v = c.word();
            if (v != "mpv" && v != "mpdo") throw ParseError(c.line, vc, "kind must be mpv or mpdo");
            f.kind = std::string(v);
            have_kind = true;
            c.end();
        } else if (key == "d" || key == "D") {
            const int vc = c.col();
            long long v = c.integer();
            if (v < 1 || v > 4096) throw ParseError(c.line, vc, "dimension out of range");
            (key == "d" ? f.d : f.D) = int(v);
            (key == "d" ? have_d : have_D) = true;
            c.end();
        } else if (key == "name") {
            f.name = c.rest();
        } else if (key == "provenance") {
            f.provenance = c.rest();
        } else if (key == "entries") {
            const int vc = c.col();
            count = c.integer();
            c.end();
            if (!have_kind || !have_d || !have_D) throw ParseError(c.line, kc, "kind, d and D must precede entries");
            if (count < 0 || std::size_t(count) != f.expected_entries())
                throw ParseError(c.line, vc, "entry count " + std::to_string(count) + " does not match d and D (expected " +
                                                 std::to_string(f.expected_entries()) + ")");
            ++ln;
            break;
        } else {
            throw ParseError(c.line, kc, "unknown key '" + std::string(key) + "'");
        }
    }
    if (count < 0) throw ParseError(int(lines.size()), 1, header ? "missing 'entries' line" : "empty input");
    for (; ln < lines.size(); ++ln) {
        detail::LineCursor c{lines[ln], int(ln) + 1};
        if (c.done() || lines[ln][c.pos] == '#') continue;
        if (f.entries.size() == std::size_t(count)) throw ParseError(c.line, c.col(), "more entries than declared");
        double re = c.number();
        double im = c.number();
        c.end();
        f.entries.emplace_back(re, im);
    }
    if (f.entries.size() != std::size_t(count))
        throw ParseError(int(lines.size()), 1,
                         "found " + std::to_string(f.entries.size()) + " entries, expected " + std::to_string(count));
    return f;
}

inline TensorFile parse_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return parse_tensor_text(s.str());
}

// ------------------------------------------------------------ built-in examples

inline const std::vector<std::string>& example_names() {
    static const std::vector<std::string> n{"ghz",          "product",         "xx-periodic", "zcl-example-3-6",
                                            "aklt",         "bell-chain",      "max-mixed",   "toric-boundary",
                                            "zcl-no-sal",   "sal-no-zcl",      "fibonacci-vacuum"};
    return n;
}

inline TensorFile example(const std::string& name, double p = 0.25) {
    namespace ex = examples;
    if (name == "ghz") return TensorFile::from(ex::ghz(), name, "GHZ; fixed point, two BNT");
    if (name == "product") {
        MpvTensor A(2, 1);
        A[0](0, 0) = 1;
        A[1](0, 0) = 1;
        return TensorFile::from(A, name, "unnormalized |+> product state");
    }
    if (name == "xx-periodic") {
        MpvTensor A(2, 2);
        A[0](0, 1) = 1;
        A[1](1, 0) = 1;
        return TensorFile::from(A, name, "2-periodic, peripheral spectrum {1,-1}");
    }
    if (name == "zcl-example-3-6") return TensorFile::from(ex::zcl_not_rfp(), name, "zero correlation length without fixed point");
    if (name == "aklt") return TensorFile::from(ex::aklt(), name, "AKLT; injective, not a fixed point");
    if (name == "bell-chain") return TensorFile::from(ex::bell_chain(), name, "nearest-neighbour Bell pairs; fixed point");
    if (name == "max-mixed") return TensorFile::from(ex::max_mixed(2), name, "maximally mixed qubit chain");
    if (name == "toric-boundary") return TensorFile::from(ex::toric(), name, "rho = 1 + Z^N; Z2 fixed point");
    if (name == "zcl-no-sal") {
        if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("example zcl-no-sal: p must lie in [0, 1]");
        return TensorFile::from(ex::flip_chain(p), name, "Bell chain under a both-qubit flip with p = " + detail::format_double(p));
    }
    if (name == "sal-no-zcl") return TensorFile::from(ex::classical_ring(), name, "classical ring, transfer [[1,1/2],[1/2,1]]");
    if (name == "fibonacci-vacuum") return TensorFile::from(fibonacci_mpdo(), name, "Fibonacci string-net vacuum weights");
    throw PreconditionError("unknown example '" + name + "'");
}

} // namespace tnfp
