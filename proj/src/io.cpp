#include "koopsym/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "koopsym/error.hpp"

namespace koopsym::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

double parse_double(const std::string& text, int line) {
    // strtod rather than stod: stod throws on subnormals, which must round-trip
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    std::size_t pos = static_cast<std::size_t>(end - text.c_str());
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\r')) ++pos;
    if (text.empty() || pos != text.size())
        fail(ErrorKind::Io, "line " + std::to_string(line) + ": cannot parse number '" + text + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    require(f.good(), ErrorKind::Io, "cannot open '" + path + "' for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorKind::Io, "cannot open '" + path + "' for reading");
    return f;
}

cplx parse_complex(std::string text, int line) {
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
    if (text.empty() || text.back() != 'j') return {parse_double(text, line), 0.0};
    text.pop_back();
    // split at the sign of the imaginary part, skipping exponent signs
    for (std::size_t k = text.size(); k-- > 1;) {
        if ((text[k] == '+' || text[k] == '-') && text[k - 1] != 'e' && text[k - 1] != 'E')
            return {parse_double(text.substr(0, k), line), parse_double(text.substr(k), line)};
    }
    return {0.0, parse_double(text, line)};
}

}  // namespace

void write_snapshots(std::ostream& out, const dynamics::SnapshotSet& s) {
    require(s.X.rows() == s.Y.rows() && s.X.cols() == s.Y.cols(), ErrorKind::DimensionMismatch,
            "X and Y shapes differ");
    out << "n=" << s.dim() << ",M=" << s.pairs() << ",dt=" << format_double(s.dt) << '\n';
    for (Eigen::Index i = 0; i < s.X.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.X.cols(); ++j) out << (j ? "," : "") << format_double(s.X(i, j));
        for (Eigen::Index j = 0; j < s.Y.cols(); ++j) out << ',' << format_double(s.Y(i, j));
        out << '\n';
    }
    require(out.good(), ErrorKind::Io, "write failed");
}

void write_snapshots(const std::string& path, const dynamics::SnapshotSet& s) {
    auto f = open_out(path);
    write_snapshots(f, s);
}

dynamics::SnapshotSet read_snapshots(std::istream& in) {
    std::string header;
    require(static_cast<bool>(std::getline(in, header)), ErrorKind::Io, "missing snapshot header");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    long n = -1, m = -1;
    double dt = 0.0;
    bool have_dt = false;
    for (const auto& field : split(header)) {
        const auto eq = field.find('=');
        require(eq != std::string::npos, ErrorKind::Io, "malformed header field '" + field + "'");
        const std::string key = field.substr(0, eq);
        const std::string val = field.substr(eq + 1);
        if (key == "n") {
            n = static_cast<long>(parse_double(val, 1));
        } else if (key == "M") {
            m = static_cast<long>(parse_double(val, 1));
        } else if (key == "dt") {
            dt = parse_double(val, 1);
            have_dt = true;
        } else if (key != "format_version") {
            fail(ErrorKind::Io, "unknown header key '" + key + "'");
        }
    }
    require(n >= 1 && m >= 0 && have_dt, ErrorKind::Io, "header must define n, M and dt");
    dynamics::SnapshotSet s;
    s.dt = dt;
    s.X.resize(m, n);
    s.Y.resize(m, n);
    std::string line;
    for (long i = 0; i < m; ++i) {
        const int lineno = static_cast<int>(i) + 2;
        require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io,
                "expected " + std::to_string(m) + " data lines, found " + std::to_string(i));
        const auto fields = split(line);
        require(static_cast<long>(fields.size()) == 2 * n, ErrorKind::Io,
                "line " + std::to_string(lineno) + ": expected " + std::to_string(2 * n) + " values");
        for (long j = 0; j < n; ++j) {
            s.X(i, j) = parse_double(fields[j], lineno);
            s.Y(i, j) = parse_double(fields[n + j], lineno);
        }
    }
    return s;
}

dynamics::SnapshotSet read_snapshots(const std::string& path) {
    auto f = open_in(path);
    return read_snapshots(f);
}

void write_matrix(std::ostream& out, const CMatrix& m) {
    const bool complex = m.size() > 0 && m.imag().cwiseAbs().maxCoeff() > 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j).real());
            if (complex) {
                const double im = m(i, j).imag();
                out << (std::signbit(im) ? "" : "+") << format_double(im) << 'j';
            }
        }
        out << '\n';
    }
    require(out.good(), ErrorKind::Io, "write failed");
}

void write_matrix(const std::string& path, const CMatrix& m) {
    auto f = open_out(path);
    write_matrix(f, m);
}

void write_matrix(const std::string& path, const RMatrix& m) { write_matrix(path, CMatrix(m.cast<cplx>())); }

CMatrix read_matrix(std::istream& in) {
    std::vector<std::vector<cplx>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<cplx> row;
        for (const auto& f : split(line)) row.push_back(parse_complex(f, lineno));
        require(rows.empty() || row.size() == rows.front().size(), ErrorKind::Io,
                "line " + std::to_string(lineno) + ": ragged matrix row");
        rows.push_back(std::move(row));
    }
    CMatrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

CMatrix read_matrix(const std::string& path) {
    auto f = open_in(path);
    return read_matrix(f);
}

}  // namespace koopsym::io
