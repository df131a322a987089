#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/errors.hpp"
#include "modgen/matrix.hpp"
#include "modgen/smearing.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace modgen {

namespace fs = std::filesystem;

inline std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 || EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

inline std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingArtifact("missing file " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string sha256_file(const fs::path& p) { return sha256_hex(read_file(p)); }

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const fs::path& p, const std::string& content)
{
    std::error_code ec;
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
    thread_local std::mt19937_64 rng{std::random_device{}()};
    fs::path tmp = p;
    tmp += ".tmp" + std::to_string(rng());
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, p, ec);
    if (ec) throw IoError("cannot rename into " + p.string() + ": " + ec.message());
}

/// Matrix CSV: one '#'-prefixed metadata line of key=value pairs, then
/// row-major decimal strings that round-trip to the same binary value.
inline std::string matrix_to_csv(const BigMatrix& m, const std::map<std::string, std::string>& meta = {})
{
    std::ostringstream os;
    os << "# rows=" << m.rows() << " cols=" << m.cols() << " bits=" << (m.rows() && m.cols() ? m(0, 0).bits() : default_bits());
    for (const auto& [k, v] : meta) os << ' ' << k << '=' << v;
    os << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << m(i, j).to_string();
        }
        os << '\n';
    }
    return os.str();
}

struct MatrixFile {
    BigMatrix matrix;
    std::map<std::string, std::string> meta;
};

inline MatrixFile matrix_from_csv(const std::string& text, const std::string& origin = "matrix")
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw MissingArtifact(origin + ": missing metadata header");
    MatrixFile f;
    std::istringstream hs(line.substr(2));
    std::string kv;
    while (hs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        f.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    std::size_t rows = 0, cols = 0;
    mpfr_prec_t bits = 0;
    try {
        rows = std::stoul(f.meta.at("rows"));
        cols = std::stoul(f.meta.at("cols"));
        bits = std::stol(f.meta.at("bits"));
    } catch (const std::exception&) {
        throw MissingArtifact(origin + ": malformed metadata header");
    }
    ScopedPrecision guard(PrecisionBits{bits});
    f.matrix = BigMatrix(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw MissingArtifact(origin + ": truncated at row " + std::to_string(i));
        std::istringstream ls(line);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(ls, cell, ',')) {
            if (j >= cols) throw MissingArtifact(origin + ": too many columns in row " + std::to_string(i));
            f.matrix(i, j++) = BigReal::parse_bits(cell, bits);
        }
        if (j != cols) throw MissingArtifact(origin + ": short row " + std::to_string(i));
    }
    return f;
}

inline void write_matrix(const fs::path& p, const BigMatrix& m, const std::map<std::string, std::string>& meta = {})
{
    write_file_atomic(p, matrix_to_csv(m, meta));
}

inline MatrixFile read_matrix(const fs::path& p) { return matrix_from_csv(read_file(p), p.string()); }

/// One row of a slice table: (abscissa, value, part, line).
struct SliceRow {
    double abscissa = 0;
    std::string value;
    std::string part;
    std::string line;
};

inline std::vector<SliceRow> slice_rows(const SliceSeries& s, const std::string& part, const std::string& line)
{
    std::vector<SliceRow> out;
    for (std::size_t k = 0; k < s.values.size(); ++k) out.push_back({s.abscissa[k], s.values[k].to_string(), part, line});
    return out;
}

inline std::string slices_to_csv(const std::vector<SliceRow>& rows)
{
    std::ostringstream os;
    os << "abscissa,value,part,line\n";
    os << std::setprecision(17);
    for (const auto& r : rows) os << r.abscissa << ',' << r.value << ',' << r.part << ',' << r.line << '\n';
    return os.str();
}

inline std::vector<SliceRow> slices_from_csv(const std::string& text, const std::string& origin = "slices")
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "abscissa,value,part,line") throw MissingArtifact(origin + ": bad header");
    std::vector<SliceRow> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        SliceRow r;
        std::string a;
        if (!std::getline(ls, a, ',') || !std::getline(ls, r.value, ',') || !std::getline(ls, r.part, ',') ||
            !std::getline(ls, r.line))
            throw MissingArtifact(origin + ": malformed row '" + line + "'");
        try {
            r.abscissa = std::stod(a);
        } catch (const std::exception&) {
            throw MissingArtifact(origin + ": malformed abscissa '" + a + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace modgen
