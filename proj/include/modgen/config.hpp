#pragma once

#include "modgen/errors.hpp"
#include "modgen/grid.hpp"
#include "modgen/kernel.hpp"
#include "modgen/references.hpp"
#include "modgen/smearing.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace modgen {

namespace fs = std::filesystem;

/// One configured run; masses span a sweep, each entry is computed separately.
struct RunConfig {
    std::string name = "run";
    KernelSpec kernel;
    RegionSpec region;
    GridPolicy policy;
    int n = 64;
    std::optional<int> digits;
    std::vector<double> masses{0.0};
    SmearSpec smear;
    std::vector<LineSpec> slices;
    std::string reference = "none"; // none | auto | wedge | cylinder_cones | minkowski_cone | wedge_bound | zero
    bool check_complement = true;
    std::string out_dir = "runs";
    std::string cache_dir;
    std::string source_text; // configuration file as read

    int effective_digits() const { return digits ? *digits : required_digits(n, kernel.ambient); }
};

namespace detail {

inline std::string trim(std::string s)
{
    auto issp = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t k = 0;
    while (k < s.size() && issp(s[k])) ++k;
    return s.substr(k);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

inline double to_number(const std::string& s, const std::string& key)
{
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
    }
}

inline std::vector<double> number_list(const std::string& s, const std::string& key)
{
    std::vector<double> out;
    for (const auto& item : split(s, ',')) out.push_back(to_number(item, key));
    if (out.empty()) throw ConfigError("key '" + key + "' is empty");
    return out;
}

// "a:b, c:d"
inline std::vector<std::pair<double, double>> interval_list(const std::string& s)
{
    std::vector<std::pair<double, double>> out;
    for (const auto& item : split(s, ',')) {
        auto ends = split(item, ':');
        if (ends.size() != 2) throw ConfigError("region.intervals: expected a:b, got '" + item + "'");
        out.emplace_back(to_number(ends[0], "region.intervals"), to_number(ends[1], "region.intervals"));
    }
    return out;
}

inline LineSpec parse_line(const std::string& s)
{
    auto parts = split(s, ':');
    if (parts.empty() || parts.size() > 2) throw ConfigError("bad slice '" + s + "', expected kind:parameter");
    LineSpec l;
    if (parts[0] == "diagonal") l.kind = LineKind::diagonal_offset;
    else if (parts[0] == "antidiagonal") l.kind = LineKind::antidiagonal;
    else if (parts[0] == "cross") l.kind = LineKind::cross_diagonal;
    else throw ConfigError("unknown slice kind '" + parts[0] + "' (diagonal, antidiagonal, cross)");
    l.parameter = parts.size() == 2 ? to_number(parts[1], "output.slices") : 0.0;
    return l;
}

} // namespace detail

inline std::string line_token(const LineSpec& l)
{
    std::ostringstream os;
    os << (l.kind == LineKind::diagonal_offset ? "diagonal" : l.kind == LineKind::antidiagonal ? "antidiagonal" : "cross") << ':'
       << l.parameter;
    return os.str();
}

inline LineSpec parse_line_token(const std::string& s) { return detail::parse_line(s); }

inline void validate_config(const RunConfig& c)
{
    c.kernel.validate();
    c.region.validate();
    if (c.region.ambient != c.kernel.ambient) throw ConfigMismatch("kernel and region ambient differ");
    if (c.kernel.ambient == Ambient::cylinder && c.region.extent != c.kernel.extent)
        throw ConfigMismatch("cylinder period differs between kernel and region");
    bool theta = c.smear.kind == SmearKind::theta;
    if (theta != (c.kernel.ambient == Ambient::cylinder))
        throw ConfigMismatch("theta smearing belongs to the cylinder, Gaussian smearing to Minkowski");
    if (theta && (c.smear.period != c.kernel.extent || c.smear.xi != c.kernel.xi))
        throw ConfigMismatch("theta smearing period and xi must match the kernel");
    if (c.n < 2 || c.n % 2) throw ConfigError("run.n must be even and >= 2");
    if (c.digits && *c.digits < 10) throw ConfigError("run.digits must be >= 10");
    if (c.smear.peaks.empty()) throw ConfigError("smear.peaks is empty");
    for (double m : c.masses)
        if (!(m >= 0)) throw ConfigError("masses must be >= 0");
    static const std::vector<std::string> refs{"none", "auto", "wedge", "cylinder_cones", "minkowski_cone", "wedge_bound", "zero"};
    if (std::find(refs.begin(), refs.end(), c.reference) == refs.end())
        throw ConfigError("unknown reference kind '" + c.reference + "'");
}

/// Sectioned key-value configuration ([run] [kernel] [region] [smear] [output]); see docs/config_schema.md.
inline RunConfig parse_config_text(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    static const std::map<std::string, std::vector<std::string>> known{
        {"run", {"name", "n", "digits", "masses", "check_complement"}},
        {"kernel", {"ambient", "extent", "xi", "r"}},
        {"region", {"intervals", "growth"}},
        {"smear", {"kind", "sigma", "peaks", "lattice"}},
        {"output", {"dir", "cache", "slices", "reference"}},
    };
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (it == known.end()) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, v] : body)
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw ConfigError("unknown key '" + section + "." + key + "'");
    }
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        auto v = tree.get_optional<std::string>(path);
        if (!v) return std::nullopt;
        return detail::trim(*v);
    };
    auto require = [&](const std::string& path) {
        auto v = get(path);
        if (!v || v->empty()) throw ConfigError("missing required key '" + path + "'");
        return *v;
    };

    RunConfig c;
    c.source_text = text;
    if (auto v = get("run.name")) c.name = *v;
    if (auto v = get("run.n")) c.n = static_cast<int>(detail::to_number(*v, "run.n"));
    if (auto v = get("run.digits")) c.digits = static_cast<int>(detail::to_number(*v, "run.digits"));
    if (auto v = get("run.masses")) c.masses = detail::number_list(*v, "run.masses");
    if (auto v = get("run.check_complement")) c.check_complement = *v == "true" || *v == "1" || *v == "yes";

    std::string amb = require("kernel.ambient");
    if (amb == "minkowski") c.kernel.ambient = Ambient::minkowski;
    else if (amb == "cylinder") c.kernel.ambient = Ambient::cylinder;
    else throw ConfigError("kernel.ambient must be minkowski or cylinder");
    c.kernel.extent = detail::to_number(require("kernel.extent"), "kernel.extent");
    if (auto v = get("kernel.xi")) c.kernel.xi = static_cast<int>(detail::to_number(*v, "kernel.xi"));
    if (auto v = get("kernel.r")) c.kernel.r = detail::to_number(*v, "kernel.r");
    c.kernel.mass = c.masses.front();

    c.region.ambient = c.kernel.ambient;
    c.region.extent = c.kernel.extent;
    c.region.intervals = detail::interval_list(require("region.intervals"));
    if (auto v = get("region.growth")) c.policy.growth = detail::to_number(*v, "region.growth");

    c.smear.kind = c.kernel.ambient == Ambient::cylinder ? SmearKind::theta : SmearKind::gaussian;
    if (auto v = get("smear.kind")) {
        if (*v == "gaussian") c.smear.kind = SmearKind::gaussian;
        else if (*v == "theta") c.smear.kind = SmearKind::theta;
        else throw ConfigError("smear.kind must be gaussian or theta");
    }
    c.smear.sigma = detail::to_number(require("smear.sigma"), "smear.sigma");
    c.smear.period = c.smear.kind == SmearKind::theta ? c.kernel.extent : 0.0;
    c.smear.xi = c.kernel.xi;
    if (auto v = get("smear.peaks")) c.smear.peaks = detail::number_list(*v, "smear.peaks");
    if (auto v = get("smear.lattice")) {
        auto l = detail::number_list(*v, "smear.lattice");
        if (l.size() != 3) throw ConfigError("smear.lattice expects lo, hi, spacing");
        if (!c.smear.peaks.empty()) throw ConfigError("give either smear.peaks or smear.lattice");
        c.smear.peaks = peak_lattice(l[0], l[1], l[2]);
    }

    if (auto v = get("output.dir")) c.out_dir = *v;
    if (auto v = get("output.cache")) c.cache_dir = *v;
    if (auto v = get("output.slices"))
        for (const auto& item : detail::split(*v, ',')) c.slices.push_back(detail::parse_line(item));
    if (c.slices.empty()) c.slices.push_back(LineSpec{LineKind::diagonal_offset, 1});
    if (auto v = get("output.reference")) c.reference = *v;

    validate_config(c);
    return c;
}

inline RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Cache directory: explicit flag, then MODGEN_CACHE, then the config, then ./.modgen-cache.
inline fs::path resolve_cache_dir(const RunConfig& c, const std::optional<std::string>& flag)
{
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("MODGEN_CACHE"); env && *env) return env;
    if (!c.cache_dir.empty()) return c.cache_dir;
    return ".modgen-cache";
}

/// Reference kernel for the configured region; "auto" picks it from the layout.
inline std::optional<ReferenceKernel> reference_for(const RunConfig& c, const std::string& kind, double mass)
{
    std::string k = kind;
    if (k == "none" || k == "zero") return std::nullopt;
    const auto& iv = c.region.intervals;
    if (k == "auto") {
        if (c.kernel.ambient == Ambient::cylinder) k = "cylinder_cones";
        else if (iv.size() == 1 && iv[0].second >= c.region.upper()) k = "wedge";
        else k = "minkowski_cone";
    }
    ReferenceKernel r;
    if (k == "wedge") {
        if (c.kernel.ambient != Ambient::minkowski || iv.size() != 1 || iv[0].first != 0.0)
            throw ConfigMismatch("the wedge reference needs the Minkowski region [0, b]");
        r.kind = ReferenceKernel::Kind::wedge;
        r.mass = mass;
        return r;
    }
    if (k == "cylinder_cones") {
        if (c.kernel.ambient != Ambient::cylinder) throw ConfigMismatch("cylinder_cones reference needs the cylinder");
        r.kind = ReferenceKernel::Kind::cylinder_cones;
        r.intervals = iv;
        r.period = c.kernel.extent;
        r.xi = c.kernel.xi;
        return r;
    }
    if (k == "minkowski_cone" || k == "wedge_bound") {
        if (c.kernel.ambient != Ambient::minkowski || iv.size() != 1 || iv[0].first != -iv[0].second)
            throw ConfigMismatch(k + " reference needs a symmetric Minkowski interval [-w/2, w/2]");
        r.kind = k == "wedge_bound" ? ReferenceKernel::Kind::wedge_bound : ReferenceKernel::Kind::minkowski_cone;
        r.width = iv[0].second - iv[0].first;
        return r;
    }
    throw ConfigError("unknown reference kind '" + kind + "'");
}

} // namespace modgen
