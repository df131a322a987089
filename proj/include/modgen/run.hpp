#pragma once

#include "modgen/config.hpp"
#include "modgen/io.hpp"
#include "modgen/pipeline.hpp"
#include "modgen/references.hpp"
#include "modgen/smearing.hpp"

#include <json.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace modgen {

inline constexpr const char* tool_version = "0.4.0";

struct RunOptions {
    std::optional<int> digits;
    bool force = false;
    int jobs = 1;
    std::optional<std::string> cache;
    std::optional<std::string> out;
};

struct EntryResult {
    double mass = 0;
    fs::path dir;
    bool cache_hit = false;
    InvariantReport invariants;
    std::string margin;
};

inline std::string mass_label(double m)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%g", m);
    return buf;
}

inline std::string join_numbers(const std::vector<double>& v, char sep = ';')
{
    std::string out;
    char buf[32];
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += sep;
        auto res = std::to_chars(buf, buf + sizeof buf, v[k]);
        out.append(buf, res.ptr);
    }
    return out;
}

inline std::string intervals_token(const RegionSpec& r)
{
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t k = 0; k < r.intervals.size(); ++k)
        os << (k ? ";" : "") << r.intervals[k].first << ':' << r.intervals[k].second;
    return os.str();
}

/// Content hash of the mathematical inputs of compute_modular.
inline std::string cache_key(const GridSpec& g, const KernelSpec& k, int digits)
{
    std::ostringstream os;
    os << std::setprecision(17) << "modgen-cache-v1\nambient=" << ambient_name(k.ambient) << "\nmass=" << k.mass
       << "\nextent=" << k.extent << "\nxi=" << k.xi << "\nr=" << k.r << "\ndigits=" << digits << "\nboundaries=";
    for (const auto& b : g.boundaries) os << b.to_string() << ';';
    os << "\nmask=";
    for (bool b : g.mask) os << (b ? '1' : '0');
    return sha256_hex(os.str());
}

namespace detail {

inline const std::vector<std::string>& cached_matrices()
{
    static const std::vector<std::string> names{"S", "Aq", "AqInv", "B", "Mminus", "Mplus"};
    return names;
}

inline BigMatrix& matrix_slot(ModularResult& r, const std::string& name)
{
    if (name == "S") return r.S;
    if (name == "Aq") return r.Aq;
    if (name == "AqInv") return r.AqInv;
    if (name == "B") return r.B;
    if (name == "Mminus") return r.Mminus;
    return r.Mplus;
}

inline const BigMatrix& matrix_slot(const ModularResult& r, const std::string& name)
{
    return matrix_slot(const_cast<ModularResult&>(r), name);
}

} // namespace detail

inline std::optional<ModularResult> load_cached(const fs::path& dir)
{
    if (!fs::exists(dir / "meta.json")) return std::nullopt;
    auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    ModularResult r;
    r.digits = meta.at("digits").get<int>();
    for (const auto& name : detail::cached_matrices()) detail::matrix_slot(r, name) = read_matrix(dir / (name + ".csv")).matrix;
    mpfr_prec_t bits = r.S(0, 0).bits();
    r.margin = BigReal::parse_bits(meta.at("margin").get<std::string>(), bits);
    r.symmetrization_defect = BigReal::parse_bits(meta.at("symmetrization_defect").get<std::string>(), bits);
    for (const auto& e : meta.at("b_eigenvalues")) r.b_eigenvalues.push_back(BigReal::parse_bits(e.get<std::string>(), bits));
    return r;
}

/// Fills a temporary sibling directory and renames it to the key; a
/// concurrent writer that finishes first wins and the loser is discarded.
inline void store_cached(const fs::path& root, const std::string& key, const ModularResult& r)
{
    fs::path final_dir = root / key;
    if (fs::exists(final_dir / "meta.json")) return;
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create cache directory " + root.string() + ": " + ec.message());
    fs::path tmp = root / (key + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
                           std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(tmp, ec);
    if (ec) throw IoError("cannot create " + tmp.string() + ": " + ec.message());
    for (const auto& name : detail::cached_matrices()) write_matrix(tmp / (name + ".csv"), detail::matrix_slot(r, name));
    nlohmann::json meta;
    meta["digits"] = r.digits;
    meta["margin"] = r.margin.to_string();
    meta["symmetrization_defect"] = r.symmetrization_defect.to_string();
    meta["b_eigenvalues"] = nlohmann::json::array();
    for (const auto& e : r.b_eigenvalues) meta["b_eigenvalues"].push_back(e.to_string());
    write_file_atomic(tmp / "meta.json", meta.dump(2));
    fs::rename(tmp, final_dir, ec);
    if (ec) fs::remove_all(tmp, ec); // another writer got there first
}

inline nlohmann::json invariants_json(const InvariantReport& r)
{
    nlohmann::json j;
    j["s_exactly_skew"] = r.s_exactly_skew;
    j["orthogonality"] = r.orthogonality;
    j["b_symmetry"] = r.b_symmetry;
    j["max_abs_eig_b"] = r.max_abs_eig_b;
    j["margin"] = r.margin;
    j["intertwining"] = r.intertwining;
    j["complement_duality"] = r.complement_duality ? nlohmann::json(*r.complement_duality) : nlohmann::json(nullptr);
    j["bound_half"] = r.bound_half();
    j["bound_third"] = r.bound_third();
    j["ok"] = r.ok();
    return j;
}

inline std::map<std::string, std::string> smeared_meta(const RunConfig& c, const std::string& part)
{
    std::ostringstream sigma;
    sigma << std::setprecision(17) << c.smear.sigma;
    return {{"kind", "smeared"},
            {"part", part},
            {"ambient", ambient_name(c.kernel.ambient)},
            {"extent", join_numbers({c.kernel.extent})},
            {"intervals", intervals_token(c.region)},
            {"sigma", sigma.str()},
            {"peaks", join_numbers(c.smear.peaks)}};
}

/// Reference (sym, skew) smeared elements for kind, or zeros for "zero".
inline SymSkew reference_parts(const RunConfig& c, const std::string& kind, double mass)
{
    if (kind == "zero") {
        ScopedPrecision guard(30);
        std::size_t p = c.smear.peaks.size();
        return {BigMatrix(p, p), BigMatrix(p, p)};
    }
    auto rk = reference_for(c, kind, mass);
    if (!rk) throw ConfigError("no reference configured");
    return reference_smeared_elements(*rk, c.smear);
}

inline std::vector<SliceRow> all_slices(const RunConfig& c, const BigMatrix& full, const BigMatrix& sym, const BigMatrix& skew)
{
    std::vector<SliceRow> rows;
    const double period = c.smear.kind == SmearKind::theta ? c.smear.period : 0.0;
    for (const auto& line : c.slices) {
        std::string tok = line_token(line);
        for (auto [part, m] : {std::pair<const char*, const BigMatrix*>{"full", &full}, {"sym", &sym}, {"skew", &skew}}) {
            auto s = extract_slice(*m, c.smear.peaks, line, period);
            auto r = slice_rows(s, part, tok);
            rows.insert(rows.end(), r.begin(), r.end());
        }
    }
    return rows;
}

/// One mass entry of a configured run, written to dir.
inline EntryResult run_entry(const RunConfig& base, double mass, const RunOptions& opt, const fs::path& dir,
                             const fs::path& cache_root)
{
    auto wall0 = std::chrono::steady_clock::now();
    RunConfig c = base;
    c.kernel.mass = mass;
    if (opt.digits) {
        if (*opt.digits < 10) throw ConfigError("--digits must be >= 10");
        c.digits = opt.digits;
    }
    const int digits = c.effective_digits();
    ScopedPrecision guard(digits);

    EntryResult er;
    er.mass = mass;
    er.dir = dir;
    GridSpec g = build_grid(c.region, c.n, c.policy, digits);
    const std::string key = cache_key(g, c.kernel, digits);

    ModularResult r;
    std::optional<ModularResult> cached;
    if (!opt.force) cached = load_cached(cache_root / key);
    if (cached) {
        r = std::move(*cached);
        er.cache_hit = true;
        for (const char* stage : {"S", "A", "B", "artanh", "M"}) r.stage_seconds[stage] = 0.0;
    } else {
        PipelineOptions po;
        po.digits = digits;
        r = compute_modular(g, c.kernel, po);
        store_cached(cache_root, key, r);
    }

    std::map<std::string, double> times = r.stage_seconds;
    InvariantReport inv;
    {
        StageTimer t(times, "invariants");
        inv = check_invariants(r, g.mask, c.check_complement);
    }
    er.invariants = inv;
    er.margin = r.margin.to_string(8);

    BigMatrix full;
    SymSkew parts;
    {
        StageTimer t(times, "smearing");
        full = smeared_matrix(r.Mminus, g, c.smear);
        parts = split_sym_skew(full);
    }

    std::vector<std::string> files;
    auto put = [&](const std::string& name, const std::string& content) {
        write_file_atomic(dir / name, content);
        files.push_back(name);
    };

    put("config.cfg", c.source_text);
    {
        std::ostringstream gcsv;
        gcsv << "lower,upper,inside\n";
        for (std::size_t k = 0; k < g.size(); ++k)
            gcsv << g.lower(k).to_string() << ',' << g.upper(k).to_string() << ',' << (g.mask[k] ? 1 : 0) << '\n';
        put("grid.csv", gcsv.str());
    }
    std::map<std::string, std::string> raw_meta{{"kind", "Mminus"},
                                                {"ambient", ambient_name(c.kernel.ambient)},
                                                {"extent", join_numbers({c.kernel.extent})},
                                                {"intervals", intervals_token(c.region)},
                                                {"n", std::to_string(c.n)},
                                                {"digits", std::to_string(digits)}};
    put("Mminus.csv", matrix_to_csv(r.Mminus, raw_meta));
    put("smeared_full.csv", matrix_to_csv(full, smeared_meta(c, "full")));
    put("smeared_sym.csv", matrix_to_csv(parts.sym, smeared_meta(c, "sym")));
    put("smeared_skew.csv", matrix_to_csv(parts.skew, smeared_meta(c, "skew")));
    put("slices.csv", slices_to_csv(all_slices(c, full, parts.sym, parts.skew)));

    if (c.reference != "none") {
        StageTimer t(times, "reference");
        SymSkew ref = reference_parts(c, c.reference, mass);
        BigMatrix rfull = ref.sym + ref.skew;
        put("reference_sym.csv", matrix_to_csv(ref.sym, smeared_meta(c, "sym")));
        put("reference_skew.csv", matrix_to_csv(ref.skew, smeared_meta(c, "skew")));
        put("reference_slices.csv", slices_to_csv(all_slices(c, rfull, ref.sym, ref.skew)));
    }
    put("invariants.json", invariants_json(inv).dump(2) + "\n");

    nlohmann::json m;
    m["tool"] = "modgen";
    m["version"] = tool_version;
    m["mpfr_version"] = mpfr_get_version();
    m["config"] = c.source_text;
    m["config_sha256"] = sha256_hex(c.source_text);
    m["name"] = c.name;
    m["mass"] = mass;
    m["n"] = c.n;
    m["digits"] = digits;
    m["reference"] = c.reference;
    m["cache_key"] = key;
    m["cache_hit"] = er.cache_hit;
    m["stage_seconds"] = times;
    m["spectral_margin"] = r.margin.to_string(12);
    m["symmetrization_defect"] = r.symmetrization_defect.to_string(6);
    m["invariants"] = invariants_json(inv);
    nlohmann::json inventory = nlohmann::json::object();
    std::string all;
    for (const auto& f : files) {
        std::string h = sha256_file(dir / f);
        inventory[f] = h;
        all += f + ":" + h + "\n";
    }
    m["files"] = inventory;
    m["outputs_sha256"] = sha256_hex(all);
    m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
    return er;
}

/// Runs every mass of the sweep, up to `jobs` entries at a time.
inline std::vector<EntryResult> run_config(const RunConfig& c, const RunOptions& opt)
{
    fs::path out = opt.out ? fs::path(*opt.out) : fs::path(c.out_dir);
    fs::path root = out / c.name;
    fs::path cache_root = resolve_cache_dir(c, opt.cache);
    std::vector<EntryResult> results(c.masses.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            std::size_t k = next++;
            if (k >= c.masses.size()) return;
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            try {
                double m = c.masses[k];
                results[k] = run_entry(c, m, opt, root / mass_label(m), cache_root);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(c.masses.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

// ---- comparison -------------------------------------------------------------

struct SliceComparison {
    std::string line, part;
    double max_rel = 0, mean_rel = 0, max_abs = 0;
    std::size_t points = 0, compared = 0;
};

struct CompareReport {
    std::string reference;
    std::vector<SliceComparison> slices;
    std::string csv;
};

/// Joins numeric and reference slices on (line, part, abscissa). Relative
/// deviations use points where |reference| exceeds 1e-2 of its slice maximum.
inline CompareReport compare_slices(const std::vector<SliceRow>& numeric, const std::vector<SliceRow>& reference,
                                    const std::string& kind)
{
    CompareReport rep;
    rep.reference = kind;
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<const SliceRow*, const SliceRow*>>> groups;
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::tuple<std::string, std::string, std::size_t>, const SliceRow*> refs;
    std::map<std::pair<std::string, std::string>, std::size_t> counter;
    for (const auto& r : reference) refs[{r.line, r.part, counter[{r.line, r.part}]++}] = &r;
    counter.clear();
    for (const auto& r : numeric) {
        auto key = std::make_pair(r.line, r.part);
        std::size_t idx = counter[key]++;
        auto it = refs.find({r.line, r.part, idx});
        if (it == refs.end()) throw MissingArtifact("reference slice " + r.line + "/" + r.part + " is missing point " + std::to_string(idx));
        if (std::abs(it->second->abscissa - r.abscissa) > 1e-9)
            throw MissingArtifact("reference slice " + r.line + "/" + r.part + " has a different abscissa");
        if (!groups.count(key)) order.push_back(key);
        groups[key].emplace_back(&r, it->second);
    }
    std::ostringstream csv;
    csv << "line,part,abscissa,numeric,reference,abs_deviation,rel_deviation\n" << std::setprecision(10);
    for (const auto& key : order) {
        const auto& pts = groups[key];
        double ref_max = 0;
        for (auto [n, r] : pts) ref_max = std::max(ref_max, std::abs(std::stod(r->value)));
        SliceComparison sc{key.first, key.second};
        double sum = 0;
        for (auto [n, r] : pts) {
            double nv = std::stod(n->value), rv = std::stod(r->value);
            double ad = std::abs(nv - rv);
            bool use = ref_max > 0 && std::abs(rv) > 1e-2 * ref_max;
            double rd = use ? ad / std::abs(rv) : std::nan("");
            csv << key.first << ',' << key.second << ',' << n->abscissa << ',' << nv << ',' << rv << ',' << ad << ',';
            if (use) csv << rd;
            csv << '\n';
            sc.max_abs = std::max(sc.max_abs, ad);
            ++sc.points;
            if (use) {
                sc.max_rel = std::max(sc.max_rel, rd);
                sum += rd;
                ++sc.compared;
            }
        }
        sc.mean_rel = sc.compared ? sum / sc.compared : 0.0;
        rep.slices.push_back(sc);
    }
    rep.csv = csv.str();
    return rep;
}

inline CompareReport compare_run(const fs::path& dir, const std::optional<std::string>& kind_flag)
{
    if (!fs::exists(dir / "manifest.json")) throw MissingArtifact("no manifest.json in " + dir.string());
    auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    auto numeric = slices_from_csv(read_file(dir / "slices.csv"), (dir / "slices.csv").string());
    std::string kind = kind_flag ? *kind_flag : manifest.value("reference", std::string("none"));
    std::vector<SliceRow> reference;
    if (!kind_flag && fs::exists(dir / "reference_slices.csv")) {
        reference = slices_from_csv(read_file(dir / "reference_slices.csv"));
    } else {
        if (kind == "none") throw MissingArtifact("run has no reference slices; pass --reference");
        RunConfig c = parse_config_text(read_file(dir / "config.cfg"));
        double mass = manifest.at("mass").get<double>();
        SymSkew ref = reference_parts(c, kind, mass);
        reference = all_slices(c, ref.sym + ref.skew, ref.sym, ref.skew);
    }
    auto rep = compare_slices(numeric, reference, kind);
    write_file_atomic(dir / ("comparison_" + kind + ".csv"), rep.csv);
    nlohmann::json j;
    j["reference"] = kind;
    j["slices"] = nlohmann::json::array();
    for (const auto& s : rep.slices)
        j["slices"].push_back({{"line", s.line},
                               {"part", s.part},
                               {"points", s.points},
                               {"compared", s.compared},
                               {"max_rel_deviation", s.max_rel},
                               {"mean_rel_deviation", s.mean_rel},
                               {"max_abs_deviation", s.max_abs}});
    write_file_atomic(dir / ("comparison_" + kind + ".json"), j.dump(2) + "\n");
    return rep;
}

/// A slice of a stored smeared matrix (part full, sym or skew).
inline std::vector<SliceRow> slice_from_run(const fs::path& dir, const LineSpec& line, const std::string& part)
{
    if (part != "full" && part != "sym" && part != "skew") throw ConfigError("part must be full, sym or skew");
    auto f = read_matrix(dir / ("smeared_" + part + ".csv"));
    std::vector<double> peaks;
    for (const auto& t : detail::split(f.meta.at("peaks"), ';')) peaks.push_back(std::stod(t));
    double period = 0;
    if (f.meta.at("ambient") == "cylinder") period = std::stod(f.meta.at("extent"));
    auto s = extract_slice(f.matrix, peaks, line, period);
    return slice_rows(s, part, line_token(line));
}

} // namespace modgen
