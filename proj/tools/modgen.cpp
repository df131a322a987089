#include "modgen/run.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using namespace modgen;

namespace {

void print_slices(const std::vector<SliceRow>& rows, const std::optional<std::string>& out)
{
    std::string csv = slices_to_csv(rows);
    if (out) write_file_atomic(*out, csv);
    else std::cout << csv;
}

int run_command(const std::string& config, const RunOptions& opt)
{
    RunConfig c = load_config(config);
    auto results = run_config(c, opt);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << mass_label(r.mass) << "  " << r.dir.string() << (r.cache_hit ? "  (cached)" : "") << "  margin=" << r.margin
                  << "  invariants=" << (r.invariants.ok() ? "ok" : "VIOLATED") << '\n';
        ok = ok && r.invariants.ok();
    }
    if (!ok) {
        std::cerr << "modgen: pipeline invariants violated; see invariants.json\n";
        return 4;
    }
    return 0;
}

int info_command(const std::optional<std::string>& config, const std::optional<std::string>& run, std::optional<int> digits)
{
    std::cout << "modgen " << tool_version << "  (MPFR " << mpfr_get_version() << ")\n";
    if (config) {
        RunConfig c = load_config(*config);
        if (digits) c.digits = digits;
        std::cout << "name        " << c.name << '\n'
                  << "ambient     " << ambient_name(c.kernel.ambient) << "  extent=" << c.kernel.extent << "  xi=" << c.kernel.xi
                  << '\n'
                  << "region      " << intervals_token(c.region) << '\n'
                  << "n           " << c.n << "  digits=" << c.effective_digits()
                  << "  (required " << required_digits(c.n, c.kernel.ambient) << ")\n"
                  << "masses      " << join_numbers(c.masses, ',') << '\n'
                  << "peaks       " << c.smear.peaks.size() << "  sigma=" << c.smear.sigma << '\n'
                  << "reference   " << c.reference << '\n';
        for (const auto& l : c.slices) std::cout << "slice       " << line_token(l) << '\n';
    }
    if (run) {
        fs::path dir(*run);
        auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
        std::cout << "run         " << dir.string() << "  mass=" << m.at("mass") << "  digits=" << m.at("digits")
                  << "  cache_hit=" << m.at("cache_hit") << '\n'
                  << "margin      " << m.at("spectral_margin").get<std::string>() << '\n'
                  << "invariants  " << (m.at("invariants").at("ok").get<bool>() ? "ok" : "VIOLATED") << '\n';
        for (const auto& [stage, t] : m.at("stage_seconds").items()) std::cout << "stage       " << stage << "  " << t << " s\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Modular generator block M- for the free Majorana field in 1+1 dimensions"};
    app.require_subcommand(1);

    RunOptions ropt;
    std::string config;
    std::optional<int> digits;
    auto* run = app.add_subcommand("run", "compute, smear, slice and compare one configuration");
    run->add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", ropt.out, "output root (default: output.dir of the config)");
    run->add_option("--cache", ropt.cache, "cache directory (default: $MODGEN_CACHE, then output.cache)");
    run->add_option("--digits", digits, "working precision override in decimal digits");
    run->add_flag("--force", ropt.force, "recompute even when a cached result exists");
    run->add_option("--jobs", ropt.jobs, "mass entries computed concurrently")->check(CLI::PositiveNumber);

    std::string run_dir;
    std::optional<std::string> reference;
    auto* compare = app.add_subcommand("compare", "compare a run's slices with a reference");
    compare->add_option("--run", run_dir, "run directory (one mass entry)")->required();
    compare->add_option("--reference", reference, "reference kind (default: the run's configured reference)")
        ->check(CLI::IsMember({"wedge", "cylinder_cones", "minkowski_cone", "wedge_bound", "zero"}));

    std::string slice_run, line = "diagonal:1", part = "full";
    std::optional<std::string> slice_out;
    auto* slice = app.add_subcommand("slice", "extract a line from a stored smeared matrix");
    slice->add_option("--run", slice_run, "run directory (one mass entry)")->required();
    slice->add_option("--line", line, "diagonal:k, antidiagonal:c or cross:d");
    slice->add_option("--part", part, "full, sym or skew")->check(CLI::IsMember({"full", "sym", "skew"}));
    slice->add_option("--out", slice_out, "write CSV here instead of standard output");

    std::optional<std::string> info_config, info_run;
    auto* info = app.add_subcommand("info", "print version, resolved configuration or run summary");
    info->add_option("--config", info_config, "configuration file")->check(CLI::ExistingFile);
    info->add_option("--run", info_run, "run directory");
    info->add_option("--digits", digits, "precision override to report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) {
            ropt.digits = digits;
            return run_command(config, ropt);
        }
        if (*compare) {
            auto rep = compare_run(run_dir, reference);
            for (const auto& s : rep.slices)
                std::cout << s.line << ' ' << s.part << "  points=" << s.points << "  max_rel=" << s.max_rel
                          << "  mean_rel=" << s.mean_rel << "  max_abs=" << s.max_abs << '\n';
            return 0;
        }
        if (*slice) {
            print_slices(slice_from_run(slice_run, parse_line_token(line), part), slice_out);
            return 0;
        }
        if (*info) return info_command(info_config, info_run, digits);
    } catch (const Error& e) {
        std::cerr << "modgen: " << e.what() << '\n';
        return e.exit_code();
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "modgen: malformed artifact: " << e.what() << '\n';
        return 5;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "modgen: " << e.what() << '\n';
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "modgen: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
