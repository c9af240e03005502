// Command-line driver: run, table1, green, corrector-audit, coarse-grain.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "homlat/analysis.hpp"
#include "homlat/corrector.hpp"
#include "homlat/experiment.hpp"
#include "homlat/green.hpp"

namespace fs = std::filesystem;
using namespace homlat;

namespace {

void log_line(const std::string& m) { std::cerr << "[homlat] " << m << std::endl; }

void print_fit(const ErrorSeries& s, const std::string& metric) {
    if (!s.has_metric(metric) || s.epsilons().size() < 4) return;
    const auto f = fit_slope(s, metric);
    std::printf("  slope(%s) = %.3f +/- %.3f  (median of realizations, %d eps)\n", metric.c_str(), f.slope,
                f.slope_stderr, f.points);
}

void print_invariants(const InvariantReport& inv) {
    std::printf("  invariants: hamiltonian_drift=%.3g boundary_ratio=%.3g", inv.max_hamiltonian_drift,
                inv.max_boundary_ratio);
    if (inv.max_assembly_gap > 0 || inv.max_corrector_pde > 0)
        std::printf(" assembly_gap=%.3g corrector_pde=%.3g", inv.max_assembly_gap, inv.max_corrector_pde);
    std::printf(" -> %s\n", inv.passed() ? "pass" : "FAIL");
    for (const auto& f : inv.failures) std::printf("    failed: %s\n", f.c_str());
}

RunOptions make_options(int threads, bool override_budget, const fs::path& out) {
    RunOptions o;
    o.threads = threads;
    o.override_budget = override_budget;
    o.green_cache = out / "green_cache";
    o.log = log_line;
    return o;
}

ExperimentConfig config_or_builtin(const fs::path& dir, const std::string& name) {
    const auto file = dir / (name + ".json");
    if (!dir.empty() && fs::exists(file)) return load_config(file);
    return table1_config(name);
}

/// Reuses a finished CSV when its config hash matches.
ErrorSeries run_or_reuse(const ExperimentConfig& c, const fs::path& out, const RunOptions& opt, InvariantReport& inv) {
    const auto csv = out / (c.name + ".csv");
    if (fs::exists(csv)) {
        try {
            auto s = read_csv(csv);
            if (s.meta("config_hash") == config_hash(c)) {
                log_line("reusing " + csv.string());
                for (const auto& r : s.records) {
                    if (r.metric == "hamiltonian_drift") inv.max_hamiltonian_drift = std::max(inv.max_hamiltonian_drift, r.value);
                    if (r.metric == "boundary_ratio") inv.max_boundary_ratio = std::max(inv.max_boundary_ratio, r.value);
                }
                inv.finalize(c);
                return s;
            }
        } catch (const std::exception&) {
        }
    }
    auto res = run_experiment(c, out, opt);
    inv = res.invariants;
    return res.series;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"homlat: homogenization laboratory for harmonic lattices with random masses"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "results", config_dir = "configs";
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool override_budget = false;

    auto* run = app.add_subcommand("run", "epsilon sweep over mass realizations, CSV output");
    run->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--threads", threads, "worker threads");
    run->add_flag("--override-budget", override_budget, "run even if the projected cost exceeds the budget");
    bool dump_snapshots = false;
    run->add_flag("--dump-snapshots", dump_snapshots, "write final lattice displacement per epsilon to <out>/snapshots");

    auto* table1 = app.add_subcommand("table1", "seven-row convergence table");
    table1->add_option("--config", config_dir, "directory holding table1_*.json (built-ins otherwise)");
    table1->add_option("--out", out_dir, "output directory");
    table1->add_option("--threads", threads, "worker threads");
    table1->add_flag("--override-budget", override_budget, "ignore budget guard");

    int green_radius = 64;
    double green_tol = 1e-10;
    std::string green_method = "quadrature";
    auto* green = app.add_subcommand("green", "tabulate the lattice Green function (cached)");
    green->add_option("--radius", green_radius, "table radius")->check(CLI::Range(1, 4096));
    green->add_option("--tolerance", green_tol, "stencil residual tolerance");
    green->add_option("--method", green_method, "quadrature | recurrence");
    green->add_option("--out", out_dir, "output directory (cache lives in <out>/green_cache)");
    green->add_option("--config", config_path, "unused; accepted for uniformity");
    green->add_option("--threads", threads, "unused");
    green->add_flag("--override-budget", override_budget, "unused");

    std::vector<int> radii{8, 16, 32, 64};
    int audit_realizations = 500;
    auto* audit = app.add_subcommand("corrector-audit", "corrector PDE check and sub-Gaussian tail audit");
    audit->add_option("--config", config_path, "experiment JSON (mass model, dim, seed)")->check(CLI::ExistingFile);
    audit->add_option("--radii", radii, "cutoff radii");
    audit->add_option("--realizations", audit_realizations, "Monte-Carlo realizations (>= 50)");
    audit->add_option("--out", out_dir, "output directory");
    audit->add_option("--threads", threads, "unused");
    audit->add_flag("--override-budget", override_budget, "unused");

    auto* cg = app.add_subcommand("coarse-grain", "coarse-graining L2 errors along the epsilon sweep");
    cg->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    cg->add_option("--out", out_dir, "output directory");
    cg->add_option("--threads", threads, "worker threads");
    cg->add_flag("--override-budget", override_budget, "ignore budget guard");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto c = load_config(config_path);
            std::printf("config %s hash=%s\n", c.name.c_str(), config_hash(c).c_str());
            auto opt = make_options(threads, override_budget, out_dir);
            if (dump_snapshots) opt.snapshot_dir = fs::path(out_dir) / "snapshots";
            const auto res = run_experiment(c, out_dir, opt);
            std::printf("  wrote %s%s\n", res.csv.string().c_str(), res.resumed ? " (resumed)" : "");
            for (const char* m : {"aed", "aev", "cg_displacement", "cg_velocity", "residual_sup"}) print_fit(res.series, m);
            print_invariants(res.invariants);
            return res.invariants.passed() ? 0 : 1;
        }
        if (*table1) {
            const auto opt = make_options(threads, override_budget, out_dir);
            std::vector<Table1Row> rows;
            bool ok = true;
            for (const auto& t : table1_targets()) {
                const auto c = config_or_builtin(config_dir, t.config_name);
                InvariantReport inv;
                const auto s = run_or_reuse(c, out_dir, opt, inv);
                rows.push_back(table1_row(t, s));
                if (!inv.passed()) {
                    ok = false;
                    std::printf("%s: invariants failed\n", c.name.c_str());
                    print_invariants(inv);
                }
                ok = ok && rows.back().passed;
            }
            const auto text = format_table1(rows);
            std::cout << text;
            std::ofstream os(fs::path(out_dir) / "table1_summary.csv");
            os << "row,config,aev_target,aev_slope,aev_stderr,aed_target,aed_slope,aed_stderr,checked,passed\n";
            for (const auto& r : rows)
                os << '"' << r.label << "\"," << r.config_name << "," << format_double(r.target_aev) << ","
                   << format_double(r.aev.slope) << "," << format_double(r.aev.slope_stderr) << ","
                   << format_double(r.target_aed) << "," << format_double(r.aed.slope) << ","
                   << format_double(r.aed.slope_stderr) << "," << r.checked << "," << r.passed << "\n";
            return ok ? 0 : 1;
        }
        if (*green) {
            bool hit = false;
            const auto method = green_method_from_string(green_method);
            const auto t = cached_green_function(2, green_radius, green_tol, fs::path(out_dir) / "green_cache", method, &hit);
            std::printf("green radius=%d method=%s tolerance=%g cache=%s\n", t.radius(), to_string(t.method()), green_tol,
                        hit ? "hit" : "miss");
            std::printf("  phi(0)=%.17g phi(e1)=%.17g phi(e1+e2)=%.17g\n", t({0, 0}), t({1, 0}), t({1, 1}));
            std::printf("  stencil residual=%.3g\n", t.stencil_residual());
            if (green_radius >= 16) {
                const auto fit = fit_green_asymptotics(t, 8, std::min(64, green_radius));
                std::printf("  fitted C0=%.12f K=%.4g residual log-log slope=%.3f\n", fit.c0, fit.k_max, fit.residual_slope);
            }
            return t.stencil_residual() <= green_tol ? 0 : 1;
        }
        if (*audit) {
            ExperimentConfig c;
            if (!config_path.empty()) c = load_config(config_path);
            std::printf("corrector-audit model=%s dim=%d hash=%s\n", to_string(c.mass_model.kind), c.dim,
                        config_hash(c).c_str());
            bool ok = true;
            int rmax = 0;
            for (int r : radii) rmax = std::max(rmax, r);
            const auto g = c.dim == 2 ? green_function(2 * rmax + 2, 1e-10) : green_function_1d(2 * rmax + 2);
            for (int r : {8, 16, 32}) {
                const auto mf = sample_masses(c.mass_model, LatticeWindow::square(c.dim, r), c.base_seed);
                const auto z = fluctuation_field(mf);
                const auto cf = corrector(z, r, LatticeWindow::square(c.dim, r + 4), g);
                const auto rep = verify_corrector_pde(cf, z);
                std::printf("  pde r=%d max|lap chi - z 1_D|=%.3g %s\n", r, rep.max_residual, rep.passed ? "pass" : "FAIL");
                ok = ok && rep.passed;
            }
            std::vector<CorrectorOp> ops{CorrectorOp::Identity, CorrectorOp::Centered0};
            if (c.dim == 2) ops.push_back(CorrectorOp::Centered1);
            const auto a = tail_bound_audit(c.mass_model, radii, audit_realizations, ops, c.base_seed, 3.0, c.dim);
            std::printf("  %4s %-10s %10s %10s %10s %10s %10s\n", "r", "op", "t", "exceed", "bound", "mc_err", "growth");
            for (const auto& row : a.rows)
                std::printf("  %4d %-10s %10.4g %10.4g %10.4g %10.4g %10.4g %s\n", row.r, to_string(row.op), row.threshold,
                            row.exceedance, row.bound, row.mc_error, row.growth, row.tail_passed ? "" : "FAIL");
            for (const auto& [op, ratio] : a.growth_ratio)
                std::printf("  growth max/min %-10s %.3f (limit %.1f)\n", to_string(op), ratio, a.max_growth_ratio);
            std::printf("  tail %s, growth %s\n", a.tail_passed ? "pass" : "FAIL", a.growth_passed ? "pass" : "FAIL");
            return ok && a.passed() ? 0 : 1;
        }
        if (*cg) {
            auto c = load_config(config_path);
            c.coarse_grain = true;
            std::printf("config %s hash=%s\n", c.name.c_str(), config_hash(c).c_str());
            const auto res = run_experiment(c, out_dir, make_options(threads, override_budget, out_dir));
            bool ok = res.invariants.passed();
            for (const char* m : {"cg_displacement", "cg_velocity"}) {
                const auto eps = res.series.epsilons();
                double prev = INFINITY;
                bool decreasing = true;
                std::printf("  %s:", m);
                for (double e : eps) {
                    const double v = median(res.series.values(e, m));
                    std::printf(" %.4g", v);
                    decreasing = decreasing && v < prev;
                    prev = v;
                }
                std::printf("  %s\n", decreasing ? "strictly decreasing" : "NOT decreasing");
                ok = ok && decreasing;
                print_fit(res.series, m);
            }
            print_invariants(res.invariants);
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
