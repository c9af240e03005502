#pragma once

/// @file experiment.hpp
/// @brief ε-sweeps over mass realizations: configuration, budget guard,
///        deterministic parallel execution, resumable CSV output, and the
///        seven-row convergence table.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "homlat/analysis.hpp"
#include "homlat/corrector.hpp"
#include "homlat/effective_wave.hpp"
#include "homlat/green.hpp"
#include "homlat/lattice_sim.hpp"
#include "homlat/mass_models.hpp"

namespace homlat {

struct Budget {
    double max_memory_gb = 8.0;
    double max_minutes = 60.0;
};

struct ExperimentConfig {
    static constexpr int current_schema = 1;
    int schema_version = current_schema;
    std::string name = "experiment";
    int dim = 2;
    MassModel mass_model = MassModel::iid_two_point(0.5, 1.5);
    std::vector<double> epsilons{0.5, 0.25, 0.125, 0.0625, 0.03125};
    int realizations = 10;
    std::uint64_t base_seed = 1;
    double T = 1.0;
    double sigma = 0.1;
    std::string initial_data = "paper-sech-pair";
    double dt_factor = 0.07;
    int sample_count = 33;
    int safety = 8;
    bool residuals = false;     // corrector, residual terms, microstate error
    bool coarse_grain = false;  // coarse-graining errors
    double green_tolerance = 1e-10;
    Budget budget;

    void validate() const {
        if (schema_version != current_schema) throw std::invalid_argument("config: unsupported schema_version");
        if (dim != 1 && dim != 2) throw std::invalid_argument("config: dim must be 1 or 2");
        mass_model.validate();
        if (epsilons.empty()) throw std::invalid_argument("config: empty epsilon list");
        for (double e : epsilons)
            if (!(e > 0 && e <= 0.5)) throw std::invalid_argument("config: every epsilon must lie in (0, 1/2]");
        if (realizations < 1) throw std::invalid_argument("config: realizations must be >= 1");
        if (!(T > 0)) throw std::invalid_argument("config: T must be positive");
        if (!(sigma > 0)) throw std::invalid_argument("config: sigma must be positive");
        if (sample_count < 2) throw std::invalid_argument("config: sample_count must be >= 2");
        if (!(dt_factor > 0 && dt_factor <= 0.5)) throw std::invalid_argument("config: dt_factor must lie in (0, 0.5]");
        if (mass_model.kind == MassKind::LayeredIidTwoPoint && dim != 2)
            throw std::invalid_argument("config: layered masses need dim 2");
        if (mass_model.kind == MassKind::PeriodicBiaxial && dim != 2)
            throw std::invalid_argument("config: biaxial periodic masses need dim 2");
        initial_data_for(*this);
    }

    static SmoothInitialData initial_data_for(const ExperimentConfig& c) { return homlat::initial_data(c.initial_data, c.dim); }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"schema_version", c.schema_version},
                       {"name", c.name},
                       {"dim", c.dim},
                       {"mass_model", c.mass_model},
                       {"epsilons", c.epsilons},
                       {"realizations", c.realizations},
                       {"base_seed", c.base_seed},
                       {"T", c.T},
                       {"sigma", c.sigma},
                       {"initial_data", c.initial_data},
                       {"dt_factor", c.dt_factor},
                       {"sample_count", c.sample_count},
                       {"safety", c.safety},
                       {"residuals", c.residuals},
                       {"coarse_grain", c.coarse_grain},
                       {"green_tolerance", c.green_tolerance},
                       {"budget", {{"max_memory_gb", c.budget.max_memory_gb}, {"max_minutes", c.budget.max_minutes}}}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c = ExperimentConfig{};
    c.schema_version = j.value("schema_version", 0);
    c.name = j.value("name", c.name);
    c.dim = j.value("dim", c.dim);
    if (j.contains("mass_model")) c.mass_model = j.at("mass_model").get<MassModel>();
    if (j.contains("epsilons")) c.epsilons = j.at("epsilons").get<std::vector<double>>();
    c.realizations = j.value("realizations", c.realizations);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.T = j.value("T", c.T);
    c.sigma = j.value("sigma", c.sigma);
    c.initial_data = j.value("initial_data", c.initial_data);
    c.dt_factor = j.value("dt_factor", c.dt_factor);
    c.sample_count = j.value("sample_count", c.sample_count);
    c.safety = j.value("safety", c.safety);
    c.residuals = j.value("residuals", c.residuals);
    c.coarse_grain = j.value("coarse_grain", c.coarse_grain);
    c.green_tolerance = j.value("green_tolerance", c.green_tolerance);
    if (j.contains("budget")) {
        c.budget.max_memory_gb = j["budget"].value("max_memory_gb", c.budget.max_memory_gb);
        c.budget.max_minutes = j["budget"].value("max_minutes", c.budget.max_minutes);
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("cannot open config " + file.string());
    const auto j = nlohmann::json::parse(is);
    auto c = j.get<ExperimentConfig>();
    c.validate();
    return c;
}

/// Canonical form: keys sorted, no whitespace.
inline std::string canonical_json(const ExperimentConfig& c) { return nlohmann::json(c).dump(); }

inline std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_json(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline std::uint64_t realization_seed(const ExperimentConfig& c, int r) { return c.base_seed + std::uint64_t(r); }

// ---------------------------------------------------------------------------
// Budget estimate.

struct CostEstimate {
    double memory_gb = 0.0;
    double minutes = 0.0;
    std::vector<int> window_half_extent;  // per ε
};

inline CostEstimate estimate_cost(const ExperimentConfig& c, int threads) {
    CostEstimate est;
    const auto data = ExperimentConfig::initial_data_for(c);
    const double a = c.mass_model.lower();
    const double speed = effective_speed(c.mass_model);
    for (double e : c.epsilons) {
        const auto sc = SimConfig::make(c.dim, e, c.T, a, data.support_radius, c.sample_count, c.safety, c.dt_factor);
        const int W = sc.window.half_extent(0);
        est.window_half_extent.push_back(W);
        const double sites = std::pow(2.0 * W + 1, c.dim);
        const double steps = c.T / e / sc.dt + c.sample_count;
        const auto g = WaveSolution::lattice_grid(c.dim, e, W, speed, c.T, data.support_radius);
        const double grid = double(g.size());
        const double fields = c.residuals ? 16.0 : 6.0;
        const double mem = c.realizations * sites * 8.0 * fields + grid * 8.0 * 12.0;
        est.memory_gb = std::max(est.memory_gb, mem / 1e9);
        double seconds = c.realizations * sites * steps * 4e-9 / std::max(1, threads);
        seconds += c.sample_count * grid * (c.residuals ? 6.0 : 2.0) * 3e-8;
        if (c.residuals) seconds += c.realizations * c.sample_count * sites * 60e-9 / std::max(1, threads);
        if (c.coarse_grain) seconds += c.realizations * c.sample_count * grid * 4e-9;
        est.minutes += seconds / 60.0;
    }
    return est;
}

// ---------------------------------------------------------------------------

inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = next++; i < n; i = next++) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Metric names written per (ε, realization), in row order.
inline std::vector<std::string> metric_names(const ExperimentConfig& c) {
    std::vector<std::string> m{"aed", "aev", "aed_rel", "aev_rel", "hamiltonian_drift", "boundary_ratio"};
    if (c.coarse_grain) {
        m.push_back("cg_displacement");
        m.push_back("cg_velocity");
    }
    if (c.residuals) {
        for (const char* s : {"residual_sup", "res_term1", "res_term2", "res_term3", "res_term4", "res_term5",
                              "res_assembly_gap", "corrector_pde", "microstate", "microstate_constant"})
            m.push_back(s);
    }
    return m;
}

struct InvariantReport {
    double max_hamiltonian_drift = 0.0;
    double max_boundary_ratio = 0.0;
    double max_assembly_gap = 0.0;
    double max_corrector_pde = 0.0;
    bool all_finite = true;
    std::vector<std::string> failures;
    bool passed() const { return failures.empty(); }

    void finalize(const ExperimentConfig& c) {
        failures.clear();
        if (!all_finite) failures.push_back("non-finite metric");
        if (max_hamiltonian_drift > 1e-4) failures.push_back("hamiltonian drift above 1e-4");
        if (max_boundary_ratio > 1e-8) failures.push_back("boundary energy above 1e-8 of total");
        if (c.residuals && max_assembly_gap > 1e-8) failures.push_back("five-term residual assembly gap above 1e-8");
        if (c.residuals && max_corrector_pde > 1e-8) failures.push_back("corrector PDE residual above 1e-8");
    }
};

struct RunOptions {
    int threads = 1;
    bool override_budget = false;
    std::filesystem::path green_cache;  // empty disables caching
    std::filesystem::path snapshot_dir; // final u of realization 0 per ε; empty disables
    std::function<void(const std::string&)> log;
};

struct RunResult {
    ErrorSeries series;
    InvariantReport invariants;
    std::filesystem::path csv;
    bool resumed = false;
};

/// All metrics of one realization at one ε.
namespace detail {

struct RealizationAccumulator {
    double aed = 0, aev = 0, u_norm = 0, p_norm = 0;
    double cg_u = 0, cg_p = 0;
    double res_sup = 0, terms[5] = {0, 0, 0, 0, 0}, gap = 0, pde = 0, micro = 0;
};

inline std::vector<ErrorRecord> run_epsilon(const ExperimentConfig& c, double eps, const GreenTable* green,
                                            const RunOptions& opt, InvariantReport& inv) {
    const auto data = ExperimentConfig::initial_data_for(c);
    const double speed = effective_speed(c.mass_model);
    const double mbar = c.mass_model.mean();
    const auto sc = SimConfig::make(c.dim, eps, c.T, c.mass_model.lower(), data.support_radius, c.sample_count,
                                    c.safety, c.dt_factor);
    const auto& window = sc.window;
    const int W = window.half_extent(0);
    const WaveSolution wave(data, speed, WaveSolution::lattice_grid(c.dim, eps, W, speed, c.T, data.support_radius));
    const double R = cutoff_radius(eps, speed, c.T, c.sigma);
    const int n = c.realizations;

    std::vector<std::unique_ptr<LatticeSimulation>> sims(n);
    std::vector<CorrectorField> chis(n);
    std::vector<Trajectory> traj(n);
    std::vector<RealizationAccumulator> acc(n);
    parallel_for(n, opt.threads, [&](int r) {
        const auto mf = sample_masses(c.mass_model, window, realization_seed(c, r));
        sims[r] = std::make_unique<LatticeSimulation>(sc, mf.masses, initialize(data, eps, window));
        if (c.residuals) {
            ScalarField z = fluctuation_field(mf);
            chis[r] = corrector(z, R, window, *green);
            acc[r].pde = verify_corrector_pde(chis[r], z).max_residual;
        }
    });

    ApproximateSolution ap;
    ap.eps = eps;
    ap.sigma = c.sigma;
    ap.radius = R;
    ap.variant = AnsatzVariant::Corrected;

    for (std::size_t k = 0; k < sc.sample_times.size(); ++k) {
        const double t = sc.sample_times[k];
        const double tau = eps * t;
        const auto snap = wave.evolve(tau, c.residuals ? 4 : 1, c.residuals);
        const auto sample = LatticeWaveSample::from(wave, snap, window);
        std::optional<BandLimitedSample> band;
        if (c.coarse_grain) band = band_limited_sample(wave, tau, eps);
        parallel_for(n, opt.threads, [&](int r) {
            auto& sim = *sims[r];
            sim.advance_to(t);
            const auto [total, shell] = sim.audit();
            traj[r].times.push_back(t);
            traj[r].hamiltonian.push_back(total);
            traj[r].boundary_energy.push_back(shell);
            const auto& st = sim.state();
            auto& a = acc[r];
            const auto e = absolute_errors_at(st, eps, sample.d[0], sample.d[1]);
            a.aed = std::max(a.aed, e.aed);
            a.aev = std::max(a.aev, e.aev);
            a.u_norm = std::max(a.u_norm, e.u_norm);
            a.p_norm = std::max(a.p_norm, e.p_norm);
            if (c.coarse_grain) {
                const auto cg = coarse_grain_error_at(st, *band);
                a.cg_u = std::max(a.cg_u, cg.displacement);
                a.cg_p = std::max(a.cg_p, cg.velocity);
            }
            if (c.residuals) {
                ApproximateSolution apr = ap;
                apr.corrector = &chis[r];
                const auto direct = residual_field(apr, sim.masses(), sample);
                const auto terms = residual_terms(apr, sim.masses(), mbar, sample);
                a.res_sup = std::max(a.res_sup, weighted_l2(direct));
                for (int q = 0; q < 5; ++q) a.terms[q] = std::max(a.terms[q], weighted_l2(terms[q]));
                a.gap = std::max(a.gap, residual_assembly_gap(direct, terms));
                a.micro = std::max(a.micro, microstate_error(st, eps, chis[r].chi, sample));
            }
        });
    }

    if (!opt.snapshot_dir.empty()) {
        SnapshotMeta meta;
        meta.eps = eps;
        meta.t = sims[0]->state().t;
        meta.seed = realization_seed(c, 0);
        meta.model_hash = config_hash(c);
        write_snapshot(opt.snapshot_dir / (c.name + "_eps" + format_double(eps) + "_u"), sims[0]->state().u, meta);
    }

    std::vector<ErrorRecord> rows;
    for (int r = 0; r < n; ++r) {
        const auto& a = acc[r];
        const auto seed = realization_seed(c, r);
        auto add = [&](const std::string& m, double v) {
            if (!std::isfinite(v)) inv.all_finite = false;
            rows.push_back({eps, r, seed, m, v});
        };
        const double drift = traj[r].max_relative_drift();
        const double bratio = traj[r].max_boundary_ratio();
        inv.max_hamiltonian_drift = std::max(inv.max_hamiltonian_drift, drift);
        inv.max_boundary_ratio = std::max(inv.max_boundary_ratio, bratio);
        add("aed", a.aed);
        add("aev", a.aev);
        add("aed_rel", a.u_norm > 0 ? a.aed / a.u_norm : 0.0);
        add("aev_rel", a.p_norm > 0 ? a.aev / a.p_norm : 0.0);
        add("hamiltonian_drift", drift);
        add("boundary_ratio", bratio);
        if (c.coarse_grain) {
            add("cg_displacement", a.cg_u);
            add("cg_velocity", a.cg_p);
        }
        if (c.residuals) {
            add("residual_sup", a.res_sup);
            for (int q = 0; q < 5; ++q) add("res_term" + std::to_string(q + 1), a.terms[q]);
            add("res_assembly_gap", a.gap);
            add("corrector_pde", a.pde);
            add("microstate", a.micro);
            add("microstate_constant", a.res_sup > 0 ? a.micro * eps / a.res_sup : 0.0);
            inv.max_assembly_gap = std::max(inv.max_assembly_gap, a.gap);
            inv.max_corrector_pde = std::max(inv.max_corrector_pde, a.pde);
        }
    }
    return rows;
}

}  // namespace detail

inline ErrorSeries series_header(const ExperimentConfig& c) {
    ErrorSeries s;
    s.metadata = {{"name", c.name},
                  {"config_hash", config_hash(c)},
                  {"config", canonical_json(c)},
                  {"mass_model", to_string(c.mass_model.kind)},
                  {"dim", std::to_string(c.dim)},
                  {"T", format_double(c.T)},
                  {"sigma", format_double(c.sigma)},
                  {"sample_count", std::to_string(c.sample_count)},
                  {"realizations", std::to_string(c.realizations)},
                  {"aggregation", "median"}};
    return s;
}

/// Runs the sweep and writes `<out_dir>/<name>.csv`. Rows are appended to a
/// `.partial` file one ε at a time; a rerun with the same config hash keeps
/// every complete ε block and recomputes the rest.
inline RunResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir, const RunOptions& opt) {
    c.validate();
    const auto est = estimate_cost(c, opt.threads);
    if (!opt.override_budget && (est.memory_gb > c.budget.max_memory_gb || est.minutes > c.budget.max_minutes)) {
        std::ostringstream os;
        os << "projected cost " << est.memory_gb << " GB / " << est.minutes << " min exceeds budget "
           << c.budget.max_memory_gb << " GB / " << c.budget.max_minutes << " min (use --override-budget)";
        throw std::runtime_error(os.str());
    }
    auto log = [&](const std::string& m) {
        if (opt.log) opt.log(m);
    };
    std::filesystem::create_directories(out_dir);
    RunResult result;
    result.csv = out_dir / (c.name + ".csv");
    const auto partial = std::filesystem::path(result.csv.string() + ".partial");
    const auto names = metric_names(c);
    const std::size_t per_eps = names.size() * std::size_t(c.realizations);
    const std::string hash = config_hash(c);

    ErrorSeries series = series_header(c);
    std::vector<double> done;
    if (std::filesystem::exists(partial)) {
        try {
            const auto prev = read_csv(partial);
            if (prev.meta("config_hash") == hash) {
                for (double e : prev.epsilons()) {
                    const auto count = std::count_if(prev.records.begin(), prev.records.end(),
                                                     [&](const ErrorRecord& r) { return r.epsilon == e; });
                    if (std::size_t(count) == per_eps) {
                        for (const auto& r : prev.records)
                            if (r.epsilon == e) series.records.push_back(r);
                        done.push_back(e);
                    }
                }
                result.resumed = !done.empty();
            }
        } catch (const std::exception&) {
        }
    }
    {
        std::ofstream os(partial, std::ios::trunc);
        write_header(os, series);
        for (const auto& r : series.records) write_row(os, r);
    }

    // Completed records of a resumed run keep their ε order below.
    std::vector<double> order = c.epsilons;
    std::sort(order.begin(), order.end());  // smallest ε is the heaviest

    GreenTable green;
    if (c.residuals) {
        int gmax = 0;
        const auto data = ExperimentConfig::initial_data_for(c);
        for (double e : c.epsilons) {
            const auto sc = SimConfig::make(c.dim, e, c.T, c.mass_model.lower(), data.support_radius, c.sample_count,
                                            c.safety, c.dt_factor);
            gmax = std::max(gmax, corrector_green_radius(cutoff_radius(e, effective_speed(c.mass_model), c.T, c.sigma),
                                                         sc.window));
        }
        bool hit = false;
        green = cached_green_function(c.dim, gmax, c.green_tolerance, opt.green_cache, GreenMethod::Quadrature, &hit);
        log("green table radius " + std::to_string(gmax) + (hit ? " (cache)" : ""));
    }

    InvariantReport inv;
    std::map<double, std::vector<ErrorRecord>> by_eps;
    for (double e : order) {
        if (std::find(done.begin(), done.end(), e) != done.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        auto rows = detail::run_epsilon(c, e, c.residuals ? &green : nullptr, opt, inv);
        {
            std::ofstream os(partial, std::ios::app);
            for (const auto& r : rows) write_row(os, r);
            os.flush();
        }
        by_eps[e] = std::move(rows);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log(c.name + ": epsilon=" + format_double(e) + " done in " + std::to_string(int(std::round(secs))) + " s");
    }
    // Rebuild in canonical ε order (config order) so the final file does not
    // depend on which blocks were resumed.
    ErrorSeries final_series = series_header(c);
    for (double e : c.epsilons) {
        if (by_eps.count(e)) {
            for (const auto& r : by_eps[e]) final_series.records.push_back(r);
        } else {
            for (const auto& r : series.records)
                if (r.epsilon == e) {
                    final_series.records.push_back(r);
                    if (r.metric == "hamiltonian_drift")
                        inv.max_hamiltonian_drift = std::max(inv.max_hamiltonian_drift, r.value);
                    if (r.metric == "boundary_ratio") inv.max_boundary_ratio = std::max(inv.max_boundary_ratio, r.value);
                    if (r.metric == "res_assembly_gap") inv.max_assembly_gap = std::max(inv.max_assembly_gap, r.value);
                    if (r.metric == "corrector_pde") inv.max_corrector_pde = std::max(inv.max_corrector_pde, r.value);
                    if (!std::isfinite(r.value)) inv.all_finite = false;
                }
        }
    }
    write_csv(partial, final_series);
    std::filesystem::rename(partial, result.csv);
    inv.finalize(c);
    result.series = std::move(final_series);
    result.invariants = inv;
    return result;
}

// ---------------------------------------------------------------------------
// Seven-row convergence table.

struct Table1Row {
    std::string label;
    std::string config_name;
    double target_aev = 0.0;
    double target_aed = 0.0;
    bool checked = false;  // compared against its target within ±0.3
    SlopeFit aev, aed;
    bool passed = true;
};

struct Table1Target {
    std::string label;
    std::string config_name;
    double aev, aed;
    bool checked;
};

inline std::vector<Table1Target> table1_targets() {
    return {{"1D Const. Coeff.", "table1_1d_const", 1.5, 0.5, true},
            {"1D Period. Coeff.", "table1_1d_periodic", 0.7, 0.5, false},
            {"1D Rando. Coeff.", "table1_1d_random", 0.2, -0.8, true},
            {"2D Const. Coeff", "table1_2d_const", 1.1, 0.0, true},
            {"2D Period. Coeff", "table1_2d_periodic", 0.1, 0.0, false},
            {"2D Rando. Coeff", "table1_2d_random", 0.1, -1.0, true},
            {"2D Layered Coeff", "table1_2d_layered", -0.4, -1.5, true}};
}

/// Built-in configuration for one table row.
inline ExperimentConfig table1_config(const std::string& config_name) {
    ExperimentConfig c;
    c.name = config_name;
    c.realizations = 10;
    if (config_name == "table1_1d_const") {
        c.dim = 1;
        c.mass_model = MassModel::constant(1.0);
        c.realizations = 1;
    } else if (config_name == "table1_1d_periodic") {
        c.dim = 1;
        c.mass_model = MassModel::periodic_layered({0.5, 1.5});
        c.realizations = 1;
    } else if (config_name == "table1_1d_random") {
        c.dim = 1;
        c.mass_model = MassModel::iid_two_point(0.5, 1.5);
    } else if (config_name == "table1_2d_const") {
        c.mass_model = MassModel::constant(1.0);
        c.realizations = 1;
    } else if (config_name == "table1_2d_periodic") {
        c.mass_model = MassModel::periodic_biaxial({0.5, 1.5, 1.5, 0.5});
        c.realizations = 1;
    } else if (config_name == "table1_2d_random") {
        c.mass_model = MassModel::iid_two_point(0.5, 1.5);
    } else if (config_name == "table1_2d_layered") {
        c.mass_model = MassModel::layered_two_point(0.5, 1.5, 0);
    } else {
        throw std::invalid_argument("unknown table row config " + config_name);
    }
    return c;
}

inline std::string format_table1(const std::vector<Table1Row>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(20) << "Mass/Dim." << std::right << std::setw(12) << "aev target" << std::setw(10)
       << "aev sim" << std::setw(8) << "+/-" << std::setw(12) << "aed target" << std::setw(10) << "aed sim"
       << std::setw(8) << "+/-" << "  check\n";
    os << std::fixed << std::setprecision(2);
    for (const auto& r : rows) {
        os << std::left << std::setw(20) << r.label << std::right << std::setw(12) << r.target_aev << std::setw(10)
           << r.aev.slope << std::setw(8) << r.aev.slope_stderr << std::setw(12) << r.target_aed << std::setw(10)
           << r.aed.slope << std::setw(8) << r.aed.slope_stderr << "  "
           << (r.checked ? (r.passed ? "pass" : "FAIL") : "report") << "\n";
    }
    return os.str();
}

inline Table1Row table1_row(const Table1Target& t, const ErrorSeries& s, double tolerance = 0.3) {
    Table1Row row;
    row.label = t.label;
    row.config_name = t.config_name;
    row.target_aev = t.aev;
    row.target_aed = t.aed;
    row.checked = t.checked;
    row.aev = fit_slope(s, "aev");
    row.aed = fit_slope(s, "aed");
    row.passed = !t.checked ||
                 (std::abs(row.aev.slope - t.aev) <= tolerance && std::abs(row.aed.slope - t.aed) <= tolerance);
    return row;
}

}  // namespace homlat
