#pragma once

/// @file lattice_sim.hpp
/// @brief Velocity-Verlet integration of m(j) ü = Δu on a Dirichlet-zero
///        window over |t| <= T/ε, with Hamiltonian and boundary-shell
///        energy audits and a flat binary snapshot dump.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "homlat/effective_wave.hpp"
#include "homlat/lattice.hpp"
#include "homlat/mass_models.hpp"

namespace homlat {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LatticeState {
    ScalarField u;  // displacement
    ScalarField p;  // velocity u̇
    double t = 0.0;
};

struct SimConfig {
    double eps = 0.25;
    double T = 1.0;
    double dt = 0.0;
    LatticeWindow window;
    std::vector<double> sample_times;
    int safety = 8;
    double mass_lower = 1.0;          // a
    double boundary_tolerance = 1e-8; // boundary-shell energy / total

    /// Largest stable step with safety factor 1/2: 0.5·√(a/2).
    double max_dt() const { return 0.5 * std::sqrt(mass_lower / 2.0); }

    /// Window half extent ⌈(R_d + T/√a)/ε⌉ + safety: the fastest lattice
    /// group velocity is 1/√a, so signals from the data support stay inside.
    static int window_half_extent(double eps, double T, double mass_lower, double data_radius, int safety) {
        return static_cast<int>(std::ceil((data_radius + T / std::sqrt(mass_lower)) / eps)) + safety;
    }

    /// Default configuration: dt = 0.25·√(a/2), `samples` evenly spaced
    /// sample times on [0, T/ε].
    static SimConfig make(int dim, double eps, double T, double mass_lower, double data_radius, int samples = 33,
                          int safety = 8, double dt_factor = 0.25) {
        SimConfig c;
        c.eps = eps;
        c.T = T;
        c.mass_lower = mass_lower;
        c.safety = safety;
        c.dt = dt_factor * std::sqrt(mass_lower / 2.0);
        c.window = LatticeWindow::square(dim, window_half_extent(eps, T, mass_lower, data_radius, safety));
        const double horizon = T / eps;
        for (int k = 0; k < samples; ++k) c.sample_times.push_back(horizon * k / (samples - 1));
        return c;
    }

    void validate() const {
        if (!(eps > 0 && eps <= 0.5)) throw std::invalid_argument("SimConfig: eps must lie in (0, 1/2]");
        if (!(T > 0)) throw std::invalid_argument("SimConfig: T must be positive");
        if (!(dt > 0)) throw std::invalid_argument("SimConfig: dt must be positive");
        if (dt > max_dt() * (1 + 1e-12))
            throw std::invalid_argument("SimConfig: dt exceeds the stability bound 0.5*sqrt(a/2)");
        if (sample_times.empty()) throw std::invalid_argument("SimConfig: no sample times");
        for (std::size_t k = 1; k < sample_times.size(); ++k)
            if (!(sample_times[k] > sample_times[k - 1]))
                throw std::invalid_argument("SimConfig: sample times must increase");
        if (sample_times.front() < 0) throw std::invalid_argument("SimConfig: sample times must be >= 0");
        if (safety < 1) throw std::invalid_argument("SimConfig: safety must be >= 1");
    }
};

/// u(j, 0) = ε⁻¹ φ(εj), p(j, 0) = ψ(εj).
inline LatticeState initialize(const SmoothInitialData& data, double eps, const LatticeWindow& window) {
    LatticeState s;
    const bool two = window.dim() == 2;
    s.u = ScalarField::from_function(window, [&](const Index& j) {
        return data.phi(eps * j[0], two ? eps * j[1] : 0.0) / eps;
    });
    s.p = ScalarField::from_function(window, [&](const Index& j) { return data.psi(eps * j[0], two ? eps * j[1] : 0.0); });
    s.t = 0.0;
    return s;
}

/// H = ½ Σ m p² + ½ Σ_i Σ_bonds (δ_i⁺u)², counting the bonds to the zero
/// wall on both faces. With `shell` > 0 only sites within `shell` layers of
/// the window edge (and bonds touching them) are counted.
inline double lattice_energy(const LatticeState& s, const ScalarField& masses, int shell = 0) {
    const auto& w = s.u.window();
    auto in_shell = [&](const Index& j) { return shell <= 0 || !w.is_interior(j, shell); };
    double kin = 0.0, pot = 0.0;
    w.for_each([&](const Index& j) {
        if (in_shell(j)) kin += masses[j] * s.p[j] * s.p[j];
        for (int a = 0; a < w.dim(); ++a) {
            const Index nb = j + unit(a);
            if (in_shell(j) || (w.contains(nb) && in_shell(nb))) {
                const double d = s.u.get(nb) - s.u[j];
                pot += d * d;
            }
            const Index lo = j - unit(a);
            if (!w.contains(lo) && in_shell(j)) pot += s.u[j] * s.u[j];
        }
    });
    return 0.5 * (kin + pot);
}

/// Velocity Verlet with the force Δu / m.
class VerletStepper {
public:
    explicit VerletStepper(const ScalarField& masses) : inv_mass_(masses), force_(masses.window()) {
        for (double& v : inv_mass_.values()) {
            if (!(v > 0)) throw std::invalid_argument("VerletStepper: masses must be positive");
            v = 1.0 / v;
        }
    }

    void step(LatticeState& s, double dt) {
        auto& u = s.u.values();
        auto& p = s.p.values();
        const auto& im = inv_mass_.values();
        const std::size_t n = u.size();
        if (!primed_) {
            discrete_laplacian_into(s.u, force_);
            primed_ = true;
        }
        const auto& f = force_.values();
        const double h = 0.5 * dt;
        for (std::size_t k = 0; k < n; ++k) p[k] += h * f[k] * im[k];
        for (std::size_t k = 0; k < n; ++k) u[k] += dt * p[k];
        discrete_laplacian_into(s.u, force_);
        for (std::size_t k = 0; k < n; ++k) p[k] += h * f[k] * im[k];
        s.t += dt;
    }

    /// Call after modifying u outside step().
    void invalidate() { primed_ = false; }

    static void check_finite(const LatticeState& s) {
        const auto& w = s.u.window();
        for (std::size_t k = 0; k < s.u.size(); ++k)
            if (!std::isfinite(s.u.values()[k]) || !std::isfinite(s.p.values()[k])) {
                const Index j = w.index_of(k);
                throw SimulationError("non-finite state at j=(" + std::to_string(j[0]) + "," + std::to_string(j[1]) +
                                      ") t=" + std::to_string(s.t));
            }
    }

private:
    ScalarField inv_mass_;
    ScalarField force_;
    bool primed_ = false;
};

/// One trajectory, advanced sample time by sample time.
class LatticeSimulation {
public:
    LatticeSimulation(const SimConfig& cfg, const ScalarField& masses, LatticeState initial)
        : cfg_(cfg), masses_(masses), state_(std::move(initial)), stepper_(masses) {
        cfg_.validate();
        if (!(masses.window() == cfg_.window) || !(state_.u.window() == cfg_.window))
            throw std::invalid_argument("LatticeSimulation: window mismatch");
        h0_ = lattice_energy(state_, masses_);
    }

    const LatticeState& state() const { return state_; }
    LatticeState& mutable_state() { return state_; }
    const ScalarField& masses() const { return masses_; }
    double initial_energy() const { return h0_; }
    std::size_t steps_taken() const { return steps_; }

    /// Steps to exactly t_target with a uniform step ≤ cfg.dt.
    void advance_to(double t_target) {
        const double span = t_target - state_.t;
        if (span < -1e-12) throw std::invalid_argument("advance_to: target lies in the past");
        if (span <= 1e-12) return;
        const auto n = static_cast<std::size_t>(std::ceil(span / cfg_.dt - 1e-9));
        const double dt = span / double(n);
        const double t0 = state_.t;
        for (std::size_t k = 0; k < n; ++k) stepper_.step(state_, dt);
        state_.t = t0 + span;
        steps_ += n;
        VerletStepper::check_finite(state_);
    }

    /// Current (total, boundary-shell) energies; throws if the shell share
    /// exceeds the configured tolerance.
    std::pair<double, double> audit() const {
        const double total = lattice_energy(state_, masses_);
        const double shell = lattice_energy(state_, masses_, cfg_.safety);
        if (total > 0 && shell > cfg_.boundary_tolerance * total) {
            std::ostringstream os;
            os << "boundary energy breach at t=" << state_.t << ": shell/total=" << shell / total;
            throw SimulationError(os.str());
        }
        return {total, shell};
    }

private:
    SimConfig cfg_;
    ScalarField masses_;
    LatticeState state_;
    VerletStepper stepper_;
    double h0_ = 0.0;
    std::size_t steps_ = 0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<LatticeState> snapshots;  // empty unless kept
    std::vector<double> hamiltonian;
    std::vector<double> boundary_energy;

    double max_relative_drift() const {
        double worst = 0.0;
        if (hamiltonian.empty() || hamiltonian.front() == 0.0) return 0.0;
        for (double h : hamiltonian) worst = std::max(worst, std::abs(h - hamiltonian.front()) / hamiltonian.front());
        return worst;
    }
    /// Least-squares slope of (H − H₀)/H₀ against time: zero for a bounded
    /// oscillation, nonzero for secular drift.
    double secular_drift_rate() const {
        const std::size_t n = hamiltonian.size();
        if (n < 2 || hamiltonian.front() == 0.0) return 0.0;
        double tm = 0.0, hm = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            tm += times[k] / n;
            hm += (hamiltonian[k] / hamiltonian.front() - 1.0) / n;
        }
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            sxy += (times[k] - tm) * (hamiltonian[k] / hamiltonian.front() - 1.0 - hm);
            sxx += (times[k] - tm) * (times[k] - tm);
        }
        return sxx > 0 ? sxy / sxx : 0.0;
    }
    double max_boundary_ratio() const {
        double worst = 0.0;
        for (std::size_t k = 0; k < hamiltonian.size(); ++k)
            if (hamiltonian[k] > 0) worst = std::max(worst, boundary_energy[k] / hamiltonian[k]);
        return worst;
    }
};

using SnapshotObserver = std::function<void(std::size_t, const LatticeState&)>;

/// Runs through every sample time, calling `observer` at each.
inline Trajectory run(const SimConfig& cfg, const ScalarField& masses, const SmoothInitialData& data,
                      const SnapshotObserver& observer = {}, bool keep_snapshots = false) {
    cfg.validate();
    LatticeSimulation sim(cfg, masses, initialize(data, cfg.eps, cfg.window));
    Trajectory tr;
    for (std::size_t k = 0; k < cfg.sample_times.size(); ++k) {
        sim.advance_to(cfg.sample_times[k]);
        const auto [total, shell] = sim.audit();
        tr.times.push_back(sim.state().t);
        tr.hamiltonian.push_back(total);
        tr.boundary_energy.push_back(shell);
        if (observer) observer(k, sim.state());
        if (keep_snapshots) tr.snapshots.push_back(sim.state());
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Snapshot dump: <stem>.bin holds the row-major doubles of u (axis 0
// outermost), <stem>.txt holds key=value metadata.

struct SnapshotMeta {
    int dim = 2;
    Index half_extent{0, 0};
    double eps = 0.0;
    double t = 0.0;
    std::uint64_t seed = 0;
    std::string model_hash;
    std::string field = "u";
};

inline void write_snapshot(const std::filesystem::path& stem, const ScalarField& f, const SnapshotMeta& meta) {
    if (!stem.parent_path().empty()) std::filesystem::create_directories(stem.parent_path());
    const auto bin = stem.string() + ".bin";
    const auto txt = stem.string() + ".txt";
    {
        std::ofstream os(bin, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write snapshot " + bin);
        os.write(reinterpret_cast<const char*>(f.data()), std::streamsize(f.size() * sizeof(double)));
    }
    std::ofstream os(txt);
    os.precision(17);
    os << "format=homlat-snapshot/1\n"
       << "dtype=float64\n"
       << "order=row-major\n"
       << "field=" << meta.field << "\n"
       << "dim=" << f.window().dim() << "\n"
       << "shape=" << f.window().extent(0) << "," << f.window().extent(1) << "\n"
       << "half_extent=" << f.window().half_extent(0) << "," << f.window().half_extent(1) << "\n"
       << "epsilon=" << meta.eps << "\n"
       << "t=" << meta.t << "\n"
       << "seed=" << meta.seed << "\n"
       << "model_hash=" << meta.model_hash << "\n";
}

inline ScalarField read_snapshot(const std::filesystem::path& stem, SnapshotMeta* meta = nullptr) {
    std::ifstream is(stem.string() + ".txt");
    if (!is) throw std::runtime_error("missing snapshot sidecar " + stem.string() + ".txt");
    SnapshotMeta m;
    std::string line;
    if (!std::getline(is, line) || line != "format=homlat-snapshot/1")
        throw std::runtime_error("unsupported snapshot sidecar " + stem.string() + ".txt");
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const auto key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "dim") m.dim = std::stoi(val);
        else if (key == "half_extent") {
            const auto c = val.find(',');
            m.half_extent = {std::stoi(val.substr(0, c)), std::stoi(val.substr(c + 1))};
        } else if (key == "epsilon") m.eps = std::stod(val);
        else if (key == "t") m.t = std::stod(val);
        else if (key == "seed") m.seed = std::stoull(val);
        else if (key == "model_hash") m.model_hash = val;
        else if (key == "field") m.field = val;
    }
    const LatticeWindow w(m.dim, m.half_extent);
    std::vector<double> v(w.size());
    std::ifstream bin(stem.string() + ".bin", std::ios::binary);
    bin.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    if (!bin) throw std::runtime_error("truncated snapshot " + stem.string() + ".bin");
    if (meta) *meta = m;
    return ScalarField(w, std::move(v));
}

}  // namespace homlat
