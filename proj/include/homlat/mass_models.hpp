#pragma once

/// @file mass_models.hpp
/// @brief Reproducible mass fields: constant, i.i.d. two-point, i.i.d.
///        uniform, layered i.i.d., and period-2 (biaxial or layered) masses.
///
/// Draws are keyed by (seed, index) through a counter-based hash, so a mass
/// at a given site never depends on iteration order or on the window size.
/// Growing the window keeps every previously drawn value.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "homlat/lattice.hpp"

namespace homlat {

enum class MassKind { Constant, IidTwoPoint, IidUniform, LayeredIidTwoPoint, PeriodicBiaxial, PeriodicLayered };

inline const char* to_string(MassKind k) {
    switch (k) {
        case MassKind::Constant: return "constant";
        case MassKind::IidTwoPoint: return "iid_two_point";
        case MassKind::IidUniform: return "iid_uniform";
        case MassKind::LayeredIidTwoPoint: return "layered_iid_two_point";
        case MassKind::PeriodicBiaxial: return "periodic_biaxial";
        case MassKind::PeriodicLayered: return "periodic_layered";
    }
    return "?";
}

inline MassKind mass_kind_from_string(const std::string& s) {
    for (auto k : {MassKind::Constant, MassKind::IidTwoPoint, MassKind::IidUniform, MassKind::LayeredIidTwoPoint,
                   MassKind::PeriodicBiaxial, MassKind::PeriodicLayered})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown mass model kind: " + s);
}

/// A mass distribution. Parameters not used by a kind are ignored.
///
///  - Constant: every mass equals `value`.
///  - IidTwoPoint: `low` with probability `p_low`, else `high`.
///  - IidUniform: uniform on [low, high].
///  - LayeredIidTwoPoint: two-point draws along `layered_axis` (0-based),
///    constant along the other axis.
///  - PeriodicBiaxial: m(j) = values[(j1 mod 2) + 2 (j2 mod 2)].
///  - PeriodicLayered: m(j) = values[j_axis mod 2] along `layered_axis`.
struct MassModel {
    MassKind kind = MassKind::Constant;
    double value = 1.0;
    double low = 0.5;
    double high = 1.5;
    double p_low = 0.5;
    int layered_axis = 0;
    std::vector<double> values;

    static MassModel constant(double v) {
        MassModel m;
        m.kind = MassKind::Constant;
        m.value = v;
        return m;
    }
    static MassModel iid_two_point(double low, double high, double p_low = 0.5) {
        MassModel m;
        m.kind = MassKind::IidTwoPoint;
        m.low = low;
        m.high = high;
        m.p_low = p_low;
        return m;
    }
    static MassModel iid_uniform(double a, double b) {
        MassModel m;
        m.kind = MassKind::IidUniform;
        m.low = a;
        m.high = b;
        return m;
    }
    static MassModel layered_two_point(double low, double high, int layered_axis = 0, double p_low = 0.5) {
        MassModel m = iid_two_point(low, high, p_low);
        m.kind = MassKind::LayeredIidTwoPoint;
        m.layered_axis = layered_axis;
        return m;
    }
    static MassModel periodic_biaxial(std::vector<double> cell) {
        MassModel m;
        m.kind = MassKind::PeriodicBiaxial;
        m.values = std::move(cell);
        return m;
    }
    static MassModel periodic_layered(std::vector<double> cell, int layered_axis = 0) {
        MassModel m;
        m.kind = MassKind::PeriodicLayered;
        m.values = std::move(cell);
        m.layered_axis = layered_axis;
        return m;
    }

    bool is_random() const {
        return kind == MassKind::IidTwoPoint || kind == MassKind::IidUniform || kind == MassKind::LayeredIidTwoPoint;
    }

    /// Lower bound a of the support.
    double lower() const {
        switch (kind) {
            case MassKind::Constant: return value;
            case MassKind::PeriodicBiaxial:
            case MassKind::PeriodicLayered: return *std::min_element(values.begin(), values.end());
            default: return low;
        }
    }
    /// Upper bound b of the support.
    double upper() const {
        switch (kind) {
            case MassKind::Constant: return value;
            case MassKind::PeriodicBiaxial:
            case MassKind::PeriodicLayered: return *std::max_element(values.begin(), values.end());
            default: return high;
        }
    }

    /// Analytic mean m̄ (cell average for periodic kinds).
    double mean() const {
        switch (kind) {
            case MassKind::Constant: return value;
            case MassKind::IidTwoPoint:
            case MassKind::LayeredIidTwoPoint: return p_low * low + (1.0 - p_low) * high;
            case MassKind::IidUniform: return 0.5 * (low + high);
            case MassKind::PeriodicBiaxial:
            case MassKind::PeriodicLayered: {
                double s = 0.0;
                for (double v : values) s += v;
                return s / double(values.size());
            }
        }
        return 0.0;
    }

    /// Analytic per-site variance (spatial variance over a cell for periodic kinds).
    double variance() const {
        const double mu = mean();
        switch (kind) {
            case MassKind::Constant: return 0.0;
            case MassKind::IidTwoPoint:
            case MassKind::LayeredIidTwoPoint:
                return p_low * (low - mu) * (low - mu) + (1.0 - p_low) * (high - mu) * (high - mu);
            case MassKind::IidUniform: return (high - low) * (high - low) / 12.0;
            case MassKind::PeriodicBiaxial:
            case MassKind::PeriodicLayered: {
                double s = 0.0;
                for (double v : values) s += (v - mu) * (v - mu);
                return s / double(values.size());
            }
        }
        return 0.0;
    }

    void validate() const {
        switch (kind) {
            case MassKind::Constant:
                if (!(value > 0)) throw std::invalid_argument("mass model: constant mass must be positive");
                break;
            case MassKind::IidTwoPoint:
            case MassKind::IidUniform:
            case MassKind::LayeredIidTwoPoint:
                if (!(low > 0)) throw std::invalid_argument("mass model: lower bound a must be positive");
                if (low > high) throw std::invalid_argument("mass model: low > high");
                if (!(p_low >= 0 && p_low <= 1)) throw std::invalid_argument("mass model: p_low outside [0,1]");
                if (kind == MassKind::LayeredIidTwoPoint && (layered_axis < 0 || layered_axis > 1))
                    throw std::invalid_argument("mass model: layered_axis must be 0 or 1");
                break;
            case MassKind::PeriodicBiaxial:
            case MassKind::PeriodicLayered: {
                const std::size_t need = kind == MassKind::PeriodicBiaxial ? 4 : 2;
                if (values.size() != need)
                    throw std::invalid_argument("mass model: periodic cell needs " + std::to_string(need) + " values");
                for (double v : values)
                    if (!(v > 0)) throw std::invalid_argument("mass model: periodic masses must be positive");
                if (layered_axis < 0 || layered_axis > 1)
                    throw std::invalid_argument("mass model: layered_axis must be 0 or 1");
                break;
            }
        }
    }

    friend bool operator==(const MassModel&, const MassModel&) = default;
};

inline void to_json(nlohmann::json& j, const MassModel& m) {
    j = nlohmann::json{{"kind", to_string(m.kind)}};
    switch (m.kind) {
        case MassKind::Constant: j["value"] = m.value; break;
        case MassKind::IidTwoPoint: j.update({{"low", m.low}, {"high", m.high}, {"p_low", m.p_low}}); break;
        case MassKind::IidUniform: j.update({{"low", m.low}, {"high", m.high}}); break;
        case MassKind::LayeredIidTwoPoint:
            j.update({{"low", m.low}, {"high", m.high}, {"p_low", m.p_low}, {"layered_axis", m.layered_axis}});
            break;
        case MassKind::PeriodicBiaxial: j["values"] = m.values; break;
        case MassKind::PeriodicLayered: j.update({{"values", m.values}, {"layered_axis", m.layered_axis}}); break;
    }
}

inline void from_json(const nlohmann::json& j, MassModel& m) {
    m = MassModel{};
    m.kind = mass_kind_from_string(j.at("kind").get<std::string>());
    m.value = j.value("value", 1.0);
    m.low = j.value("low", 0.5);
    m.high = j.value("high", 1.5);
    m.p_low = j.value("p_low", 0.5);
    m.layered_axis = j.value("layered_axis", 0);
    if (j.contains("values")) m.values = j.at("values").get<std::vector<double>>();
    m.validate();
}

// Counter-based generator: a stateless mix of (seed, stream, counter).
namespace rng {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_key(std::uint64_t seed, std::int64_t a, std::int64_t b = 0) {
    std::uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dULL);
    h = mix64(h ^ static_cast<std::uint64_t>(a));
    h = mix64(h ^ (static_cast<std::uint64_t>(b) * 0xd6e8feb86659fd93ULL));
    return h;
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t key) { return double(key >> 11) * 0x1.0p-53; }

}  // namespace rng

struct MassField {
    ScalarField masses;
    MassModel model;
    std::uint64_t seed = 0;

    const LatticeWindow& window() const { return masses.window(); }
    double mean() const { return model.mean(); }
};

namespace detail {
inline int mod2(int v) { return ((v % 2) + 2) % 2; }
}  // namespace detail

/// Mass at a single site; the same for every window containing j.
inline double mass_at(const MassModel& model, std::uint64_t seed, const Index& j) {
    switch (model.kind) {
        case MassKind::Constant: return model.value;
        case MassKind::IidTwoPoint:
            return rng::uniform01(rng::hash_key(seed, j[0], j[1])) < model.p_low ? model.low : model.high;
        case MassKind::IidUniform:
            return model.low + (model.high - model.low) * rng::uniform01(rng::hash_key(seed, j[0], j[1]));
        case MassKind::LayeredIidTwoPoint: {
            const int k = j[model.layered_axis];
            return rng::uniform01(rng::hash_key(seed, k, 0x1a7e5ed)) < model.p_low ? model.low : model.high;
        }
        case MassKind::PeriodicBiaxial: return model.values[detail::mod2(j[0]) + 2 * detail::mod2(j[1])];
        case MassKind::PeriodicLayered: return model.values[detail::mod2(j[model.layered_axis])];
    }
    return 0.0;
}

inline MassField sample_masses(const MassModel& model, const LatticeWindow& window, std::uint64_t seed) {
    model.validate();
    MassField mf{ScalarField::from_function(window, [&](const Index& j) { return mass_at(model, seed, j); }), model,
                 seed};
    return mf;
}

/// z(j) = m(j) − m̄ with the analytic mean.
inline ScalarField fluctuation_field(const MassField& mf) {
    const double mbar = mf.mean();
    ScalarField z = mf.masses;
    for (double& v : z.values()) v -= mbar;
    return z;
}

/// c = m̄^{-1/2}.
inline double effective_speed(const MassModel& model) { return 1.0 / std::sqrt(model.mean()); }
inline double effective_speed(const MassField& mf) { return effective_speed(mf.model); }

}  // namespace homlat
