#pragma once

#include "ddlab/evolution.hpp"
#include "ddlab/sequence.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

namespace ddlab {

using json = nlohmann::json;

inline constexpr int kConfigVersion = 1;

namespace detail {

inline void check_version(const json& j, const char* what) {
    if (!j.is_object()) throw InputError(std::string(what) + ": expected a JSON object");
    if (!j.contains("version")) throw InputError(std::string(what) + ": missing 'version'");
    if (j.at("version") != kConfigVersion)
        throw InputError(std::string(what) + ": unsupported version " + j.at("version").dump());
}

inline void check_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw InputError(std::string(what) + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json& j, const char* key, T dflt) {
    if (!j.contains(key)) return dflt;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline Boundary parse_boundary(const std::string& s) {
    if (s == "open") return Boundary::open;
    if (s == "periodic") return Boundary::periodic;
    throw InputError("unknown boundary '" + s + "'");
}

}  // namespace detail

// Imperfection units: offset_J / disorder_W_J in units of the coupling J (or *_krad in krad/s),
// pulse_width_us in microseconds or pulse_width_tau as a fraction of tau, alpha1/alpha2 in rad.
inline ImperfectionSet imperfection_from_json(const json& j, int n_spins, double J, double tau) {
    using detail::get_or;
    if (!j.is_object()) throw InputError("imperfection set must be a JSON object");
    detail::check_keys(j, {"offset_J", "offset_krad", "angle_error", "pulse_width_us", "pulse_width_tau", "alpha1",
                           "alpha2", "disorder_W_J", "disorder_W_krad", "disorder_seed"},
                       "imperfection");
    ImperfectionSet s;
    s.offset = get_or(j, "offset_J", 0.0) * J + get_or(j, "offset_krad", 0.0) * 1e3;
    s.angle_error = get_or(j, "angle_error", 0.0);
    s.pulse_width = get_or(j, "pulse_width_us", 0.0) * 1e-6 + get_or(j, "pulse_width_tau", 0.0) * tau;
    s.alpha1 = get_or(j, "alpha1", 0.0);
    s.alpha2 = get_or(j, "alpha2", 0.0);
    double W = get_or(j, "disorder_W_J", 0.0) * J + get_or(j, "disorder_W_krad", 0.0) * 1e3;
    if (W != 0.0) s.disorder = make_disorder(n_spins, W, get_or<std::uint64_t>(j, "disorder_seed", 1));
    validate(s, tau);
    return s;
}

inline EvolutionConfig evolution_config_from_json(const json& j) {
    using detail::get_or;
    detail::check_version(j, "evolution config");
    detail::check_keys(j, {"version", "population", "parents", "generations", "mu0", "rollouts_per_agent",
                           "elite_rollouts", "M", "mode", "hidden", "n_spins", "boundary", "J_krad", "tau_us", "seed",
                           "workers", "conditions"},
                       "evolution config");
    EvolutionConfig c;
    c.population = get_or(j, "population", c.population);
    c.parents = get_or(j, "parents", c.parents);
    c.generations = get_or(j, "generations", c.generations);
    c.mu0 = get_or(j, "mu0", c.mu0);
    c.rollouts_per_agent = get_or(j, "rollouts_per_agent", c.rollouts_per_agent);
    c.elite_rollouts = get_or(j, "elite_rollouts", c.elite_rollouts);
    c.M = get_or(j, "M", c.M);
    c.mode = parse_mode(get_or<std::string>(j, "mode", "full5"));
    if (j.contains("hidden")) {
        auto h = get_or<std::vector<int>>(j, "hidden", {});
        if (h.size() != 2) throw InputError("'hidden' must list two layer sizes");
        c.h1 = h[0];
        c.h2 = h[1];
    }
    c.n_spins = get_or(j, "n_spins", c.n_spins);
    c.boundary = detail::parse_boundary(get_or<std::string>(j, "boundary", "open"));
    c.J = get_or(j, "J_krad", c.J / 1e3) * 1e3;
    c.tau = get_or(j, "tau_us", c.tau * 1e6) * 1e-6;
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.workers = get_or(j, "workers", c.workers);
    if (j.contains("conditions")) {
        if (!j.at("conditions").is_array()) throw InputError("'conditions' must be an array");
        c.conditions.clear();
        for (const auto& e : j.at("conditions")) c.conditions.push_back(imperfection_from_json(e, c.n_spins, c.J, c.tau));
    }
    c.validate();
    return c;
}

// "M" may also be a list: one stage per length, each with a fresh population.
inline std::vector<EvolutionConfig> evolution_stages_from_json(const json& j) {
    if (!j.is_object() || !j.contains("M") || !j.at("M").is_array()) return {evolution_config_from_json(j)};
    if (j.at("M").empty()) throw InputError("'M' list is empty");
    std::vector<EvolutionConfig> out;
    for (const auto& m : j.at("M")) {
        json s = j;
        s["M"] = m;
        out.push_back(evolution_config_from_json(s));
    }
    return out;
}

inline json parse_json_text(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string(what) + ": " + e.what());
    }
}

}  // namespace ddlab
