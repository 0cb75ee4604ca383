#pragma once

#include "ddlab/core.hpp"
#include "ddlab/spin.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ddlab {

// Order is part of the genome/state encoding; do not reorder.
enum class Action : std::uint8_t { Delay = 0, Px = 1, Mx = 2, Py = 3, My = 4 };

inline constexpr std::array<Action, 5> kAllActions{Action::Delay, Action::Px, Action::Mx,
                                                   Action::Py, Action::My};

inline bool is_pulse(Action a) { return a != Action::Delay; }

inline std::string_view token_of(Action a) {
    static constexpr std::array<std::string_view, 5> t{"d", "x", "-x", "y", "-y"};
    return t[static_cast<int>(a)];
}

inline Action parse_token(std::string_view s) {
    for (Action a : kAllActions)
        if (token_of(a) == s) return a;
    throw InputError("unknown action token '" + std::string(s) + "'");
}

// pi phase shift: x <-> -x, y <-> -y
inline Action flip(Action a) {
    switch (a) {
        case Action::Px: return Action::Mx;
        case Action::Mx: return Action::Px;
        case Action::Py: return Action::My;
        case Action::My: return Action::Py;
        default: return a;
    }
}

inline Axis pulse_axis(Action a) { return (a == Action::Px || a == Action::Mx) ? Axis::x : Axis::y; }
inline double pulse_sign(Action a) { return (a == Action::Px || a == Action::Py) ? 1.0 : -1.0; }

struct PulseSequence {
    std::vector<Action> actions;
    double tau = 5e-6;  // seconds, center-to-center slot length
    std::string name;

    std::size_t size() const { return actions.size(); }
    std::size_t delays() const { return std::count(actions.begin(), actions.end(), Action::Delay); }
    bool operator==(const PulseSequence& o) const { return actions == o.actions && tau == o.tau; }
};

inline std::string to_tokens(const std::vector<Action>& acts) {
    std::string s;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        if (i) s += ' ';
        s += token_of(acts[i]);
    }
    return s;
}

inline std::vector<Action> parse_tokens(std::string_view text) {
    std::vector<Action> out;
    std::istringstream is{std::string(text)};
    std::string tok;
    while (is >> tok) {
        if (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (!tok.empty()) out.push_back(parse_token(tok));
    }
    return out;
}

struct ImperfectionSet {
    double offset = 0.0;                         // Delta, rad/s
    std::optional<DisorderRealization> disorder; // w_j, rad/s
    double angle_error = 0.0;                    // epsilon
    double pulse_width = 0.0;                    // t_w, seconds
    double alpha1 = 0.0, alpha2 = 0.0;           // transient angles, rad

    bool ideal_pulses() const {
        return angle_error == 0.0 && pulse_width == 0.0 && alpha1 == 0.0 && alpha2 == 0.0;
    }
};

inline void validate(const PulseSequence& s) {
    if (s.actions.empty()) throw InputError("sequence is empty");
    if (!(s.tau > 0) || !std::isfinite(s.tau)) throw InputError("tau must be positive");
}

inline void validate(const ImperfectionSet& imp, double tau) {
    if (!(imp.pulse_width >= 0.0) || !(imp.pulse_width < tau))
        throw InputError("pulse width must satisfy 0 <= t_w < tau");
}

inline PulseSequence symmetrize(const PulseSequence& s) {
    PulseSequence r = s;
    for (auto it = s.actions.rbegin(); it != s.actions.rend(); ++it) r.actions.push_back(flip(*it));
    r.name = s.name.empty() ? "" : s.name + "_sym";
    return r;
}

inline PulseSequence rotate(const PulseSequence& s, long n) {
    long M = static_cast<long>(s.size());
    if (n < 0 || n >= std::max(M, 1L))
        throw InputError("rotate: n=" + std::to_string(n) + " outside [0," + std::to_string(M) + ")");
    PulseSequence r = s;
    std::rotate(r.actions.begin(), r.actions.begin() + n, r.actions.end());
    return r;
}

inline PulseSequence phase_shift_pi(const PulseSequence& s, const std::vector<std::size_t>& idx) {
    PulseSequence r = s;
    std::vector<bool> hit(s.size(), false);
    for (auto i : idx) {
        if (i >= s.size()) throw InputError("phase_shift_pi: index " + std::to_string(i) + " out of range");
        if (!is_pulse(s.actions[i]))
            throw InputError("phase_shift_pi: index " + std::to_string(i) + " is a delay");
        if (hit[i]) continue;
        hit[i] = true;
        r.actions[i] = flip(r.actions[i]);
    }
    return r;
}

inline PulseSequence phase_shift_pi_all(const PulseSequence& s) {
    PulseSequence r = s;
    for (auto& a : r.actions) a = flip(a);
    return r;
}

inline PulseSequence concat(const PulseSequence& a, const PulseSequence& b) {
    PulseSequence r = a;
    r.actions.insert(r.actions.end(), b.actions.begin(), b.actions.end());
    return r;
}

// (+-y, +-x, +-x) blocks
inline PulseSequence yxx_expand(const std::vector<int>& signs, double tau = 5e-6) {
    if (signs.empty() || signs.size() % 3 != 0)
        throw InputError("yxx_expand: length " + std::to_string(signs.size()) + " is not a positive multiple of 3");
    PulseSequence r;
    r.tau = tau;
    r.actions.reserve(signs.size());
    for (std::size_t k = 0; k < signs.size(); ++k) {
        if (signs[k] != 1 && signs[k] != -1) throw InputError("yxx_expand: signs must be +1 or -1");
        bool y = (k % 3 == 0);
        bool plus = signs[k] > 0;
        r.actions.push_back(y ? (plus ? Action::Py : Action::My) : (plus ? Action::Px : Action::Mx));
    }
    return r;
}

inline bool is_yxx_pattern(const PulseSequence& s) {
    if (s.size() == 0 || s.size() % 3) return false;
    for (std::size_t k = 0; k < s.size(); ++k) {
        Action a = s.actions[k];
        if (!is_pulse(a) || pulse_axis(a) != (k % 3 == 0 ? Axis::y : Axis::x)) return false;
    }
    return true;
}

inline std::vector<int> yxx_signs(const PulseSequence& s) {
    if (!is_yxx_pattern(s)) throw InputError("sequence is not a yxx pattern");
    std::vector<int> out;
    for (Action a : s.actions) out.push_back(pulse_sign(a) > 0 ? 1 : -1);
    return out;
}

inline std::vector<int> parse_signs(std::string_view text) {
    std::vector<int> out;
    for (char c : text) {
        if (c == '+') out.push_back(1);
        else if (c == '-') out.push_back(-1);
        else if (c == ' ' || c == ',' || c == '\n' || c == '\t') continue;
        else throw InputError(std::string("bad sign character '") + c + "'");
    }
    return out;
}

// ---- on-disk format -------------------------------------------------------------------------
//   # comment
//   name=<label>          (optional)
//   tau_us=<value>        (required, before any tokens)
//   <tokens from {d, x, -x, y, -y}, whitespace separated, any line breaks>

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view s, const char* what) {
    std::string t = trim(s);
    double v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw InputError(std::string("cannot parse ") + what + " '" + t + "'");
    return v;
}

inline PulseSequence parse_sequence_file(std::string_view text) {
    PulseSequence s;
    bool have_tau = false;
    std::istringstream is{std::string(text)};
    std::string line;
    std::string body;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        if (auto eq = t.find('='); eq != std::string::npos) {
            std::string key = trim(std::string_view(t).substr(0, eq));
            std::string val = trim(std::string_view(t).substr(eq + 1));
            if (key == "tau_us") {
                double us = parse_double(val, "tau_us");
                if (!(us > 0)) throw InputError("tau_us must be positive");
                s.tau = us * 1e-6;
                have_tau = true;
            } else if (key == "name") {
                s.name = val;
            } else {
                throw InputError("unknown header key '" + key + "'");
            }
            continue;
        }
        if (!have_tau) throw InputError("missing tau_us header before actions");
        body += t;
        body += ' ';
    }
    if (!have_tau) throw InputError("missing tau_us header");
    s.actions = parse_tokens(body);
    if (s.actions.empty()) throw InputError("sequence file has no actions");
    return s;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline std::string emit_sequence_file(const PulseSequence& s) {
    std::string out;
    if (!s.name.empty()) out += "name=" + s.name + "\n";
    out += "tau_us=" + format_double(s.tau * 1e6) + "\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += token_of(s.actions[i]);
        out += (i + 1 == s.size() || (i + 1) % 12 == 0) ? '\n' : ' ';
    }
    return out;
}

}  // namespace ddlab
