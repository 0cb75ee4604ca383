#pragma once

#include "ddlab/compile.hpp"
#include "ddlab/config.hpp"
#include "ddlab/library.hpp"
#include "ddlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace ddlab {

enum class SweepAxis { tau, offset, angle_error, pulse_width, disorder_W };

inline SweepAxis parse_sweep_axis(const std::string& s) {
    if (s == "tau") return SweepAxis::tau;
    if (s == "offset") return SweepAxis::offset;
    if (s == "angle_error") return SweepAxis::angle_error;
    if (s == "pulse_width") return SweepAxis::pulse_width;
    if (s == "disorder_W") return SweepAxis::disorder_W;
    throw InputError("unknown sweep axis '" + s + "'");
}

inline const char* sweep_axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::tau: return "tau";
        case SweepAxis::offset: return "offset";
        case SweepAxis::angle_error: return "angle_error";
        case SweepAxis::pulse_width: return "pulse_width";
        default: return "disorder_W";
    }
}

// Grid units: tau and pulse_width in microseconds, offset and disorder_W in units of J,
// angle_error dimensionless.
struct SweepSpec {
    std::string sequence = "Ideal6";  // library name or file path
    SweepAxis axis = SweepAxis::tau;
    std::vector<double> grid;
    json fixed = json::object();      // imperfections held fixed (imperfection JSON)
    int n_spins = 8;
    Boundary boundary = Boundary::periodic;
    double J = 32.7e3;
    double tau = 10e-6;               // used unless the axis is tau
    int fidelity_slots = 72;          // F = |Tr U^{t/M}|/2^N at t = fidelity_slots * tau
    int correlation_slots = 72;       // correlations at this time; 0 disables them
    int realizations = 20;            // disorder axis only
    std::uint64_t seed = 1;
    int workers = 0;
    std::string output;

    void validate() const {
        if (grid.empty()) throw InputError("sweep grid is empty");
        if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("sweep grid must be sorted");
        if (axis == SweepAxis::disorder_W && realizations < 1) throw InputError("disorder sweep needs realizations >= 1");
        if (fidelity_slots < 1) throw InputError("fidelity_slots must be >= 1");
        if (correlation_slots < 0) throw InputError("correlation_slots must be >= 0");
        if (!(tau > 0)) throw InputError("tau must be positive");
        SpinBasis(n_spins, boundary);
    }
};

inline SweepSpec sweep_spec_from_json(const json& j) {
    using detail::get_or;
    detail::check_version(j, "sweep spec");
    detail::check_keys(j, {"version", "sequence", "axis", "grid", "fixed", "n_spins", "boundary", "J_krad", "tau_us",
                           "fidelity_slots", "correlation_slots", "realizations", "seed", "workers", "output"},
                       "sweep spec");
    SweepSpec s;
    s.sequence = get_or<std::string>(j, "sequence", s.sequence);
    s.axis = parse_sweep_axis(get_or<std::string>(j, "axis", "tau"));
    s.grid = get_or<std::vector<double>>(j, "grid", {});
    if (j.contains("fixed")) s.fixed = j.at("fixed");
    s.n_spins = get_or(j, "n_spins", s.n_spins);
    s.boundary = detail::parse_boundary(get_or<std::string>(j, "boundary", "periodic"));
    s.J = get_or(j, "J_krad", s.J / 1e3) * 1e3;
    s.tau = get_or(j, "tau_us", s.tau * 1e6) * 1e-6;
    s.fidelity_slots = get_or(j, "fidelity_slots", s.fidelity_slots);
    s.correlation_slots = get_or(j, "correlation_slots", s.correlation_slots);
    s.realizations = get_or(j, "realizations", s.realizations);
    s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
    s.workers = get_or(j, "workers", s.workers);
    s.output = get_or<std::string>(j, "output", "");
    s.validate();
    return s;
}

struct Metrics {
    double infidelity = 0;
    double cxx = 1, cyy = 1, czz = 1, cavg = 1;
};

inline double average_at_72tau(double c48, double c96) { return 0.5 * (c48 + c96); }

// U^p on the principal branch via the Schur form (U normal, so T is diagonal)
inline Mat fractional_power(const Mat& U, double p) {
    Eigen::ComplexSchur<Mat> schur(U, true);
    if (schur.info() != Eigen::Success) throw NumericalError("fractional_power: Schur failed");
    const Mat& T = schur.matrixT();
    CVec d(T.rows());
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        double a = std::arg(T(k, k));
        if (a <= -std::numbers::pi) a = std::numbers::pi;
        d(k) = std::polar(1.0, a * p);
    }
    return schur.matrixU() * d.asDiagonal() * schur.matrixU().adjoint();
}

// correlations sampled at an integer number of cycles
inline std::array<double, 3> correlations_at(const Mat& Ut, const SpinSystem& sys) {
    return {correlation_of(Ut, sys.C[0], sys.basis.n_spins), correlation_of(Ut, sys.C[1], sys.basis.n_spins),
            correlation_of(Ut, sys.C[2], sys.basis.n_spins)};
}

// Fidelity at fidelity_slots*tau, correlations at correlation_slots*tau. When the correlation
// time is not a whole number of cycles, the floor/ceil cycle counts are averaged.
inline Metrics evaluate_cycle(const Mat& U, int M, const SpinSystem& sys, int fidelity_slots, int correlation_slots) {
    Metrics m;
    double F = trace_fidelity(eigenphases(U), static_cast<double>(fidelity_slots) / M);
    m.infidelity = std::clamp(1.0 - F, 0.0, 1.0);
    if (correlation_slots == 0) return m;
    auto at = [&](long n) {
        auto c = correlations_at(matrix_power(U, n), sys);
        return std::array<double, 4>{c[0], c[1], c[2], average_correlation(c[0], c[1], c[2])};
    };
    if (correlation_slots % M == 0) {
        auto c = at(correlation_slots / M);
        m.cxx = c[0], m.cyy = c[1], m.czz = c[2], m.cavg = c[3];
    } else {
        long n1 = correlation_slots / M;
        auto a = at(n1), b = at(n1 + 1);
        m.cxx = average_at_72tau(a[0], b[0]);
        m.cyy = average_at_72tau(a[1], b[1]);
        m.czz = average_at_72tau(a[2], b[2]);
        m.cavg = average_at_72tau(a[3], b[3]);
    }
    return m;
}

// C_avg at t = slots*tau through the Floquet Hamiltonian, for non-integer cycle counts
inline double cavg_exact(const Mat& U, int M, const SpinSystem& sys, int slots) {
    auto c = correlations_at(fractional_power(U, static_cast<double>(slots) / M), sys);
    return average_correlation(c[0], c[1], c[2]);
}

struct SweepPoint {
    double value = 0;
    Metrics mean;
    Metrics stdev;  // ensemble axes only
    int realizations = 1;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::tau;
    bool ensemble = false;
    std::string sequence;
    std::vector<SweepPoint> points;
};

inline SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    PulseSequence seq = load_sequence(spec.sequence);
    SpinSystem sys = SpinSystem::chain(spec.n_spins, spec.boundary, spec.J);
    const bool ens = spec.axis == SweepAxis::disorder_W;
    const int R = ens ? spec.realizations : 1;
    const std::size_t P = spec.grid.size();
    const int M = static_cast<int>(seq.size());

    std::vector<Metrics> raw(P * R);
    parallel_for(P * R, spec.workers, [&](std::size_t task) {
        std::size_t p = task / R;
        int r = static_cast<int>(task % R);
        double v = spec.grid[p];
        PulseSequence s = seq;
        s.tau = spec.axis == SweepAxis::tau ? v * 1e-6 : spec.tau;
        if (!(s.tau > 0)) throw InputError("tau grid values must be positive");
        ImperfectionSet imp = imperfection_from_json(spec.fixed, spec.n_spins, spec.J, s.tau);
        switch (spec.axis) {
            case SweepAxis::offset: imp.offset = v * spec.J; break;
            case SweepAxis::angle_error: imp.angle_error = v; break;
            case SweepAxis::pulse_width: imp.pulse_width = v * 1e-6; break;
            case SweepAxis::disorder_W: {
                Rng rng = make_stream(spec.seed, p, static_cast<std::uint64_t>(r), 0, StreamTag::disorder);
                imp.disorder = make_disorder(spec.n_spins, v * spec.J, rng());
                break;
            }
            default: break;
        }
        validate(imp, s.tau);
        Mat U = CycleCompiler(sys, imp).compile(s);
        raw[task] = evaluate_cycle(U, M, sys, spec.fidelity_slots, spec.correlation_slots);
    });

    SweepResult res;
    res.axis = spec.axis;
    res.ensemble = ens;
    res.sequence = seq.name;
    for (std::size_t p = 0; p < P; ++p) {
        SweepPoint pt;
        pt.value = spec.grid[p];
        pt.realizations = R;
        auto stat = [&](auto field, double& mean, double& sd) {
            double s = 0, s2 = 0;
            for (int r = 0; r < R; ++r) s += field(raw[p * R + r]);
            mean = s / R;
            for (int r = 0; r < R; ++r) s2 += std::pow(field(raw[p * R + r]) - mean, 2);
            sd = R > 1 ? std::sqrt(s2 / (R - 1)) : 0.0;
        };
        stat([](const Metrics& m) { return m.infidelity; }, pt.mean.infidelity, pt.stdev.infidelity);
        stat([](const Metrics& m) { return m.cxx; }, pt.mean.cxx, pt.stdev.cxx);
        stat([](const Metrics& m) { return m.cyy; }, pt.mean.cyy, pt.stdev.cyy);
        stat([](const Metrics& m) { return m.czz; }, pt.mean.czz, pt.stdev.czz);
        stat([](const Metrics& m) { return m.cavg; }, pt.mean.cavg, pt.stdev.cavg);
        res.points.push_back(pt);
    }
    return res;
}

// CSV schema v1: value,infidelity,c_xx,c_yy,c_zz,c_avg[,infidelity_std,c_avg_std,realizations]
inline std::string sweep_csv(const SweepResult& r) {
    std::string out = "value,infidelity,c_xx,c_yy,c_zz,c_avg";
    if (r.ensemble) out += ",infidelity_std,c_avg_std,realizations";
    out += '\n';
    char buf[256];
    for (const auto& p : r.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", p.value, p.mean.infidelity, p.mean.cxx,
                      p.mean.cyy, p.mean.czz, p.mean.cavg);
        out += buf;
        if (r.ensemble) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%d", p.stdev.infidelity, p.stdev.cavg, p.realizations);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

struct SlopeFit {
    double slope = 0, stderr_ = 0;
    int n = 0;
};

// least-squares slope of log y vs log x; default window: two decades above the smallest x
// with y above the clamp-safe floor
inline SlopeFit scaling_fit(const std::vector<double>& x, const std::vector<double>& y, double lo = 0, double hi = 0) {
    if (x.size() != y.size()) throw InputError("scaling_fit: size mismatch");
    std::vector<double> lx, ly;
    if (lo == 0 && hi == 0) {
        double xmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x.size(); ++i)
            if (y[i] > 1e-10 && x[i] > 0) xmin = std::min(xmin, x[i]);
        lo = xmin;
        hi = xmin * 100.0;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lo || x[i] > hi) continue;
        if (!(x[i] > 0) || !(y[i] > 0)) throw InputError("scaling_fit: non-positive data in window");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    int n = static_cast<int>(lx.size());
    if (n < 2) throw InputError("scaling_fit: fewer than two points in window");
    double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n, my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0) throw InputError("scaling_fit: degenerate x values");
    SlopeFit f;
    f.n = n;
    f.slope = sxy / sxx;
    double rss = 0;
    for (int i = 0; i < n; ++i) rss += std::pow(ly[i] - my - f.slope * (lx[i] - mx), 2);
    f.stderr_ = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    return f;
}

inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> rk(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        double r = 0.5 * (i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rk[idx[k]] = r;
        i = j + 1;
    }
    return rk;
}

// Spearman rank correlation; 1 when both inputs are constant and equal-length
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw InputError("spearman: size mismatch");
    auto ra = average_ranks(a), rb = average_ranks(b);
    double n = static_cast<double>(a.size());
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0 && sbb == 0) return 1.0;
    if (saa == 0 || sbb == 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

struct SurrogateRow {
    std::string sequence;
    SweepAxis axis;
    double value;
    double infidelity, one_minus_cavg;
};

struct SurrogateReport {
    std::vector<SurrogateRow> rows;
    double rank_correlation = 1.0;
};

// Pairs (1-F, 1-C_avg) at the same evaluation time over every sweep given.
inline SurrogateReport fidelity_vs_cavg_report(const std::vector<SweepSpec>& sweeps) {
    SurrogateReport rep;
    std::vector<double> a, b;
    for (const auto& s : sweeps) {
        auto r = run_sweep(s);
        for (const auto& p : r.points) {
            rep.rows.push_back({r.sequence, r.axis, p.value, p.mean.infidelity, 1.0 - p.mean.cavg});
            a.push_back(p.mean.infidelity);
            b.push_back(1.0 - p.mean.cavg);
        }
    }
    if (!a.empty()) rep.rank_correlation = spearman(a, b);
    return rep;
}

}  // namespace ddlab
