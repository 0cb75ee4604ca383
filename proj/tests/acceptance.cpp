// Acceptance suite: one line per criterion, nonzero exit when any selected criterion fails.
// Usage: acceptance [--only N]...

#include "ddlab/ddlab.hpp"
#include "golden.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>

using namespace ddlab;

namespace {

constexpr double kJ = 32.7e3;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

std::string fmt(const char* f, double v) {
    char b[64];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

PulseSequence unit_tau(PulseSequence s) {
    s.tau = 1.0;
    return s;
}

Outcome aht_identities() {
    Outcome o;
    SpinSystem ring = SpinSystem::chain(4, Boundary::periodic, 1.0);
    AhtOperators ops(ring, {});
    o.require(max_abs(ring.D[0] + ring.D[1] + ring.D[2]) <= 1e-12, "Dx+Dy+Dz != 0");

    PulseSequence w = unit_tau(sequence_library("WAHUHA"));
    o.require(zeroth_order(w).tallies == std::array<int, 3>{2, 2, 2}, "WAHUHA tallies");
    o.require(max_abs(zeroth_order_numeric(w, ops, TermSelector::interaction)) <= 1e-12, "WAHUHA H0 numeric");

    PulseSequence e = unit_tau(sequence_library("SolidEcho"));
    o.require(zeroth_order(e).reduced() == std::array<int, 3>{0, 1, 1}, "solid echo tallies");
    Mat h0 = zeroth_order_numeric(e, ops, TermSelector::interaction);
    o.require(max_abs(h0 + 0.5 * ring.D[0]) <= 1e-12, "solid echo H0 != -Dx/2");

    PulseSequence i6 = unit_tau(sequence_library("Ideal6"));
    i6 = rotate(i6, static_cast<long>(i6.size()) - 1);
    for (std::size_t k = 3; k <= i6.size(); k += 3) {
        auto lab = interaction_labels(trajectory(i6)).substr(k - 3, 3);
        o.require(std::set<char>(lab.begin(), lab.end()).size() == 3, "Ideal6 block labels");
        PulseSequence head = i6;
        head.actions.resize(k);
        o.require(zeroth_order(head).interaction_vanishes(), "Ideal6 prefix tallies");
        o.require(max_abs(zeroth_order_numeric(head, ops, TermSelector::interaction)) <= 1e-12, "Ideal6 H0 numeric");
    }
    return o;
}

Outcome yxx_guarantee() {
    Outcome o;
    SpinSystem ring = SpinSystem::chain(4, Boundary::periodic, 1.0);
    AhtOperators ops(ring, {});
    const double tol = 1e-12 * max_abs(commutator(ring.D[0], ring.D[1]));
    Rng rng = make_stream(2024, 0, 0, 0, StreamTag::sample);
    double worst = 0;
    int bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        int B = 2 * (1 + static_cast<int>(rng() % 8));
        std::vector<int> s(3 * B);
        for (auto& v : s) v = (rng() & 1) ? 1 : -1;
        PulseSequence p = yxx_expand(s, 1.0);
        if (!zeroth_order(p).interaction_vanishes()) ++bad;
        double h1 = max_abs(first_order_numeric(p, ops, TermSelector::interaction));
        worst = std::max(worst, h1);
        if (h1 > tol) ++bad;
    }
    o.require(bad == 0, std::to_string(bad) + " violations");
    o.note("max |H1|=" + fmt("%.2e", worst) + " tol=" + fmt("%.2e", tol));
    return o;
}

Outcome length_theorem() {
    Outcome o;
    auto rep = theorem1_enumerate(8);
    std::ostringstream d;
    for (const auto& r : rep.lengths) {
        if (r.L == 6)
            o.require(r.both >= 1 && r.ideal6, "L=6 lacks Ideal6");
        else
            o.require(r.both == 0, "L=" + std::to_string(r.L) + " has passing sequences");
        if (r.L >= 6) d << "L" << r.L << ":" << r.both << " ";
    }
    o.note("passing counts " + d.str());
    return o;
}

Outcome golden_table() {
    Outcome o;
    for (const auto& [name, toks] : golden::kTable)
        o.require(to_tokens(sequence_library(name).actions) == toks, name + " differs");
    PulseSequence a = sequence_library("Angle12");
    // symmetric form, pi shift on the box, back to the original alignment, then append the shifted copy
    PulseSequence mod = rotate(phase_shift_pi(rotate(a, 2), {4, 5, 6, 7}), 10);
    o.require(zeroth_order(mod).field_vanishes(), "modified Angle12 keeps a zeroth-order field");
    PulseSequence built = concat(mod, phase_shift_pi_all(mod));
    PulseSequence want = sequence_library("yxx24");
    long hit = -1;
    for (long k = 0; k < static_cast<long>(built.size()) && hit < 0; ++k)
        if (rotate(built, k).actions == want.actions) hit = k;
    o.require(hit >= 0, "yxx24 pipeline mismatch");
    o.note("yxx24 matched at rotation " + std::to_string(hit));
    return o;
}

Outcome invariances() {
    Outcome o;
    SpinSystem sys = SpinSystem::chain(6, Boundary::periodic, kJ);
    CycleCompiler cc(sys, {});
    double worst_f = 0, worst_u = 0;
    for (const auto& name : library_names()) {
        PulseSequence s = sequence_library(name);
        s.tau = 5e-6;
        const int M = static_cast<int>(s.size());
        Mat U = cc.compile(s);
        worst_u = std::max(worst_u, unitarity_error(U));
        double F = propagator_fidelity(U, M);
        for (long k = 1; k < M; ++k) {
            Mat R = cc.compile(rotate(s, k));
            worst_u = std::max(worst_u, unitarity_error(R));
            worst_f = std::max(worst_f, std::abs(propagator_fidelity(R, M) - F));
        }
        Mat P = cc.compile(phase_shift_pi_all(s));
        worst_u = std::max(worst_u, unitarity_error(P));
        worst_f = std::max(worst_f, std::abs(propagator_fidelity(P, M) - F));
    }
    o.require(worst_f <= 1e-9, "fidelity not invariant");
    o.require(worst_u <= 1e-10, "unitarity");
    o.note("max dF=" + fmt("%.2e", worst_f) + " max unitarity err=" + fmt("%.2e", worst_u));
    return o;
}

SweepSpec panel_spec(const std::string& seq, SweepAxis axis, std::vector<double> grid) {
    SweepSpec s;
    s.sequence = seq;
    s.axis = axis;
    s.grid = std::move(grid);
    s.n_spins = 8;
    s.boundary = Boundary::periodic;
    s.J = kJ;
    s.tau = 10e-6;
    s.correlation_slots = 0;
    s.realizations = 20;
    s.seed = 6;
    return s;
}

std::vector<double> infidelities(const SweepResult& r) {
    std::vector<double> v;
    for (const auto& p : r.points) v.push_back(p.mean.infidelity);
    return v;
}

Outcome panels() {
    Outcome o;
    // (a) tau scaling
    std::vector<double> taus{1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 50, 70, 100};
    std::map<std::string, double> slope;
    for (const char* n : {"Cory48", "Ideal6", "Angle12", "yxx24", "yxx48"}) {
        auto r = run_sweep(panel_spec(n, SweepAxis::tau, taus));
        slope[n] = scaling_fit(taus, infidelities(r)).slope;
    }
    std::ostringstream sl;
    for (const auto& [n, v] : slope) {
        sl << n << "=" << fmt("%.2f", v) << " ";
        if (n != "Cory48") o.require(slope["Cory48"] > v, "(a) Cory48 slope <= " + n);
    }
    o.note("(a) slopes " + sl.str());

    // (b) large offsets
    std::vector<double> big{3, 4, 5};
    auto off48 = infidelities(run_sweep(panel_spec("Offset48", SweepAxis::offset, big)));
    auto cory_big = infidelities(run_sweep(panel_spec("Cory48", SweepAxis::offset, big)));
    std::ostringstream b;
    for (std::size_t i = 0; i < big.size(); ++i) {
        b << big[i] << ":" << fmt("%.2e", off48[i]) << "/" << fmt("%.2e", cory_big[i]) << " ";
        o.require(off48[i] < cory_big[i], "(b) Offset48 >= Cory48 at offset/J=" + fmt("%g", big[i]));
    }
    o.note("(b) Offset48/Cory48 " + b.str());

    // (c) plateau region
    std::vector<double> mid{0.5, 0.75, 1.0};
    auto cory_mid = infidelities(run_sweep(panel_spec("Cory48", SweepAxis::offset, mid)));
    std::ostringstream c;
    for (const char* n : {"yxx24", "yxx48"}) {
        auto v = infidelities(run_sweep(panel_spec(n, SweepAxis::offset, mid)));
        for (std::size_t i = 0; i < mid.size(); ++i) {
            c << n << "@" << mid[i] << ":" << fmt("%.2e", v[i]) << " ";
            o.require(v[i] < cory_mid[i], std::string("(c) ") + n + " >= Cory48 at offset/J=" + fmt("%g", mid[i]));
        }
    }
    o.note("(c) " + c.str());

    // (d) disorder tracks offset
    std::vector<double> common{0.25, 0.5, 1.0, 2.0};
    double worst = 1;
    for (const char* n : {"yxx24", "yxx48"}) {
        auto off = infidelities(run_sweep(panel_spec(n, SweepAxis::offset, common)));
        auto dis = infidelities(run_sweep(panel_spec(n, SweepAxis::disorder_W, common)));
        for (std::size_t i = 0; i < common.size(); ++i) {
            double ratio = std::max(off[i], dis[i]) / std::max(std::min(off[i], dis[i]), 1e-300);
            worst = std::max(worst, ratio);
        }
    }
    o.require(worst <= 3.0, "(d) disorder/offset ratio " + fmt("%.2f", worst));
    o.note("(d) worst ratio " + fmt("%.2f", worst));
    return o;
}

Outcome equivalence() {
    Outcome o;
    SpinSystem ring = SpinSystem::chain(4, Boundary::periodic, kJ);
    for (const char* n : {"yxx48", "yxx24"}) {
        PulseSequence s = sequence_library(n);
        auto rep = offset_disorder_equivalence(s, ring, 20, kJ, 7, kJ);
        double worst = rep.offset_cross;
        for (double v : rep.disorder_cross) worst = std::max(worst, v);
        o.require(rep.vanishes(), std::string(n) + " cross term survives");
        o.note(std::string(n) + " max cross=" + fmt("%.2e", worst) + " tol=" + fmt("%.2e", rep.tolerance));
    }
    return o;
}

Outcome surrogate() {
    Outcome o;
    std::vector<SweepSpec> specs;
    auto add = [&](const char* seq, SweepAxis axis, std::vector<double> grid) {
        SweepSpec s;
        s.sequence = seq;
        s.axis = axis;
        s.grid = std::move(grid);
        s.n_spins = 6;
        s.tau = 5e-6;
        s.fidelity_slots = 72;
        s.correlation_slots = 72;
        s.fixed = json{{"pulse_width_us", 1.0}};
        specs.push_back(s);
    };
    for (const char* n : {"Ideal6", "Angle12", "yxx24", "yxx48", "Cory48"}) {
        add(n, SweepAxis::tau, {2, 4, 6, 8, 10, 14, 20});
        add(n, SweepAxis::offset, {0.1, 0.3, 1, 2, 4});
        add(n, SweepAxis::angle_error, {0.005, 0.01, 0.02, 0.04, 0.08});
    }
    for (auto& s : specs)
        if (s.axis == SweepAxis::tau) s.fixed = json{{"pulse_width_us", 0.5}};
    auto rep = fidelity_vs_cavg_report(specs);
    o.require(rep.rank_correlation >= 0.9, "rank correlation " + fmt("%.3f", rep.rank_correlation));
    o.note("rank correlation " + fmt("%.3f", rep.rank_correlation) + " over " + std::to_string(rep.rows.size()) +
           " points");

    // 48/96 rule against the exact 72-slot value
    SpinSystem sys = SpinSystem::chain(6, Boundary::periodic, kJ);
    double worst = 0;
    int checked = 0;
    for (const auto& s : specs) {
        PulseSequence q = load_sequence(s.sequence);
        const int M = static_cast<int>(q.size());
        if (72 % M == 0) continue;
        for (double v : s.grid) {
            PulseSequence p = q;
            p.tau = s.axis == SweepAxis::tau ? v * 1e-6 : s.tau;
            ImperfectionSet imp = imperfection_from_json(s.fixed, 6, kJ, p.tau);
            if (s.axis == SweepAxis::offset) imp.offset = v * kJ;
            if (s.axis == SweepAxis::angle_error) imp.angle_error = v;
            Mat U = CycleCompiler(sys, imp).compile(p);
            Metrics m = evaluate_cycle(U, M, sys, 72, 72);
            double exact = cavg_exact(U, M, sys, 72);
            if (exact <= 0.5) continue;
            worst = std::max(worst, std::abs(m.cavg - exact));
            ++checked;
        }
    }
    o.require(checked > 0, "no points checked");
    o.require(worst <= 0.02, "48/96 rule error " + fmt("%.4f", worst));
    o.note("48/96 rule max error " + fmt("%.2e", worst) + " over " + std::to_string(checked) + " points");
    return o;
}

Outcome training() {
    Outcome o;
    EvolutionConfig base;
    base.M = 12;
    base.population = 201;
    base.parents = 21;
    base.generations = 100;
    base.mu0 = 0.05;
    base.h1 = 128;
    base.h2 = 64;
    o.require(mutation_power(50, base) == 0.025, "mu(50)");
    o.require(mutation_power(100, base) == 0.0, "mu(100)");

    RewardModel ideal(base);
    const double threshold = ideal(sequence_library("Angle12"));
    int hits = 0;
    bool monotone = true;
    std::ostringstream d;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        EvolutionConfig c = base;
        c.seed = seed;
        auto r = train(c);
        for (std::size_t g = 1; g < r.records.size(); ++g)
            monotone = monotone && r.records[g].elite_reward >= r.records[g - 1].elite_reward;
        double got = ideal(r.best);
        if (got >= threshold - 1e-9) ++hits;
        d << fmt("%.3f", got) << " ";
        std::fprintf(stderr, "seed %llu: reward %.6f (%s)\n", static_cast<unsigned long long>(seed), got,
                     to_tokens(r.best.actions).c_str());
    }
    o.require(monotone, "elite reward decreased");
    o.require(hits >= 8, std::to_string(hits) + "/10 seeds reach threshold");
    o.note(std::to_string(hits) + "/10 seeds reach " + fmt("%.3f", threshold) + "; rewards " + d.str());
    return o;
}

Outcome determinism() {
    Outcome o;
    EvolutionConfig c;
    c.M = 12;
    c.population = 41;
    c.parents = 5;
    c.generations = 10;
    c.h1 = 32;
    c.h2 = 32;
    c.seed = 99;
    c.workers = 1;
    std::string a = curve_csv(train(c).records);
    c.workers = 2;
    std::string b = curve_csv(train(c).records);
    o.require(a == b, "curves differ");
    o.note(std::to_string(a.size()) + " bytes compared");
    return o;
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& criteria() {
    static const std::vector<std::pair<const char*, std::function<Outcome()>>> c{
        {"AHT identities", aht_identities},
        {"yxx first-order guarantee", yxx_guarantee},
        {"length theorem by enumeration", length_theorem},
        {"golden sequence table", golden_table},
        {"fidelity invariances", invariances},
        {"simulation panels", panels},
        {"offset/disorder equivalence", equivalence},
        {"correlation surrogate", surrogate},
        {"training reproduction", training},
        {"training determinism", determinism},
    };
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only.insert(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: acceptance [--only N]...\n");
            return 2;
        }
    }
    int failed = 0;
    const auto& all = criteria();
    for (std::size_t k = 0; k < all.size(); ++k) {
        int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = all[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d: %s  %s (%.1fs) %s\n", id, o.pass ? "PASS" : "FAIL", all[k].first, secs,
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed ? 1 : 0;
}
