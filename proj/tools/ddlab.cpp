// ddlab: simulate, sweep, train, aht, enumerate, transform.
// Exit codes: 0 ok, 2 bad input, 3 numerical failure. Errors print one line on stderr:
//   error:input:<message>   or   error:numerical:<message>

#include "ddlab/ddlab.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace ddlab;

namespace {

std::string one_line(std::string s) {
    for (auto& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

struct SystemOpts {
    int n = 8;
    bool pbc = false;
    double J_krad = 32.7;
    double tau_us = -1;  // <0: take from the sequence
};

struct ImpOpts {
    double offset_J = 0, angle_error = 0, pulse_width_us = 0, alpha1 = 0, alpha2 = 0, disorder_W_J = 0;
    std::uint64_t disorder_seed = 1;
};

void add_system(CLI::App* app, SystemOpts& o) {
    app->add_option("--n", o.n, "number of spins")->capture_default_str();
    app->add_flag("--pbc", o.pbc, "periodic boundary (default open)");
    app->add_option("--J-krad", o.J_krad, "nearest-neighbour coupling, krad/s")->capture_default_str();
    app->add_option("--tau-us", o.tau_us, "slot length in microseconds (default: from the sequence)");
}

void add_imperfections(CLI::App* app, ImpOpts& o) {
    app->add_option("--offset-J", o.offset_J, "frequency offset in units of J");
    app->add_option("--angle-error", o.angle_error, "relative pulse angle error");
    app->add_option("--pulse-width-us", o.pulse_width_us, "finite pulse width, microseconds");
    app->add_option("--alpha1", o.alpha1, "trailing transient angle, rad");
    app->add_option("--alpha2", o.alpha2, "leading transient angle, rad");
    app->add_option("--disorder-W-J", o.disorder_W_J, "disorder half-width in units of J");
    app->add_option("--disorder-seed", o.disorder_seed, "disorder realization seed");
}

ImperfectionSet make_imperfections(const ImpOpts& o, int n, double J, double tau) {
    ImperfectionSet s;
    s.offset = o.offset_J * J;
    s.angle_error = o.angle_error;
    s.pulse_width = o.pulse_width_us * 1e-6;
    s.alpha1 = o.alpha1;
    s.alpha2 = o.alpha2;
    if (o.disorder_W_J != 0) s.disorder = make_disorder(n, o.disorder_W_J * J, o.disorder_seed);
    validate(s, tau);
    return s;
}

PulseSequence load_with_tau(const std::string& name, double tau_us) {
    PulseSequence s = load_sequence(name);
    if (tau_us > 0) s.tau = tau_us * 1e-6;
    else if (tau_us == 0) throw InputError("--tau-us must be positive");
    return s;
}

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    write_binary_file(path, text);
}

std::string fmt(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.12g", v);
    return b;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ddlab: decoupling-sequence workbench"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "one sequence, one condition: fidelity and correlations");
    std::string sim_seq;
    SystemOpts sim_sys;
    ImpOpts sim_imp;
    int sim_fslots = 0, sim_cslots = 72;
    bool sim_json = false;
    sim->add_option("--seq", sim_seq, "library name or sequence file")->required();
    add_system(sim, sim_sys);
    add_imperfections(sim, sim_imp);
    sim->add_option("--fidelity-slots", sim_fslots, "evaluate F at this many slots (default: one slot, t=tau)");
    sim->add_option("--correlation-slots", sim_cslots, "correlation time in slots (0 disables)")->capture_default_str();
    sim->add_flag("--json", sim_json, "JSON output");

    // sweep
    auto* sw = app.add_subcommand("sweep", "run a SweepSpec JSON file and emit CSV");
    std::string sw_spec, sw_out;
    int sw_workers = -1;
    sw->add_option("spec", sw_spec, "sweep spec JSON")->required();
    sw->add_option("--out", sw_out, "CSV path (overrides spec.output; '-' for stdout)");
    sw->add_option("--workers", sw_workers, "worker threads");

    // train
    auto* tr = app.add_subcommand("train", "neuroevolution run from an EvolutionConfig JSON file");
    std::string tr_cfg, tr_out;
    bool tr_resume = false, tr_quiet = false;
    int tr_workers = -1;
    tr->add_option("config", tr_cfg, "training config JSON")->required();
    tr->add_option("--out", tr_out, "checkpoint directory")->required();
    tr->add_flag("--resume", tr_resume, "continue from the checkpoint in --out");
    tr->add_option("--workers", tr_workers, "worker threads (does not change results)");
    tr->add_flag("--quiet", tr_quiet, "no per-generation progress");

    // aht
    auto* ah = app.add_subcommand("aht", "average Hamiltonian report (JSON)");
    std::string ah_seq;
    SystemOpts ah_sys;
    ah_sys.n = 4;
    ImpOpts ah_imp;
    ah->add_option("--seq", ah_seq, "library name or sequence file")->required();
    add_system(ah, ah_sys);
    add_imperfections(ah, ah_imp);

    // enumerate
    auto* en = app.add_subcommand("enumerate", "exhaustive length theorem check");
    int en_max = 6, en_workers = 0, en_n = 4;
    en->add_option("--max-len", en_max, "largest length to enumerate")->capture_default_str();
    en->add_option("--workers", en_workers, "worker threads");
    en->add_option("--n", en_n, "spins used for the first-order check")->capture_default_str();

    // transform
    auto* tf = app.add_subcommand("transform", "sequence file transforms");
    tf->require_subcommand(1);
    std::string tf_in, tf_out = "-", tf_name;
    long tf_n = 0;
    std::vector<std::size_t> tf_idx;
    std::string tf_signs;
    double tf_tau_us = 5;
    auto io = [&](CLI::App* s, bool input) {
        if (input) s->add_option("--in", tf_in, "input sequence (library name or file)")->required();
        s->add_option("--out", tf_out, "output file ('-' for stdout)");
        s->add_option("--name", tf_name, "name written to the output header");
    };
    auto* t_sym = tf->add_subcommand("symmetrize", "append the reversed, pi-shifted copy");
    io(t_sym, true);
    auto* t_rot = tf->add_subcommand("rotate", "move the first n actions to the end");
    io(t_rot, true);
    t_rot->add_option("--n", tf_n, "shift")->required();
    auto* t_ps = tf->add_subcommand("phase-shift", "pi phase shift on selected pulse indices");
    io(t_ps, true);
    t_ps->add_option("--indices", tf_idx, "0-based indices")->delimiter(',');
    auto* t_pi = tf->add_subcommand("pi-shift", "pi phase shift on every pulse");
    io(t_pi, true);
    auto* t_yxx = tf->add_subcommand("yxx-expand", "build a yxx sequence from a sign string like '+--+--'");
    io(t_yxx, false);
    t_yxx->add_option("--signs", tf_signs, "signs, length a multiple of 3")->required();
    t_yxx->add_option("--tau-us", tf_tau_us, "slot length, microseconds")->capture_default_str();

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            throw InputError(e.what());
        }

        if (*sim) {
            PulseSequence s = load_with_tau(sim_seq, sim_sys.tau_us);
            const double J = sim_sys.J_krad * 1e3;
            SpinSystem sys = SpinSystem::chain(sim_sys.n, sim_sys.pbc ? Boundary::periodic : Boundary::open, J);
            ImperfectionSet imp = make_imperfections(sim_imp, sim_sys.n, J, s.tau);
            const int M = static_cast<int>(s.size());
            if (sim_cslots < 0) throw InputError("--correlation-slots must be >= 0");
            Mat U = compile_cycle(s, imp, sys);
            Metrics m = evaluate_cycle(U, M, sys, sim_fslots > 0 ? sim_fslots : 1, sim_cslots);
            double F = 1.0 - m.infidelity;
            if (sim_json) {
                json j{{"sequence", s.name}, {"M", M},          {"tau_us", s.tau * 1e6}, {"fidelity", F},
                       {"infidelity", m.infidelity}, {"reward", reward(F)}, {"correlation_slots", sim_cslots}};
                if (sim_cslots) j.update(json{{"c_xx", m.cxx}, {"c_yy", m.cyy}, {"c_zz", m.czz}, {"c_avg", m.cavg}});
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << "fidelity=" << fmt(F) << " infidelity=" << fmt(m.infidelity) << " reward=" << fmt(reward(F))
                          << "\n";
                if (sim_cslots)
                    std::cout << "c_xx=" << fmt(m.cxx) << " c_yy=" << fmt(m.cyy) << " c_zz=" << fmt(m.czz)
                              << " c_avg=" << fmt(m.cavg) << " t_slots=" << sim_cslots << "\n";
            }
        } else if (*sw) {
            SweepSpec spec = sweep_spec_from_json(parse_json_text(read_text_file(sw_spec), "sweep spec"));
            if (sw_workers >= 0) spec.workers = sw_workers;
            std::string out = sw_out.empty() ? spec.output : sw_out;
            write_or_print(out, sweep_csv(run_sweep(spec)));
        } else if (*tr) {
            json cj = parse_json_text(read_text_file(tr_cfg), "training config");
            auto stages = evolution_stages_from_json(cj);
            json fp = cj;
            fp.erase("workers");
            for (std::size_t k = 0; k < stages.size(); ++k) {
                auto cfg = stages[k];
                if (tr_workers >= 0) cfg.workers = tr_workers;
                TrainOptions opt;
                opt.out_dir = stages.size() == 1 ? tr_out
                                                 : (std::filesystem::path(tr_out) /
                                                    ("stage" + std::to_string(k) + "_M" + std::to_string(cfg.M)))
                                                       .string();
                opt.config_text = fp.dump(2) + "\n";
                opt.resume = tr_resume && std::filesystem::exists(std::filesystem::path(opt.out_dir) / "state.bin");
                if (!tr_quiet)
                    opt.on_generation = [](const GenerationRecord& r) {
                        std::fprintf(stderr, "g=%d elite=%.6f parents=%.6f population=%.6f\n", r.g, r.elite_reward,
                                     r.mean_parent_reward, r.mean_population_reward);
                    };
                TrainResult res = train(cfg, opt);
                std::cout << "M=" << cfg.M << " best_reward=" << fmt(res.best_reward)
                          << " best=" << to_tokens(res.best.actions) << "\n";
            }
        } else if (*ah) {
            PulseSequence s = load_with_tau(ah_seq, ah_sys.tau_us);
            const double J = ah_sys.J_krad * 1e3;
            SpinSystem sys = SpinSystem::chain(ah_sys.n, ah_sys.pbc ? Boundary::periodic : Boundary::open, J);
            ImperfectionSet imp = make_imperfections(ah_imp, ah_sys.n, J, s.tau);
            auto t = trajectory(s);
            auto z = zeroth_order(s);
            AhtOperators ops(sys, imp);
            if (ah_sys.n > kMaxAhtSpins) throw InputError("aht: --n exceeds " + std::to_string(kMaxAhtSpins));
            json first;
            for (const char* sel : {"interaction", "field", "cross", "all"})
                first[sel] = max_abs(first_order_numeric(s, ops, parse_selector(sel)));
            json j{{"sequence", s.name},
                   {"M", s.size()},
                   {"tau_us", s.tau * 1e6},
                   {"cyclic", z.cyclic},
                   {"interaction_labels", interaction_labels(t)},
                   {"zeroth_order",
                    {{"tallies", {{"Dx", z.tallies[0]}, {"Dy", z.tallies[1]}, {"Dz", z.tallies[2]}}},
                     {"interaction_vanishes", z.interaction_vanishes()},
                     {"field_per_offset", {{"X", z.field()[0]}, {"Y", z.field()[1]}, {"Z", z.field()[2]}}},
                     {"field_vanishes", z.field_vanishes()},
                     {"numeric_max_norm", max_abs(zeroth_order_numeric(s, ops, TermSelector::all))}}},
                   {"first_order_max_norm", first},
                   {"n_spins", ah_sys.n}};
            std::cout << j.dump(2) << "\n";
        } else if (*en) {
            auto rep = theorem1_enumerate(en_max, en_workers, en_n);
            json L = json::array();
            for (const auto& r : rep.lengths)
                L.push_back({{"L", r.L},
                             {"total", r.total},
                             {"zeroth_vanishing", r.zeroth_any},
                             {"cyclic", r.cyclic},
                             {"cyclic_zeroth", r.cyclic_zeroth},
                             {"passing", r.both},
                             {"contains_Ideal6", r.ideal6},
                             {"examples", r.examples}});
            json j{{"max_len", rep.max_len},
                   {"only_multiples_of_six", rep.only_multiples_of_six()},
                   {"Ideal6_found", rep.ideal6_found},
                   {"lengths", L}};
            std::cout << j.dump(2) << "\n";
        } else if (*tf) {
            PulseSequence r;
            if (*t_yxx) {
                r = yxx_expand(parse_signs(tf_signs), tf_tau_us * 1e-6);
            } else {
                PulseSequence s = load_sequence(tf_in);
                if (*t_sym) r = symmetrize(s);
                else if (*t_rot) r = rotate(s, tf_n);
                else if (*t_ps) r = phase_shift_pi(s, tf_idx);
                else r = phase_shift_pi_all(s);
                if (r.name.empty()) r.name = s.name;
            }
            if (!tf_name.empty()) r.name = tf_name;
            write_or_print(tf_out, emit_sequence_file(r));
        }
        return 0;
    } catch (const InputError& e) {
        std::cerr << "error:input:" << one_line(e.what()) << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error:numerical:" << one_line(e.what()) << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "error:input:" << one_line(e.what()) << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error:input:" << one_line(e.what()) << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error:numerical:" << one_line(e.what()) << "\n";
        return 3;
    }
}
