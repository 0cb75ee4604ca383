#pragma once

#include "ddlab/aht.hpp"
#include "ddlab/compile.hpp"
#include "ddlab/parallel.hpp"
#include "ddlab/policy.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

namespace ddlab {

struct EvolutionConfig {
    int population = 201;
    int parents = 11;
    int generations = 100;
    double mu0 = 0.05;
    int rollouts_per_agent = 3;
    int elite_rollouts = 5;
    int M = 6;
    PolicyMode mode = PolicyMode::full5;
    int h1 = 64, h2 = 64;
    std::vector<ImperfectionSet> conditions{ImperfectionSet{}};
    int n_spins = 3;
    Boundary boundary = Boundary::open;
    double J = 32.7e3;   // rad/s
    double tau = 5e-6;   // s
    std::uint64_t seed = 1;
    int workers = 0;     // 0: hardware concurrency; never affects results

    void validate() const {
        if (parents < 2 || population < parents)
            throw InputError("need population >= parents >= 2");
        if ((population - 1) % (parents - 1) != 0)
            throw InputError("(population - 1) must be divisible by (parents - 1)");
        if (generations < 1) throw InputError("generations must be >= 1");
        if (!(mu0 >= 0)) throw InputError("mu0 must be >= 0");
        if (rollouts_per_agent < 1 || elite_rollouts < 1) throw InputError("rollout counts must be >= 1");
        if (M < 1) throw InputError("M must be >= 1");
        if (mode == PolicyMode::yxx2 && M % 3 != 0) throw InputError("yxx2 mode needs M divisible by 3");
        if (conditions.empty()) throw InputError("at least one training condition is required");
        if (!(tau > 0)) throw InputError("tau must be positive");
        for (const auto& c : conditions) ddlab::validate(c, tau);
        SpinBasis(n_spins, boundary);
    }

    GenomeShape shape() const { return make_shape(M, mode, h1, h2); }
    int children_per_parent() const { return (population - 1) / (parents - 1); }
};

struct GenerationRecord {
    int g = 0;
    double elite_reward = 0;           // best reward seen up to and including g
    double mean_parent_reward = 0;
    double mean_population_reward = 0;
    PulseSequence best;                // sequence achieving elite_reward
};

inline double mutation_power(int g, const EvolutionConfig& cfg) {
    if (g < 1 || g > cfg.generations)
        throw InputError("mutation_power: g=" + std::to_string(g) + " outside [1," + std::to_string(cfg.generations) + "]");
    return cfg.mu0 * (1.0 - static_cast<double>(g) / cfg.generations);
}

inline AgentGenome mutate(const AgentGenome& parent, double mu, Rng& rng) {
    if (!(mu >= 0)) throw InputError("mutate: negative mutation power");
    AgentGenome c = parent;
    for (auto& p : c.params) p += mu * gaussian(rng);
    return c;
}

// P largest rewards, ties broken by lower index
inline std::vector<int> select_parents(const std::vector<double>& rewards, int P) {
    if (P < 1 || P > static_cast<int>(rewards.size())) throw InputError("select_parents: bad parent count");
    std::vector<int> idx(rewards.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return rewards[a] > rewards[b]; });
    idx.resize(P);
    return idx;
}

// Reward of sequences on the training system under every training condition (worst case).
class RewardModel {
public:
    explicit RewardModel(const EvolutionConfig& cfg)
        : sys_(SpinSystem::chain(cfg.n_spins, cfg.boundary, cfg.J)) {
        for (const auto& c : cfg.conditions) compilers_.emplace_back(sys_, c);
    }

    double operator()(const PulseSequence& s) const {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& cc : compilers_) {
            Mat U = cc.compile(s);
            worst = std::min(worst, reward(propagator_fidelity(U, static_cast<int>(s.size()))));
        }
        return worst;
    }

    const SpinSystem& system() const { return sys_; }

private:
    SpinSystem sys_;
    std::vector<CycleCompiler> compilers_;
};

struct AgentResult {
    double reward = -1;
    PulseSequence best;
};

class Evolution {
public:
    explicit Evolution(EvolutionConfig cfg) : cfg_(std::move(cfg)), model_((cfg_.validate(), cfg_)) {
        if (cfg_.mode == PolicyMode::yxx2)
            aht_sys_ = std::make_unique<SpinSystem>(SpinSystem::chain(4, Boundary::periodic, 1.0));
    }

    const EvolutionConfig& config() const { return cfg_; }
    const RewardModel& reward_model() const { return model_; }

    std::vector<AgentGenome> initial_population() const {
        std::vector<AgentGenome> pop(cfg_.population);
        parallel_for(pop.size(), cfg_.workers, [&](std::size_t i) {
            Rng r = make_stream(cfg_.seed, 0, i, 0, StreamTag::init);
            pop[i] = init_genome(cfg_.shape(), cfg_.mode, r);
        });
        return pop;
    }

    // best of rollouts_per_agent rollouts
    AgentResult evaluate_agent(const AgentGenome& g, int gen, std::size_t agent) const {
        AgentResult res;
        for (int r = 0; r < cfg_.rollouts_per_agent; ++r) {
            Rng rng = make_stream(cfg_.seed, gen, agent, r, StreamTag::eval);
            PulseSequence s = rollout(g, cfg_.M, rng, cfg_.tau);
            double R = model_(s);
            if (r == 0 || R > res.reward) res = {R, std::move(s)};
        }
        return res;
    }

    // parent with the best mean reward over elite_rollouts fresh rollouts; returns population index
    int select_elite(const std::vector<AgentGenome>& pop, const std::vector<int>& parents, int gen) const {
        std::vector<double> mean(parents.size(), 0.0);
        parallel_for(parents.size(), cfg_.workers, [&](std::size_t i) {
            double s = 0;
            for (int r = 0; r < cfg_.elite_rollouts; ++r) {
                Rng rng = make_stream(cfg_.seed, gen, static_cast<std::uint64_t>(parents[i]), r, StreamTag::elite);
                s += model_(rollout(pop[parents[i]], cfg_.M, rng, cfg_.tau));
            }
            mean[i] = s / cfg_.elite_rollouts;
        });
        std::size_t best = 0;
        for (std::size_t i = 1; i < mean.size(); ++i)
            if (mean[i] > mean[best]) best = i;
        return parents[best];
    }

    struct StepOutput {
        std::vector<AgentGenome> next;
        GenerationRecord record;
        int elite = -1;
    };

    // hof: best (reward, sequence) so far; updated in place
    StepOutput step_generation(const std::vector<AgentGenome>& pop, int gen, AgentResult& hof) const {
        if (static_cast<int>(pop.size()) != cfg_.population) throw InputError("population size mismatch");
        std::vector<AgentResult> res(pop.size());
        parallel_for(pop.size(), cfg_.workers, [&](std::size_t i) { res[i] = evaluate_agent(pop[i], gen, i); });
        if (aht_sys_) audit_yxx(res);

        std::vector<double> rewards(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i) rewards[i] = res[i].reward;
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (hof.reward < 0 || res[i].reward > hof.reward) hof = res[i];

        auto parents = select_parents(rewards, cfg_.parents);
        int elite = select_elite(pop, parents, gen);

        StepOutput out;
        out.elite = elite;
        out.next.resize(pop.size());
        out.next[0] = pop[elite];
        std::vector<int> breeders;
        for (int p : parents)
            if (p != elite) breeders.push_back(p);
        const double mu = mutation_power(gen, cfg_);
        const int kids = cfg_.children_per_parent();
        parallel_for(breeders.size() * kids, cfg_.workers, [&](std::size_t k) {
            std::size_t slot = 1 + k;
            Rng rng = make_stream(cfg_.seed, gen, slot, 0, StreamTag::mutate);
            out.next[slot] = mutate(pop[breeders[k / kids]], mu, rng);
        });

        auto& rec = out.record;
        rec.g = gen;
        rec.elite_reward = hof.reward;
        rec.best = hof.best;
        double sp = 0;
        for (int p : parents) sp += rewards[p];
        rec.mean_parent_reward = sp / parents.size();
        rec.mean_population_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / rewards.size();
        return out;
    }

private:
    // every 100th agent's sequence must keep the yxx interaction cancellations
    void audit_yxx(const std::vector<AgentResult>& res) const {
        ImperfectionSet none;
        AhtOperators ops(*aht_sys_, none);
        double tol = 1e-12 * max_abs(commutator(aht_sys_->D[0], aht_sys_->D[1]));
        for (std::size_t i = 0; i < res.size(); i += 100) {
            PulseSequence s = res[i].best;
            s.tau = 1.0;
            if (!zeroth_order(s).interaction_vanishes() ||
                max_abs(first_order_numeric(s, ops, TermSelector::interaction)) > tol)
                throw NumericalError("yxx audit: sequence lost interaction cancellation");
        }
    }

    EvolutionConfig cfg_;
    RewardModel model_;
    std::unique_ptr<SpinSystem> aht_sys_;
};

// ---- training loop with checkpoints ------------------------------------------------------------
// out_dir layout:
//   config.json            copy of the training config
//   curve.csv              g,elite_reward,mean_parent_reward,mean_population_reward
//   genomes/gen_NNNN.ddgn  elite genome of each generation
//   state.bin              population + records for resume (rewritten every generation)
//   best.seq               best sequence found so far

struct TrainState {
    int next_gen = 1;
    std::vector<AgentGenome> population;
    AgentResult hof;
    std::vector<GenerationRecord> records;
    std::string config_text;
};

inline constexpr std::uint32_t kStateFormatVersion = 1;

namespace detail {

inline void put_sequence(std::string& out, const PulseSequence& s) {
    put<double>(out, s.tau);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    for (Action a : s.actions) put<std::uint8_t>(out, static_cast<std::uint8_t>(a));
}

inline PulseSequence get_sequence(const std::string& in, std::size_t& pos) {
    PulseSequence s;
    s.tau = get<double>(in, pos);
    auto n = get<std::uint32_t>(in, pos);
    for (std::uint32_t i = 0; i < n; ++i) {
        auto a = get<std::uint8_t>(in, pos);
        if (a > 4) throw InputError("bad action code in state file");
        s.actions.push_back(static_cast<Action>(a));
    }
    return s;
}

}  // namespace detail

inline std::string encode_state(const TrainState& st) {
    std::string b("DDST", 4);
    detail::put<std::uint32_t>(b, kStateFormatVersion);
    detail::put<std::uint64_t>(b, static_cast<std::uint64_t>(st.next_gen));
    detail::put<std::uint32_t>(b, static_cast<std::uint32_t>(st.population.size()));
    for (const auto& g : st.population) append_genome(b, g);
    detail::put<double>(b, st.hof.reward);
    detail::put_sequence(b, st.hof.best);
    detail::put<std::uint32_t>(b, static_cast<std::uint32_t>(st.records.size()));
    for (const auto& r : st.records) {
        detail::put<std::uint64_t>(b, static_cast<std::uint64_t>(r.g));
        detail::put<double>(b, r.elite_reward);
        detail::put<double>(b, r.mean_parent_reward);
        detail::put<double>(b, r.mean_population_reward);
        detail::put_sequence(b, r.best);
    }
    detail::put<std::uint64_t>(b, st.config_text.size());
    b += st.config_text;
    return b;
}

inline TrainState decode_state(const std::string& b) {
    std::size_t pos = 0;
    if (b.compare(0, 4, "DDST") != 0) throw InputError("bad state magic");
    pos = 4;
    if (detail::get<std::uint32_t>(b, pos) != kStateFormatVersion) throw InputError("unsupported state version");
    TrainState st;
    st.next_gen = static_cast<int>(detail::get<std::uint64_t>(b, pos));
    auto n = detail::get<std::uint32_t>(b, pos);
    for (std::uint32_t i = 0; i < n; ++i) st.population.push_back(read_genome(b, pos));
    st.hof.reward = detail::get<double>(b, pos);
    st.hof.best = detail::get_sequence(b, pos);
    auto nr = detail::get<std::uint32_t>(b, pos);
    for (std::uint32_t i = 0; i < nr; ++i) {
        GenerationRecord r;
        r.g = static_cast<int>(detail::get<std::uint64_t>(b, pos));
        r.elite_reward = detail::get<double>(b, pos);
        r.mean_parent_reward = detail::get<double>(b, pos);
        r.mean_population_reward = detail::get<double>(b, pos);
        r.best = detail::get_sequence(b, pos);
        st.records.push_back(std::move(r));
    }
    auto len = detail::get<std::uint64_t>(b, pos);
    if (pos + len != b.size()) throw InputError("state file size mismatch");
    st.config_text = b.substr(pos, len);
    return st;
}

inline std::string curve_csv(const std::vector<GenerationRecord>& recs) {
    std::string out = "g,elite_reward,mean_parent_reward,mean_population_reward\n";
    char buf[128];
    for (const auto& r : recs) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.g, r.elite_reward, r.mean_parent_reward,
                      r.mean_population_reward);
        out += buf;
    }
    return out;
}

struct TrainResult {
    PulseSequence best;
    double best_reward = 0;
    std::vector<GenerationRecord> records;
};

struct TrainOptions {
    std::string out_dir;       // empty: no checkpoints
    std::string config_text;   // stored alongside checkpoints
    bool resume = false;
    int stop_after = 0;        // >0: return after this many generations of this call
    std::function<void(const GenerationRecord&)> on_generation;
};

inline TrainResult train(const EvolutionConfig& cfg, const TrainOptions& opt = {}) {
    namespace fs = std::filesystem;
    Evolution evo(cfg);
    TrainState st;
    st.config_text = opt.config_text;
    const bool ckpt = !opt.out_dir.empty();
    fs::path dir(opt.out_dir);
    if (ckpt) fs::create_directories(dir / "genomes");

    if (opt.resume) {
        if (!ckpt) throw InputError("resume requires an output directory");
        st = decode_state(read_binary_file((dir / "state.bin").string()));
        if (st.config_text != opt.config_text) throw InputError("resume: config differs from checkpoint");
        if (static_cast<int>(st.population.size()) != cfg.population) throw InputError("resume: population mismatch");
    } else {
        st.population = evo.initial_population();
        if (ckpt) {
            std::string c = opt.config_text;
            write_binary_file((dir / "config.json").string(), c);
        }
    }

    int done = 0;
    for (int g = st.next_gen; g <= cfg.generations; ++g) {
        auto out = evo.step_generation(st.population, g, st.hof);
        st.population = std::move(out.next);
        st.records.push_back(out.record);
        st.next_gen = g + 1;
        if (ckpt) {
            char name[32];
            std::snprintf(name, sizeof name, "gen_%04d.ddgn", g);
            save_genome((dir / "genomes" / name).string(), st.population[0]);
            write_binary_file((dir / "curve.csv").string(), curve_csv(st.records));
            PulseSequence b = st.hof.best;
            b.name = "best";
            write_binary_file((dir / "best.seq").string(), emit_sequence_file(b));
            write_binary_file((dir / "state.bin").string(), encode_state(st));
        }
        if (opt.on_generation) opt.on_generation(st.records.back());
        if (opt.stop_after > 0 && ++done >= opt.stop_after) break;
    }
    TrainResult r;
    r.best = st.hof.best;
    r.best_reward = st.hof.reward;
    r.records = st.records;
    return r;
}

}  // namespace ddlab
