#pragma once

#include "ddlab/compile.hpp"
#include "ddlab/parallel.hpp"
#include "ddlab/sequence.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace ddlab {

// Signed permutation of (x,y,z). Row a holds the toggling-frame image of lab axis a:
//   U_c^dag S_a U_c = sum_b m[a][b] S_b
struct FrameElement {
    std::array<std::int8_t, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    int operator()(int r, int c) const { return m[3 * r + c]; }
    std::int8_t& at(int r, int c) { return m[3 * r + c]; }
    bool operator==(const FrameElement&) const = default;

    static FrameElement identity() { return {}; }

    FrameElement operator*(const FrameElement& o) const {
        FrameElement r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                int s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r.at(i, j) = static_cast<std::int8_t>(s);
            }
        return r;
    }

    int determinant() const {
        const auto& a = m;
        return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
               a[2] * (a[3] * a[7] - a[4] * a[6]);
    }

    // lab axis a -> (toggling axis, sign)
    std::pair<Axis, int> image(Axis a) const {
        int r = static_cast<int>(a);
        for (int c = 0; c < 3; ++c)
            if ((*this)(r, c) != 0) return {static_cast<Axis>(c), (*this)(r, c)};
        throw NumericalError("frame element has an empty row");
    }
};

namespace detail {

// Rotation table from conjugating spin operators by the ideal single-spin pulse:
// Q[a][c] = 2 Re Tr(S_c u^dag S_a u).
inline std::array<FrameElement, 5> make_rotation_table() {
    std::array<FrameElement, 5> q;
    ImperfectionSet ideal;
    for (Action act : kAllActions) {
        Eigen::Matrix2cd u = pulse_factor(act, ideal);
        FrameElement f;
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) {
                double v = 2.0 * (spin_half(static_cast<Axis>(c)) * u.adjoint() *
                                  spin_half(static_cast<Axis>(a)) * u).trace().real();
                long r = std::lround(v);
                if (std::abs(v - static_cast<double>(r)) > 1e-12 || std::abs(r) > 1)
                    throw NumericalError("pulse does not map axes to signed axes");
                f.at(a, c) = static_cast<std::int8_t>(r);
            }
        q[static_cast<int>(act)] = f;
    }
    return q;
}

}  // namespace detail

inline const std::array<FrameElement, 5>& rotation_table() {
    static const std::array<FrameElement, 5> t = detail::make_rotation_table();
    return t;
}

inline FrameElement frame_after(const FrameElement& frame, Action a) {
    return rotation_table()[static_cast<int>(a)] * frame;
}

struct Interval {
    FrameElement frame;
    Axis interaction;  // D_{+-a} == D_a
    Axis field_axis;   // toggling image of lab z
    int field_sign;
};

struct TogglingTrajectory {
    std::vector<Interval> intervals;
    FrameElement final_frame;
    bool cyclic() const { return final_frame == FrameElement::identity(); }
};

inline TogglingTrajectory trajectory(const PulseSequence& seq) {
    TogglingTrajectory t;
    FrameElement f;
    for (Action a : seq.actions) {
        f = frame_after(f, a);
        auto [ax, sg] = f.image(Axis::z);
        t.intervals.push_back({f, ax, ax, sg});
    }
    t.final_frame = f;
    return t;
}

inline std::string interaction_labels(const TogglingTrajectory& t) {
    std::string s;
    for (const auto& iv : t.intervals) s += axis_char(iv.interaction);
    return s;
}

struct ZerothOrder {
    std::array<int, 3> tallies{0, 0, 0};  // counts of D_x, D_y, D_z
    std::array<int, 3> field_counts{0, 0, 0};  // signed counts of X, Y, Z images
    int M = 0;
    bool cyclic = false;

    bool interaction_vanishes() const { return tallies[0] == tallies[1] && tallies[1] == tallies[2]; }
    bool field_vanishes() const { return field_counts == std::array<int, 3>{0, 0, 0}; }
    // coefficients of (X, Y, Z) per unit offset, per total time
    std::array<double, 3> field() const {
        return {double(field_counts[0]) / M, double(field_counts[1]) / M, double(field_counts[2]) / M};
    }
    // D_x+D_y+D_z=0: subtract the smallest tally to get the reduced form
    std::array<int, 3> reduced() const {
        int mn = std::min({tallies[0], tallies[1], tallies[2]});
        return {tallies[0] - mn, tallies[1] - mn, tallies[2] - mn};
    }
};

inline ZerothOrder zeroth_order(const PulseSequence& seq) {
    ZerothOrder z;
    auto t = trajectory(seq);
    z.M = static_cast<int>(seq.size());
    z.cyclic = t.cyclic();
    for (const auto& iv : t.intervals) {
        z.tallies[static_cast<int>(iv.interaction)]++;
        z.field_counts[static_cast<int>(iv.field_axis)] += iv.field_sign;
    }
    return z;
}

// Numeric zeroth order (1/M) sum_m H_m for selected terms; used to cross-check the tallies.
enum class TermSelector { interaction, field, cross, all };

inline TermSelector parse_selector(const std::string& s) {
    if (s == "interaction") return TermSelector::interaction;
    if (s == "field") return TermSelector::field;
    if (s == "cross") return TermSelector::cross;
    if (s == "all") return TermSelector::all;
    throw InputError("unknown term selector '" + s + "'");
}

// Operator basis for toggling-frame Hamiltonians: D_x, D_y, D_z and the longitudinal
// single-body term rotated onto X, Y, Z (sum_j (Delta + w_j) S_b^j).
struct AhtOperators {
    std::array<Mat, 6> B;

    AhtOperators(const SpinSystem& sys, const ImperfectionSet& imp) {
        for (int k = 0; k < 3; ++k) B[k] = sys.D[k];
        std::vector<double> f(sys.basis.n_spins, imp.offset);
        if (imp.disorder) {
            if (static_cast<int>(imp.disorder->fields.size()) != sys.basis.n_spins)
                throw InputError("disorder length != N");
            for (int j = 0; j < sys.basis.n_spins; ++j) f[j] += imp.disorder->fields[j];
        }
        for (int k = 0; k < 3; ++k) B[3 + k] = build_weighted_collective(sys.basis, static_cast<Axis>(k), f);
    }
};

namespace detail {

inline bool selected(TermSelector s, int k, int l) {
    bool ik = k < 3, il = l < 3;
    switch (s) {
        case TermSelector::interaction: return ik && il;
        case TermSelector::field: return !ik && !il;
        case TermSelector::cross: return ik != il;
        default: return true;
    }
}

inline std::array<double, 6> interval_coeffs(const Interval& iv) {
    std::array<double, 6> c{};
    c[static_cast<int>(iv.interaction)] = 1.0;
    c[3 + static_cast<int>(iv.field_axis)] = iv.field_sign;
    return c;
}

// P[k][l] = sum_{a>b} c_a[k] c_b[l] over intervals [from, to)
inline std::array<std::array<double, 6>, 6> pair_counts(const std::vector<Interval>& iv, std::size_t from,
                                                        std::size_t to) {
    std::array<std::array<double, 6>, 6> P{};
    std::array<double, 6> prefix{};
    for (std::size_t a = from; a < to; ++a) {
        auto c = interval_coeffs(iv[a]);
        for (int k = 0; k < 6; ++k)
            if (c[k] != 0)
                for (int l = 0; l < 6; ++l) P[k][l] += c[k] * prefix[l];
        for (int k = 0; k < 6; ++k) prefix[k] += c[k];
    }
    return P;
}

inline Mat combine_commutators(const AhtOperators& ops, const std::array<std::array<double, 6>, 6>& P,
                               TermSelector sel) {
    const Eigen::Index d = ops.B[0].rows();
    Mat S = Mat::Zero(d, d);
    for (int k = 0; k < 6; ++k)
        for (int l = k + 1; l < 6; ++l) {
            if (!selected(sel, k, l)) continue;
            double w = P[k][l] - P[l][k];
            if (w != 0.0) S += w * commutator(ops.B[k], ops.B[l]);
        }
    return S;
}

}  // namespace detail

inline Mat zeroth_order_numeric(const PulseSequence& seq, const AhtOperators& ops, TermSelector sel) {
    auto t = trajectory(seq);
    const Eigen::Index d = ops.B[0].rows();
    Mat H = Mat::Zero(d, d);
    for (const auto& iv : t.intervals) {
        if (sel != TermSelector::field) H += ops.B[static_cast<int>(iv.interaction)];
        if (sel != TermSelector::interaction) H += double(iv.field_sign) * ops.B[3 + static_cast<int>(iv.field_axis)];
    }
    return H / static_cast<double>(seq.size());
}

// -i/(2 M tau) sum_{a>b} [H_a, H_b] tau^2 over piecewise-constant toggling Hamiltonians
inline Mat first_order_numeric(const PulseSequence& seq, const AhtOperators& ops, TermSelector sel) {
    auto t = trajectory(seq);
    auto P = detail::pair_counts(t.intervals, 0, t.intervals.size());
    const double M = static_cast<double>(seq.size());
    return cplx(0, -seq.tau / (2.0 * M)) * detail::combine_commutators(ops, P, sel);
}

inline constexpr int kMaxAhtSpins = 6;

inline Mat first_order_numeric(const PulseSequence& seq, const SpinSystem& sys, const ImperfectionSet& imp,
                               TermSelector sel) {
    if (sys.basis.n_spins > kMaxAhtSpins)
        throw InputError("first_order_numeric: N=" + std::to_string(sys.basis.n_spins) + " exceeds dense AHT cap " +
                         std::to_string(kMaxAhtSpins));
    return first_order_numeric(seq, AhtOperators(sys, imp), sel);
}

// Max deviation between symbolic labels and explicit conjugation U_c^dag {D_z, Z} U_c.
inline double frame_consistency_error(const PulseSequence& seq, const SpinSystem& sys) {
    const Eigen::Index d = sys.dim();
    Mat Uc = Mat::Identity(d, d);
    ImperfectionSet ideal;
    auto t = trajectory(seq);
    double err = 0.0;
    for (std::size_t m = 0; m < seq.size(); ++m) {
        detail::apply_collective(pulse_factor(seq.actions[m], ideal), Uc, sys.basis);
        const auto& iv = t.intervals[m];
        Mat Dt = Uc.adjoint() * sys.D[2] * Uc;
        Mat Zt = Uc.adjoint() * sys.C[2] * Uc;
        err = std::max(err, max_abs(Dt - sys.D[static_cast<int>(iv.interaction)]));
        err = std::max(err, max_abs(Zt - double(iv.field_sign) * sys.C[static_cast<int>(iv.field_axis)]));
    }
    return err;
}

// ---- exhaustive length theorem ---------------------------------------------------------------

struct LengthReport {
    int L = 0;
    std::uint64_t total = 0;
    std::uint64_t zeroth_any = 0;     // equal tallies, frame not necessarily cyclic
    std::uint64_t cyclic = 0;
    std::uint64_t cyclic_zeroth = 0;  // cyclic and equal tallies
    std::uint64_t both = 0;           // additionally first-order interaction AHT = 0
    bool ideal6 = false;
    std::vector<std::string> examples;
};

struct EnumerationReport {
    int max_len = 0;
    std::vector<LengthReport> lengths;
    bool ideal6_found = false;
    bool only_multiples_of_six() const {
        for (const auto& r : lengths)
            if (r.L % 6 != 0 && r.both) return false;
        return true;
    }
};

inline constexpr int kMaxEnumerationLength = 9;

namespace detail {

struct EnumCtx {
    int L;
    std::array<Mat, 3> K;  // [D_x,D_y], [D_y,D_z], [D_z,D_x]
    double tol;
    std::size_t max_examples;
};

inline void enum_rec(const EnumCtx& ctx, std::vector<Action>& acts, std::vector<Axis>& labs, FrameElement f,
                     std::array<int, 3> tallies, LengthReport& rep) {
    if (static_cast<int>(acts.size()) == ctx.L) {
        rep.total++;
        bool eq = tallies[0] == tallies[1] && tallies[1] == tallies[2];
        bool cyc = f == FrameElement::identity();
        if (eq) rep.zeroth_any++;
        if (cyc) rep.cyclic++;
        if (!(eq && cyc)) return;
        rep.cyclic_zeroth++;
        // sum_{a>b} [D_{l_a}, D_{l_b}] in terms of the three independent commutators
        std::array<int, 3> cnt{0, 0, 0};
        std::array<std::array<int, 3>, 3> P{};
        for (Axis la : labs) {
            int a = static_cast<int>(la);
            for (int b = 0; b < 3; ++b) P[a][b] += cnt[b];
            cnt[a]++;
        }
        double wxy = P[0][1] - P[1][0], wyz = P[1][2] - P[2][1], wzx = P[2][0] - P[0][2];
        Mat S = wxy * ctx.K[0] + wyz * ctx.K[1] + wzx * ctx.K[2];
        if (max_abs(S) <= ctx.tol) {
            rep.both++;
            static const std::vector<Action> ideal6{Action::Py, Action::Px, Action::Px,
                                                    Action::Py, Action::Mx, Action::Mx};
            if (acts == ideal6) rep.ideal6 = true;
            if (rep.examples.size() < ctx.max_examples) rep.examples.push_back(to_tokens(acts));
        }
        return;
    }
    for (Action a : kAllActions) {
        FrameElement g = frame_after(f, a);
        Axis lab = g.image(Axis::z).first;
        acts.push_back(a);
        labs.push_back(lab);
        auto t2 = tallies;
        t2[static_cast<int>(lab)]++;
        enum_rec(ctx, acts, labs, g, t2, rep);
        acts.pop_back();
        labs.pop_back();
    }
}

}  // namespace detail

// Enumerates all 5^L action lists for L <= max_len on an N-spin periodic chain (J=1, tau=1).
inline EnumerationReport theorem1_enumerate(int max_len, int workers = 0, int n_spins = 4,
                                            std::size_t max_examples = 16) {
    if (max_len < 1 || max_len > kMaxEnumerationLength)
        throw InputError("max_len must be in [1," + std::to_string(kMaxEnumerationLength) + "]");
    SpinSystem sys = SpinSystem::chain(n_spins, Boundary::periodic, 1.0);
    detail::EnumCtx base{0,
                         {commutator(sys.D[0], sys.D[1]), commutator(sys.D[1], sys.D[2]),
                          commutator(sys.D[2], sys.D[0])},
                         0.0, max_examples};
    base.tol = 1e-12 * std::max(1.0, max_abs(base.K[0]));

    EnumerationReport rep;
    rep.max_len = max_len;
    for (int L = 1; L <= max_len; ++L) {
        // shard on the first two actions (or one for L=1)
        int depth = L >= 2 ? 2 : 1;
        std::size_t shards = depth == 2 ? 25 : 5;
        std::vector<LengthReport> parts(shards);
        detail::EnumCtx ctx = base;
        ctx.L = L;
        parallel_for(shards, workers, [&](std::size_t s) {
            std::vector<Action> acts;
            std::vector<Axis> labs;
            FrameElement f;
            std::array<int, 3> tal{0, 0, 0};
            std::size_t code = s;
            std::array<std::size_t, 2> digits{depth == 2 ? code / 5 : code, code % 5};
            for (int k = 0; k < depth; ++k) {
                Action a = kAllActions[digits[k]];
                f = frame_after(f, a);
                Axis lab = f.image(Axis::z).first;
                acts.push_back(a);
                labs.push_back(lab);
                tal[static_cast<int>(lab)]++;
            }
            parts[s].L = L;
            detail::enum_rec(ctx, acts, labs, f, tal, parts[s]);
        });
        LengthReport r;
        r.L = L;
        for (auto& p : parts) {
            r.total += p.total;
            r.zeroth_any += p.zeroth_any;
            r.cyclic += p.cyclic;
            r.cyclic_zeroth += p.cyclic_zeroth;
            r.both += p.both;
            r.ideal6 = r.ideal6 || p.ideal6;
            for (auto& e : p.examples)
                if (r.examples.size() < max_examples) r.examples.push_back(e);
        }
        if (r.ideal6) rep.ideal6_found = true;
        rep.lengths.push_back(std::move(r));
    }
    return rep;
}

// True if the action list passes both cancellations (used to confirm membership when the
// example list is truncated).
inline bool passes_zeroth_and_first(const PulseSequence& seq, const SpinSystem& sys) {
    auto z = zeroth_order(seq);
    if (!z.cyclic || !z.interaction_vanishes()) return false;
    ImperfectionSet none;
    Mat H1 = first_order_numeric(seq, sys, none, TermSelector::interaction);
    return max_abs(H1) <= 1e-12 * max_abs(commutator(sys.D[0], sys.D[1])) * seq.tau;
}

// ---- offset / disorder first-order equivalence -----------------------------------------------

struct EquivalenceReport {
    double offset_zeroth = 0, offset_cross = 0, offset_field = 0;
    std::vector<double> disorder_zeroth, disorder_cross, disorder_field;
    std::vector<double> block_partial_cross;  // |cross term| of the first k blocks, last realization
    double tolerance = 0;
    bool vanishes() const {
        auto ok = [&](double v) { return v <= tolerance; };
        if (!ok(offset_zeroth) || !ok(offset_cross) || !ok(offset_field)) return false;
        for (std::size_t i = 0; i < disorder_cross.size(); ++i)
            if (!ok(disorder_zeroth[i]) || !ok(disorder_cross[i]) || !ok(disorder_field[i])) return false;
        return true;
    }
};

inline EquivalenceReport offset_disorder_equivalence(const PulseSequence& seq, const SpinSystem& sys, int realizations,
                                                     double W, std::uint64_t seed, double delta = 0.0) {
    if (!is_yxx_pattern(seq)) throw InputError("offset_disorder_equivalence: sequence is not a yxx pattern");
    if (!zeroth_order(seq).field_vanishes())
        throw InputError("offset_disorder_equivalence: zeroth-order field does not vanish");
    double J = sys.graph.couplings.empty() ? 1.0 : std::abs(sys.graph.couplings.begin()->second);
    if (delta == 0.0) delta = J;
    if (W == 0.0) W = J;

    EquivalenceReport rep;
    const double tau = seq.tau;
    double scale = std::max({J, delta, W});
    rep.tolerance = 1e-12 * scale * scale * tau;

    auto measure = [&](const ImperfectionSet& imp, double& z0, double& cr, double& fl) {
        AhtOperators ops(sys, imp);
        z0 = max_abs(zeroth_order_numeric(seq, ops, TermSelector::field));
        cr = max_abs(first_order_numeric(seq, ops, TermSelector::cross));
        fl = max_abs(first_order_numeric(seq, ops, TermSelector::field));
    };
    ImperfectionSet off;
    off.offset = delta;
    measure(off, rep.offset_zeroth, rep.offset_cross, rep.offset_field);

    for (int r = 0; r < realizations; ++r) {
        ImperfectionSet dis;
        Rng rng = make_stream(seed, 0, static_cast<std::uint64_t>(r), 0, StreamTag::disorder);
        dis.disorder = make_disorder(sys.basis.n_spins, W, rng());
        double a, b, c;
        measure(dis, a, b, c);
        rep.disorder_zeroth.push_back(a);
        rep.disorder_cross.push_back(b);
        rep.disorder_field.push_back(c);
        if (r + 1 == realizations) {
            AhtOperators ops(sys, dis);
            auto t = trajectory(seq);
            for (std::size_t k = 3; k <= seq.size(); k += 3) {
                auto P = detail::pair_counts(t.intervals, 0, k);
                rep.block_partial_cross.push_back(
                    max_abs(detail::combine_commutators(ops, P, TermSelector::cross)) * tau / (2.0 * seq.size()));
            }
        }
    }
    return rep;
}

}  // namespace ddlab
