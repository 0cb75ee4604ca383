#pragma once

#include "ddlab/sequence.hpp"
#include "ddlab/spin.hpp"

#include <array>
#include <bit>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace ddlab {

// Basis, couplings and the operators every compile needs. Immutable after construction.
struct SpinSystem {
    SpinBasis basis;
    CouplingGraph graph;
    std::array<Mat, 3> D;  // dipolar along x, y, z
    std::array<Mat, 3> C;  // collective X, Y, Z
    RVec z_diag;           // diagonal of Z
    std::vector<std::vector<Eigen::Index>> sectors;  // basis states grouped by magnetization

    SpinSystem(SpinBasis b, CouplingGraph g) : basis(b), graph(std::move(g)) {
        for (Axis a : {Axis::x, Axis::y, Axis::z}) {
            D[static_cast<int>(a)] = build_dipolar(basis, graph, a);
            C[static_cast<int>(a)] = build_collective(basis, a);
        }
        z_diag = C[2].diagonal().real();
        sectors.resize(basis.n_spins + 1);
        for (Eigen::Index s = 0; s < basis.dim(); ++s)
            sectors[std::popcount(static_cast<std::uint64_t>(s))].push_back(s);
    }

    static SpinSystem chain(int n, Boundary bc, double J) {
        SpinBasis b(n, bc);
        return SpinSystem(b, CouplingGraph::nearest_neighbor(b, J));
    }

    Eigen::Index dim() const { return basis.dim(); }
    const Mat& Dz() const { return D[2]; }

    // single-body longitudinal part: Delta * Z + sum_j w_j S_z^j
    RVec field_diagonal(const ImperfectionSet& imp) const {
        RVec f = imp.offset * z_diag;
        if (imp.disorder) f += disorder_diagonal(basis, imp.disorder->fields);
        return f;
    }

    Mat h_free(const ImperfectionSet& imp) const {
        Mat H = D[2];
        H.diagonal() += field_diagonal(imp).cast<cplx>();
        return H;
    }
};

// Phase of the rotation axis in the xy plane.
inline double pulse_phase(Action a) {
    switch (a) {
        case Action::Px: return 0.0;
        case Action::Py: return std::numbers::pi / 2;
        case Action::Mx: return std::numbers::pi;
        case Action::My: return 3 * std::numbers::pi / 2;
        default: throw InputError("pulse_phase: delay has no phase");
    }
}

namespace detail {

inline Eigen::Matrix2cd expm2(const Eigen::Matrix2cd& h, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h);
    Eigen::Vector2cd ph(std::polar(1.0, -es.eigenvalues()(0) * t), std::polar(1.0, -es.eigenvalues()(1) * t));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline Eigen::Matrix2cd in_plane(double phi) {
    return std::cos(phi) * spin_half(Axis::x) + std::sin(phi) * spin_half(Axis::y);
}

// U <- (u x u x ... x u) U, one spin at a time
inline void apply_collective(const Eigen::Matrix2cd& u, Mat& U, const SpinBasis& b) {
    const Eigen::Index d = b.dim();
    const cplx u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
    for (Eigen::Index c = 0; c < U.cols(); ++c) {
        cplx* col = U.col(c).data();
        for (int j = 0; j < b.n_spins; ++j) {
            Eigen::Index m = Eigen::Index(1) << b.bit(j);
            for (Eigen::Index s = 0; s < d; ++s) {
                if (s & m) continue;
                cplx a0 = col[s], a1 = col[s | m];
                col[s] = u00 * a0 + u01 * a1;
                col[s | m] = u10 * a0 + u11 * a1;
            }
        }
    }
}

inline Mat collective_matrix(const Eigen::Matrix2cd& u, const SpinBasis& b) {
    Mat U = Mat::Identity(b.dim(), b.dim());
    apply_collective(u, U, b);
    return U;
}

}  // namespace detail

// Single-spin factor of an ideal-width pulse: e^{-i a1 T} e^{-i theta P} e^{-i a2 T}
inline Eigen::Matrix2cd pulse_factor(Action a, const ImperfectionSet& imp) {
    if (!is_pulse(a)) return Eigen::Matrix2cd::Identity();
    double phi = pulse_phase(a);
    double theta = std::numbers::pi / 2 * (1.0 + imp.angle_error);
    Eigen::Matrix2cd P = detail::in_plane(phi), T = detail::in_plane(phi + std::numbers::pi / 2);
    return detail::expm2(T, imp.alpha1) * detail::expm2(P, theta) * detail::expm2(T, imp.alpha2);
}

// Full propagator of one action (no free evolution).
inline Mat pulse_propagator(Action a, const ImperfectionSet& imp, const Mat& h_free, const SpinSystem& sys) {
    const auto& b = sys.basis;
    if (!is_pulse(a)) return Mat::Identity(b.dim(), b.dim());
    if (imp.pulse_width < 0) throw InputError("pulse width must be non-negative");
    if (imp.pulse_width == 0.0) return detail::collective_matrix(pulse_factor(a, imp), b);
    double phi = pulse_phase(a), tw = imp.pulse_width;
    double theta = std::numbers::pi / 2 * (1.0 + imp.angle_error);
    Mat P = std::cos(phi) * sys.C[0] + std::sin(phi) * sys.C[1];
    Mat core = expm_hermitian(P * (theta / tw) + h_free, tw);
    Eigen::Matrix2cd T = detail::in_plane(phi + std::numbers::pi / 2);
    Mat U = detail::collective_matrix(detail::expm2(T, imp.alpha2), b);
    U = core * U;
    detail::apply_collective(detail::expm2(T, imp.alpha1), U, b);
    return U;
}

// Compiles cycles for one (system, imperfection set). The free Hamiltonian conserves total
// S_z, so free evolution is applied sector by sector. Safe to share across threads.
class CycleCompiler {
public:
    CycleCompiler(const SpinSystem& sys, const ImperfectionSet& imp) : basis_(sys.basis), imp_(imp) {
        const RVec field = sys.field_diagonal(imp);
        for (const auto& idx : sys.sectors) {
            Block blk;
            blk.idx = idx;
            Eigen::Index n = static_cast<Eigen::Index>(idx.size());
            Mat H(n, n);
            for (Eigen::Index r = 0; r < n; ++r)
                for (Eigen::Index c = 0; c < n; ++c) H(r, c) = sys.D[2](idx[r], idx[c]);
            for (Eigen::Index r = 0; r < n; ++r) H(r, r) += field(idx[r]);
            Eigen::SelfAdjointEigenSolver<Mat> es(H);
            if (es.info() != Eigen::Success) throw NumericalError("sector eigensolver failed");
            blk.V = es.eigenvectors();
            blk.lambda = es.eigenvalues();
            blocks_.push_back(std::move(blk));
        }
        Mat hf;
        if (imp.pulse_width > 0) hf = sys.h_free(imp);
        for (Action a : kAllActions) {
            if (!is_pulse(a)) continue;
            if (imp.pulse_width > 0) dense_[static_cast<int>(a)] = pulse_propagator(a, imp, hf, sys);
            else factor_[static_cast<int>(a)] = pulse_factor(a, imp);
        }
    }

    // U <- e^{-i H_free t} U
    void apply_free(double t, Mat& U) const {
        if (t == 0.0) return;
        const auto& fb = free_blocks(t);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& idx = blocks_[k].idx;
            Mat tmp = U(idx, Eigen::all);
            U(idx, Eigen::all) = fb[k] * tmp;
        }
    }

    Mat free_propagator(double t) const {
        Mat U = Mat::Identity(basis_.dim(), basis_.dim());
        apply_free(t, U);
        return U;
    }

    void apply_pulse(Action a, Mat& U) const {
        if (!is_pulse(a)) return;
        if (imp_.pulse_width > 0) U = dense_[static_cast<int>(a)] * U;
        else detail::apply_collective(factor_[static_cast<int>(a)], U, basis_);
    }

    // U = F U_{A_{M-1}} ... F U_{A_0}; with finite width the free part of a pulse slot is tau - t_w
    Mat compile(const PulseSequence& seq, bool check = true) const {
        validate(seq);
        validate(imp_, seq.tau);
        Mat U = Mat::Identity(basis_.dim(), basis_.dim());
        double pending = 0.0;
        for (Action a : seq.actions) {
            if (is_pulse(a)) {
                apply_free(pending, U);
                pending = 0.0;
                apply_pulse(a, U);
                pending += seq.tau - imp_.pulse_width;
            } else {
                pending += seq.tau;
            }
        }
        apply_free(pending, U);
        if (check) require_unitary(U, "compile_cycle", 1e-8);
        return U;
    }

private:
    struct Block {
        std::vector<Eigen::Index> idx;
        Mat V;
        RVec lambda;
    };

    const std::vector<Mat>& free_blocks(double t) const {
        {
            std::lock_guard lk(*mu_);
            auto it = cache_.find(t);
            if (it != cache_.end()) return it->second;
        }
        std::vector<Mat> fb;
        fb.reserve(blocks_.size());
        for (const auto& b : blocks_) {
            CVec ph(b.lambda.size());
            for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, -b.lambda(k) * t);
            fb.push_back(b.V * ph.asDiagonal() * b.V.adjoint());
        }
        std::lock_guard lk(*mu_);
        return cache_.emplace(t, std::move(fb)).first->second;
    }

    SpinBasis basis_;
    ImperfectionSet imp_;
    std::vector<Block> blocks_;
    std::array<Eigen::Matrix2cd, 5> factor_{};
    std::array<Mat, 5> dense_{};
    mutable std::map<double, std::vector<Mat>> cache_;
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

inline Mat compile_cycle(const PulseSequence& seq, const ImperfectionSet& imp, const SpinSystem& sys) {
    validate(seq);
    validate(imp, seq.tau);
    return CycleCompiler(sys, imp).compile(seq);
}

}  // namespace ddlab
