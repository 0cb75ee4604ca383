#pragma once

#include "ddlab/core.hpp"
#include "ddlab/rng.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

namespace ddlab {

enum class Boundary { open, periodic };

inline constexpr int kMaxSpins = 12;

struct SpinBasis {
    int n_spins = 2;
    Boundary boundary = Boundary::open;

    SpinBasis() = default;
    SpinBasis(int n, Boundary b) : n_spins(n), boundary(b) {
        if (n < 1 || n > kMaxSpins)
            throw InputError("n_spins must be in [1," + std::to_string(kMaxSpins) + "], got " +
                             std::to_string(n));
    }
    Eigen::Index dim() const { return Eigen::Index(1) << n_spins; }
    // spin j lives on bit (N-1-j): spin 0 is the most significant tensor factor
    int bit(int j) const { return n_spins - 1 - j; }
};

// J_jk in rad/s, keyed with j < k.
struct CouplingGraph {
    std::map<std::pair<int, int>, double> couplings;

    void set(int j, int k, double J) {
        if (j == k) throw InputError("self-coupling on spin " + std::to_string(j));
        if (j > k) std::swap(j, k);
        couplings[{j, k}] = J;
    }

    static CouplingGraph nearest_neighbor(const SpinBasis& b, double J) {
        CouplingGraph g;
        int n = b.n_spins;
        for (int j = 0; j + 1 < n; ++j) g.set(j, j + 1, J);
        // N=2 periodic would double the single bond
        if (b.boundary == Boundary::periodic && n > 2) g.set(0, n - 1, J);
        return g;
    }
};

struct DisorderRealization {
    std::vector<double> fields;  // w_j in rad/s
    std::uint64_t seed = 0;
};

inline DisorderRealization make_disorder(int n, double W, std::uint64_t seed) {
    DisorderRealization d;
    d.seed = seed;
    Rng rng(seed);
    d.fields.resize(n);
    for (auto& w : d.fields) w = W * (2.0 * uniform01(rng) - 1.0);
    return d;
}

inline Eigen::Matrix2cd spin_half(Axis a) {
    const cplx i(0, 1);
    Eigen::Matrix2cd s;
    switch (a) {
        case Axis::x: s << 0, 0.5, 0.5, 0; break;
        case Axis::y: s << 0, -0.5 * i, 0.5 * i, 0; break;
        case Axis::z: s << 0.5, 0, 0, -0.5; break;
    }
    return s;
}

namespace detail {

// adds c * S_a^j S_a^k for a in {x,y,z}
inline void add_pair(Mat& H, const SpinBasis& b, int j, int k, Axis a, double c) {
    const Eigen::Index d = b.dim();
    const Eigen::Index mj = Eigen::Index(1) << b.bit(j), mk = Eigen::Index(1) << b.bit(k);
    for (Eigen::Index s = 0; s < d; ++s) {
        double sj = (s & mj) ? -1.0 : 1.0, sk = (s & mk) ? -1.0 : 1.0;
        switch (a) {
            case Axis::z: H(s, s) += c * 0.25 * sj * sk; break;
            case Axis::x: H(s ^ mj ^ mk, s) += c * 0.25; break;
            case Axis::y: H(s ^ mj ^ mk, s) += -c * 0.25 * sj * sk; break;
        }
    }
}

inline void check_index(const SpinBasis& b, int j) {
    if (j < 0 || j >= b.n_spins)
        throw InputError("spin index " + std::to_string(j) + " out of range for N=" +
                         std::to_string(b.n_spins));
}

}  // namespace detail

// D_a = 1/2 sum_{j<k} J_jk (3 S_a^j S_a^k - S^j . S^k)
inline Mat build_dipolar(const SpinBasis& b, const CouplingGraph& g, Axis axis) {
    Mat H = Mat::Zero(b.dim(), b.dim());
    for (const auto& [jk, J] : g.couplings) {
        auto [j, k] = jk;
        detail::check_index(b, j);
        detail::check_index(b, k);
        for (Axis a : {Axis::x, Axis::y, Axis::z})
            detail::add_pair(H, b, j, k, a, 0.5 * J * ((a == axis ? 3.0 : 0.0) - 1.0));
    }
    return H;
}

// sum_j c_j S_axis^j
inline Mat build_weighted_collective(const SpinBasis& b, Axis axis, const std::vector<double>& c) {
    if (static_cast<int>(c.size()) != b.n_spins) throw InputError("weight length != N");
    const Eigen::Index d = b.dim();
    Mat O = Mat::Zero(d, d);
    const cplx i(0, 1);
    for (int j = 0; j < b.n_spins; ++j) {
        Eigen::Index m = Eigen::Index(1) << b.bit(j);
        for (Eigen::Index s = 0; s < d; ++s) {
            bool down = s & m;
            switch (axis) {
                case Axis::z: O(s, s) += c[j] * (down ? -0.5 : 0.5); break;
                case Axis::x: O(s ^ m, s) += c[j] * 0.5; break;
                case Axis::y: O(s ^ m, s) += c[j] * (down ? -0.5 * i : 0.5 * i); break;
            }
        }
    }
    return O;
}

inline Mat build_collective(const SpinBasis& b, Axis axis) {
    return build_weighted_collective(b, axis, std::vector<double>(b.n_spins, 1.0));
}

inline RVec disorder_diagonal(const SpinBasis& b, const std::vector<double>& w) {
    if (static_cast<int>(w.size()) != b.n_spins)
        throw InputError("disorder length " + std::to_string(w.size()) + " != N=" +
                         std::to_string(b.n_spins));
    RVec diag = RVec::Zero(b.dim());
    for (Eigen::Index s = 0; s < b.dim(); ++s)
        for (int j = 0; j < b.n_spins; ++j) diag(s) += ((s >> b.bit(j)) & 1 ? -0.5 : 0.5) * w[j];
    return diag;
}

inline Mat build_disorder_hamiltonian(const SpinBasis& b, const DisorderRealization& r) {
    return disorder_diagonal(b, r.fields).cast<cplx>().asDiagonal();
}

// Eigenphases of a unitary in (-pi, pi]; -pi is folded onto +pi.
inline RVec eigenphases(const Mat& W) {
    Eigen::ComplexSchur<Mat> schur(W, false);
    if (schur.info() != Eigen::Success) throw NumericalError("eigenphases: Schur failed");
    const auto& T = schur.matrixT();
    RVec th(W.rows());
    for (Eigen::Index k = 0; k < th.size(); ++k) {
        double a = std::arg(T(k, k));
        th(k) = (a <= -std::numbers::pi) ? std::numbers::pi : a;
    }
    return th;
}

// |Tr W^{p}|/dim on the principal branch
inline double trace_fidelity(const RVec& phases, double p) {
    cplx s = 0;
    for (Eigen::Index k = 0; k < phases.size(); ++k) s += std::polar(1.0, phases(k) * p);
    return std::abs(s) / static_cast<double>(phases.size());
}

inline double propagator_fidelity(const Mat& U, int M, const Mat& U_tgt) {
    if (M < 1) throw InputError("propagator_fidelity: M must be >= 1");
    if (U.rows() != U_tgt.rows() || U.cols() != U_tgt.cols())
        throw InputError("propagator_fidelity: shape mismatch");
    require_unitary(U, "propagator_fidelity(U)", 1e-8);
    require_unitary(U_tgt, "propagator_fidelity(U_tgt)", 1e-8);
    return std::min(1.0, trace_fidelity(eigenphases(U * U_tgt.adjoint()), 1.0 / M));
}

inline double propagator_fidelity(const Mat& U, int M) {
    if (M < 1) throw InputError("propagator_fidelity: M must be >= 1");
    require_unitary(U, "propagator_fidelity(U)", 1e-8);
    return std::min(1.0, trace_fidelity(eigenphases(U), 1.0 / M));
}

inline constexpr double kInfidelityFloor = 1e-12;

inline double reward(double F) {
    if (!(F >= 0.0 && F <= 1.0)) throw InputError("reward: fidelity outside [0,1]");
    return -std::log(std::max(1.0 - F, kInfidelityFloor));
}

inline Mat matrix_power(const Mat& U, long n) {
    if (n < 0) throw InputError("matrix_power: negative exponent");
    Mat r = Mat::Identity(U.rows(), U.cols()), base = U;
    while (n) {
        if (n & 1) r = r * base;
        n >>= 1;
        if (n) base = base * base;
    }
    return r;
}

// (4/N) Re Tr(U O U^dag O) / 2^N for a propagator U already raised to the sampled time
inline double correlation_of(const Mat& Ut, const Mat& O, int n_spins) {
    Mat A = Ut * O;
    Mat B = Ut.adjoint() * O;
    cplx tr = (A.transpose().cwiseProduct(B)).sum();
    return 4.0 / n_spins * tr.real() / static_cast<double>(Ut.rows());
}

inline double autocorrelation(const Mat& U_cycle, long n_cycles, Axis axis, const SpinBasis& b) {
    if (U_cycle.rows() != b.dim()) throw InputError("autocorrelation: dimension mismatch");
    if (n_cycles == 0) return 1.0;
    require_unitary(U_cycle, "autocorrelation", 1e-8);
    return correlation_of(matrix_power(U_cycle, n_cycles), build_collective(b, axis), b.n_spins);
}

inline double average_correlation(double cxx, double cyy, double czz) {
    if (cxx > 0 && cyy > 0 && czz > 0) return std::cbrt(cxx * cyy * czz);
    return 0.0;
}

}  // namespace ddlab
