#pragma once
// Reference constructions for tests: explicit Kronecker products and Pade exponentials,
// sharing no code with the library's bit-twiddling builders or eigen-based exponentials.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <numbers>
#include <string>
#include <vector>

namespace oracle {

using M = Eigen::MatrixXcd;
using c = std::complex<double>;

inline M pauli(char a) {
    M s(2, 2);
    if (a == 'x') s << 0, 1, 1, 0;
    else if (a == 'y') s << 0, c(0, -1), c(0, 1), 0;
    else s << 1, 0, 0, -1;
    return 0.5 * s;
}

inline M site(const M& o, int j, int n) {
    M r = M::Identity(1, 1);
    for (int k = 0; k < n; ++k) {
        M f = k == j ? o : M::Identity(2, 2);
        M t = Eigen::kroneckerProduct(r, f);
        r = t;
    }
    return r;
}

inline M collective(char a, int n) {
    M r = M::Zero(1 << n, 1 << n);
    for (int j = 0; j < n; ++j) r += site(pauli(a), j, n);
    return r;
}

inline std::vector<std::pair<int, int>> chain_bonds(int n, bool pbc) {
    std::vector<std::pair<int, int>> b;
    for (int j = 0; j + 1 < n; ++j) b.push_back({j, j + 1});
    if (pbc && n > 2) b.push_back({0, n - 1});
    return b;
}

inline M dipolar(int n, double J, bool pbc, char axis) {
    M H = M::Zero(1 << n, 1 << n);
    for (auto [j, k] : chain_bonds(n, pbc))
        for (char a : {'x', 'y', 'z'})
            H += 0.5 * J * ((a == axis ? 3.0 : 0.0) - 1.0) * site(pauli(a), j, n) * site(pauli(a), k, n);
    return H;
}

inline M expm(const M& H, double t) { return (M(c(0, -t) * H)).exp(); }

inline M pulse(const std::string& tok, int n) {
    if (tok == "d") return M::Identity(1 << n, 1 << n);
    double s = tok[0] == '-' ? -1.0 : 1.0;
    char a = tok.back();
    return expm(collective(a, n), s * std::numbers::pi / 2);
}

// pulse then free evolution in every slot
inline M cycle(const std::vector<std::string>& toks, int n, double J, bool pbc, double tau) {
    M F = expm(dipolar(n, J, pbc, 'z'), tau);
    M U = M::Identity(1 << n, 1 << n);
    for (const auto& t : toks) U = F * pulse(t, n) * U;
    return U;
}

inline double fidelity(const M& U, int Mslots) {
    Eigen::ComplexEigenSolver<M> es(U);
    c s = 0;
    for (int k = 0; k < es.eigenvalues().size(); ++k) {
        double th = std::arg(es.eigenvalues()(k));
        if (th <= -std::numbers::pi) th = std::numbers::pi;
        s += std::polar(1.0, th / Mslots);
    }
    return std::abs(s) / static_cast<double>(U.rows());
}

}  // namespace oracle
