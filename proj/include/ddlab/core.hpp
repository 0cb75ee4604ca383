#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace ddlab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Malformed arguments, files or configs. CLI maps this to exit code 2.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loss of unitarity/hermiticity or other breakdown of the numerics. Exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Axis { x = 0, y = 1, z = 2 };

inline char axis_char(Axis a) { return "xyz"[static_cast<int>(a)]; }

inline Axis parse_axis(const std::string& s) {
    if (s == "x") return Axis::x;
    if (s == "y") return Axis::y;
    if (s == "z") return Axis::z;
    throw InputError("unknown axis '" + s + "'");
}

inline double max_abs(const Mat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

inline double hermiticity_error(const Mat& A) { return max_abs(A - A.adjoint()); }

inline double unitarity_error(const Mat& U) {
    return max_abs(U.adjoint() * U - Mat::Identity(U.rows(), U.cols()));
}

inline bool is_hermitian(const Mat& A) {
    double scale = max_abs(A);
    return hermiticity_error(A) <= 1e-12 * (scale > 0 ? scale : 1.0);
}

inline void require_unitary(const Mat& U, const char* what, double tol = 1e-10) {
    if (U.rows() != U.cols()) throw InputError(std::string(what) + ": not square");
    double e = unitarity_error(U);
    if (!(e <= tol))
        throw NumericalError(std::string(what) + ": unitarity error " + std::to_string(e));
}

// e^{-iHt} by eigendecomposition of a hermitian H.
inline Mat expm_hermitian(const Mat& H, double t) {
    if (H.rows() != H.cols()) throw InputError("expm_hermitian: not square");
    if (!is_hermitian(H)) throw InputError("expm_hermitian: non-hermitian input");
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("expm_hermitian: eigensolver failed");
    CVec ph(H.rows());
    for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, -es.eigenvalues()(k) * t);
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline Mat commutator(const Mat& A, const Mat& B) { return A * B - B * A; }

}  // namespace ddlab
