#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace bkc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

// Chain parameters. Construction enforces w > delta >= 0, g >= 0 and n_sites >= 2.
struct ModelParams {
    double w = 1.0;
    double g = 0.0;
    double delta = 0.0;
    int n_sites = 2;

    ModelParams() = default;
    ModelParams(double w_, double g_, double delta_, int n_sites_);

    // Tight-binding amplitude sqrt(w^2 + g^2 - delta^2).
    double amplitude_j() const;
};

enum class PhaseRegime { NonReciprocal, Critical, Reciprocal };

const char* to_string(PhaseRegime regime);

PhaseRegime classify_phase(const ModelParams& params);

struct BdgMatrices {
    Mat h;      // H = 1/2 r^T h r, ordering (q1, p1, ..., qN, pN)
    Mat omega;  // block diag [[0, 1], [-1, 0]]
};

Mat symplectic_form(int n_modes);

BdgMatrices bdg_matrices(const ModelParams& params);

// h of the hopping chain H = (J/2) sum_j (d_j^dag d_{j+1} + h.c.).
Mat tight_binding_bdg(int n_sites, double amplitude_j);

// Local factor Rot(theta) * diag(e^-s, e^s) * [[cosh r0, sinh r0], [sinh r0, cosh r0]]
// with Rot(theta) = [[cos, sin], [-sin, cos]]. Maps site quadratures of a onto those of d.
Eigen::Matrix2d site_factor(double s, double r0, double theta);

struct SqueezingFrame {
    PhaseRegime regime = PhaseRegime::NonReciprocal;
    double r = 0.0;
    double r0 = 0.0;
    double phi = 0.0;
    double j0 = 0.0;
    std::vector<Eigen::Matrix2d> site_factors;

    int n_sites() const { return static_cast<int>(site_factors.size()); }
    // Global block-diagonal F with r_d = F r_a.
    Mat global() const;
    Mat global_inverse() const;
};

// Sites are 1-based. j0 may be half-integer, e.g. (N + 1) / 2 for even N.
SqueezingFrame squeezing_frame(const ModelParams& params, double j0);

double default_gauge(const ModelParams& params);

// Max-entry deviation of F^-T h F^-1 from the tight-binding h.
double validate_frame(const SqueezingFrame& frame, const ModelParams& params);

struct TightBindingSpectrum {
    double amplitude_j = 0.0;
    Vec energies;       // -2 J cos(pi n / (N + 1))
    Vec frequencies;    // J cos(pi n / (N + 1)), rotation rate of mode n
    Mat wavefunctions;  // (n - 1, j - 1) -> sqrt(2 / (N + 1)) sin(pi n j / (N + 1))
};

TightBindingSpectrum tight_binding_spectrum(const ModelParams& params);

enum class Boundary { OBC, PBC };

// Eigenvalues of i * Omega * h.
CVec dynamical_spectrum(const ModelParams& params, Boundary boundary);

}  // namespace bkc
