#include "bkc/model.hpp"

#include "bkc/errors.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <string>

namespace bkc {

ModelParams::ModelParams(double w_, double g_, double delta_, int n_sites_)
    : w(w_), g(g_), delta(delta_), n_sites(n_sites_) {
    if (!std::isfinite(w) || !std::isfinite(g) || !std::isfinite(delta))
        throw InvalidParams("model parameters must be finite");
    if (g < 0.0 || delta < 0.0)
        throw InvalidParams("g and delta must be non-negative");
    if (!(w > delta))
        throw InvalidParams("stable regime requires w > delta (w=" + std::to_string(w) +
                            ", delta=" + std::to_string(delta) + ")");
    if (n_sites < 2)
        throw InvalidParams("n_sites must be at least 2");
}

double ModelParams::amplitude_j() const {
    return std::sqrt(w * w + g * g - delta * delta);
}

const char* to_string(PhaseRegime regime) {
    switch (regime) {
    case PhaseRegime::NonReciprocal: return "non-reciprocal";
    case PhaseRegime::Critical: return "critical";
    case PhaseRegime::Reciprocal: return "reciprocal";
    }
    return "unknown";
}

PhaseRegime classify_phase(const ModelParams& params) {
    // Exact comparison on purpose: near-critical runs pass g != delta explicitly.
    if (params.g < params.delta)
        return PhaseRegime::NonReciprocal;
    if (params.g == params.delta)
        return PhaseRegime::Critical;
    return PhaseRegime::Reciprocal;
}

Mat symplectic_form(int n_modes) {
    Mat om = Mat::Zero(2 * n_modes, 2 * n_modes);
    for (int j = 0; j < n_modes; ++j) {
        om(2 * j, 2 * j + 1) = 1.0;
        om(2 * j + 1, 2 * j) = -1.0;
    }
    return om;
}

namespace {

void add_bond(Mat& h, int a, int b, double w, double g, double d) {
    // Bond between site a (left) and b (right), both 0-based.
    const int qa = 2 * a, pa = 2 * a + 1, qb = 2 * b, pb = 2 * b + 1;
    auto set = [&h](int i, int k, double v) {
        h(i, k) += v;
        h(k, i) += v;
    };
    set(qb, qa, 0.5 * g);
    set(pb, pa, 0.5 * g);
    set(qb, pa, 0.5 * (d - w));
    set(pb, qa, 0.5 * (d + w));
}

Mat bdg_h(const ModelParams& p, Boundary boundary) {
    const int n = p.n_sites;
    Mat h = Mat::Zero(2 * n, 2 * n);
    for (int j = 0; j + 1 < n; ++j)
        add_bond(h, j, j + 1, p.w, p.g, p.delta);
    if (boundary == Boundary::PBC)
        add_bond(h, n - 1, 0, p.w, p.g, p.delta);
    return h;
}

}  // namespace

BdgMatrices bdg_matrices(const ModelParams& params) {
    return {bdg_h(params, Boundary::OBC), symplectic_form(params.n_sites)};
}

Mat tight_binding_bdg(int n_sites, double amplitude_j) {
    Mat h = Mat::Zero(2 * n_sites, 2 * n_sites);
    for (int j = 0; j + 1 < n_sites; ++j) {
        for (int c = 0; c < 2; ++c) {
            h(2 * j + c, 2 * (j + 1) + c) = 0.5 * amplitude_j;
            h(2 * (j + 1) + c, 2 * j + c) = 0.5 * amplitude_j;
        }
    }
    return h;
}

Eigen::Matrix2d site_factor(double s, double r0, double theta) {
    Eigen::Matrix2d rot;
    rot << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
    Eigen::Matrix2d grad = Eigen::Vector2d(std::exp(-s), std::exp(s)).asDiagonal();
    Eigen::Matrix2d uni;
    uni << std::cosh(r0), std::sinh(r0), std::sinh(r0), std::cosh(r0);
    return rot * grad * uni;
}

Mat SqueezingFrame::global() const {
    const int n = n_sites();
    Mat f = Mat::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j)
        f.block<2, 2>(2 * j, 2 * j) = site_factors[j];
    return f;
}

Mat SqueezingFrame::global_inverse() const {
    const int n = n_sites();
    Mat f = Mat::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j)
        f.block<2, 2>(2 * j, 2 * j) = site_factors[j].inverse();
    return f;
}

SqueezingFrame squeezing_frame(const ModelParams& params, double j0) {
    SqueezingFrame fr;
    fr.regime = classify_phase(params);
    fr.j0 = j0;
    const double w = params.w, g = params.g, d = params.delta;
    switch (fr.regime) {
    case PhaseRegime::Critical:
        throw CriticalFrameUndefined("squeezing frame is undefined at g == delta");
    case PhaseRegime::NonReciprocal: {
        const double k = std::sqrt(d * d - g * g);
        fr.r0 = 0.5 * std::atanh(g / d);
        fr.r = 0.5 * std::log((w + k) / (w - k));
        fr.phi = 0.5 * std::numbers::pi;
        break;
    }
    case PhaseRegime::Reciprocal:
        fr.r0 = 0.5 * std::atanh(d / g);
        fr.r = 0.0;
        fr.phi = std::atan(w / std::sqrt(g * g - d * d));
        break;
    }
    fr.site_factors.reserve(params.n_sites);
    for (int j = 1; j <= params.n_sites; ++j)
        fr.site_factors.push_back(site_factor(fr.r * (j - j0), fr.r0, fr.phi * j));
    return fr;
}

double default_gauge(const ModelParams& params) {
    return 0.5 * (params.n_sites + 1);
}

double validate_frame(const SqueezingFrame& frame, const ModelParams& params) {
    const Mat finv = frame.global_inverse();
    const Mat hd = finv.transpose() * bdg_matrices(params).h * finv;
    return (hd - tight_binding_bdg(params.n_sites, params.amplitude_j())).cwiseAbs().maxCoeff();
}

TightBindingSpectrum tight_binding_spectrum(const ModelParams& params) {
    const int n = params.n_sites;
    TightBindingSpectrum tb;
    tb.amplitude_j = params.amplitude_j();
    tb.energies.resize(n);
    tb.frequencies.resize(n);
    tb.wavefunctions.resize(n, n);
    const double k = std::numbers::pi / (n + 1);
    const double norm = std::sqrt(2.0 / (n + 1));
    for (int m = 1; m <= n; ++m) {
        const double c = std::cos(k * m);
        tb.energies(m - 1) = -2.0 * tb.amplitude_j * c;
        tb.frequencies(m - 1) = tb.amplitude_j * c;
        for (int j = 1; j <= n; ++j)
            tb.wavefunctions(m - 1, j - 1) = norm * std::sin(k * m * j);
    }
    // cos(pi/2) is not exactly zero in floating point; pin the middle mode.
    if (n % 2 == 1) {
        tb.energies((n - 1) / 2) = 0.0;
        tb.frequencies((n - 1) / 2) = 0.0;
    }
    return tb;
}

CVec dynamical_spectrum(const ModelParams& params, Boundary boundary) {
    const Mat gen = symplectic_form(params.n_sites) * bdg_h(params, boundary);
    Eigen::EigenSolver<Mat> es(gen, false);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("eigensolver failed on the dynamical matrix");
    return cplx(0.0, 1.0) * es.eigenvalues();
}

}  // namespace bkc
