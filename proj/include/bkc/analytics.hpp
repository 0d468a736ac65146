#pragma once

#include "bkc/model.hpp"

#include <vector>

namespace bkc {

// Continuum variables with lattice spacing a = 1.
struct ContinuumParams {
    double lattice_a = 1.0;
    double length_L = 0.0;  // N + 1
    double xi = 0.0;        // 1 / r, infinite when r = 0
    double x0 = 0.0;        // gauge position j0
    double varphi = 0.0;    // pi - 2 phi

    double l_over_xi() const;
};

ContinuumParams continuum_params(const ModelParams& params, double j0);

// Per-mode conserved correlators of the quench, n = 1..N stored at n - 1.
struct ConservedCorrelators {
    Vec normal;      // <b_n^dag b_n>
    CVec anomalous;  // <b_{N+1-n} b_n>
};

ConservedCorrelators conserved_correlators(const ModelParams& params, double j0);

enum class CorrelatorForm { Discrete, Continuum };

struct AvgSiteCorrelators {
    double n_bar = 0.0;
    cplx m_bar;
};

// Time-averaged tight-binding-frame correlators of site j.
AvgSiteCorrelators avg_site_correlators(const ModelParams& params, int j, double j0,
                                        CorrelatorForm form = CorrelatorForm::Discrete);

// Large-L closed form of the time-averaged single-site nu^2.
double nu_bar_squared(const ModelParams& params);
// Finite-N value (2 n + 1)^2 - 4 |m|^2 from the discrete averaged correlators.
double nu_bar_squared_discrete(const ModelParams& params, int j, double j0);

// ln(delta / (sqrt(3) w)) + 1 - ln 2.
double critical_s1_constant(const ModelParams& params);
// Whether |g^2 - delta^2| N^2 / w^2 < 1.
bool in_critical_window(const ModelParams& params);
// Dispatching single-site entropy prediction.
double s1_prediction(const ModelParams& params);

struct GgeSpectrum {
    Vec nus;
    Vec entropy_per_mode;
};

GgeSpectrum gge_spectrum(const ModelParams& params, double j0 = 0.0);
// Continuum nu_p at p = pi n / L with gauge x0 = 0.
double gge_continuum_nu(const ModelParams& params, int n);
double gge_entropy(const ModelParams& params, int l, double j0 = 0.0);

enum class CollapseMode { SingleSite, QuarterCut };

struct CollapseRow {
    double g = 0.0;
    int n_sites = 0;
    double entropy = 0.0;
};

struct CollapsePoint {
    double g = 0.0;
    int n_sites = 0;
    double x = 0.0;
    double y = 0.0;
};

struct CollapseResult {
    std::vector<CollapsePoint> points;
    double quality = 0.0;
};

// x = (g^2 - delta^2) N^(1/nu); y = S(g) - S(delta), divided by N for QuarterCut.
// Quality is the mean squared vertical distance between each point and the other
// system sizes' curves, linearly interpolated at the same x where they overlap.
CollapseResult scaling_collapse(const std::vector<CollapseRow>& dataset, double delta,
                                double nu_exp, CollapseMode mode);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bkc
