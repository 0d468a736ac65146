#pragma once

#include "bkc/dynamics.hpp"
#include "bkc/model.hpp"

#include <vector>

namespace bkc {

// Initial mode correlators in the tight-binding frame with centered gauge.
struct InitialMomentumCorrelators {
    CMat normal;     // (k, q) -> <b_k^dag b_q>
    CMat anomalous;  // (k, q) -> <b_k b_q>
};

// site is accepted for interface symmetry; the mode correlators do not depend on it.
InitialMomentumCorrelators momentum_correlators(const ModelParams& params, int site,
                                                double j0);

double a_kernel(int n, int l, int size);
// (2 / (N + 1)) sum_k sin^2(pi k / (N+1)) sin(pi k l / (N+1)) sin(pi k n / (N+1)).
double a_kernel_bruteforce(int n, int l, int size);

struct SelectionSums {
    cplx i_a_r, i_b_r, i_c_r;
    cplx i_a_a, i_b_a, i_c_a;
    // Exact time averages of <d^dag d>^2 and |<d d>|^2 over the union of the sets.
    cplx union_r, union_a;
    double n_bar = 0.0;  // time-averaged <d^dag d>
    cplx m_bar;          // time-averaged <d d>
    // Frequency resonances outside the three generic sets.
    long extra_resonances = 0;
};

SelectionSums selection_sums(const ModelParams& params, int site = 1);

// Number of ordered quadruples with w_q + w_q' = w_k + w_k' that are not in A, B or C.
long count_extra_resonances(const Vec& frequencies, double tol = 1e-9);

double epsilon4(const ModelParams& params, int site = 1);

// Leading-order estimate (2 / (N + 1))^2 (N - cosh(2 r0) sinh(N r) / sinh(r)) / 2.
double ib_minus_ia_estimate(const ModelParams& params);

struct LogCorrectionResult {
    double value = 0.0;          // var(nu_t^2) / mean(nu_t^2)^2
    double mean_nu_sq = 0.0;
    double log_mean_nu_sq = 0.0;
    int n_samples = 0;
};

double log_correction(const std::vector<double>& nu_sq_samples);
LogCorrectionResult log_correction(const ModelParams& params, int site,
                                   const AveragingProtocol& protocol);

struct FourPointReport {
    ModelParams params;
    int site = 1;
    double epsilon4 = 0.0;
    double one_over_eps4 = 0.0;
    double log_correction = 0.0;
};

}  // namespace bkc
