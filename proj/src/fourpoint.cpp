#include "bkc/fourpoint.hpp"

#include "bkc/errors.hpp"
#include "bkc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace bkc {

namespace {

constexpr double kPi = std::numbers::pi;

double ts(double x, int size) {
    return std::sin(kPi * x / (size + 1));
}

void require_non_reciprocal(const ModelParams& params) {
    if (classify_phase(params) == PhaseRegime::Critical)
        throw CriticalFrameUndefined("four-point sums need the squeezing frame");
    if (classify_phase(params) != PhaseRegime::NonReciprocal)
        throw DomainError("four-point analysis is implemented for the non-reciprocal phase");
}

}  // namespace

InitialMomentumCorrelators momentum_correlators(const ModelParams& params, int site, double j0) {
    require_non_reciprocal(params);
    const int size = params.n_sites;
    if (site < 1 || site > size)
        throw DomainError("site index out of range");
    const SqueezingFrame fr = squeezing_frame(params, j0);
    const double c2 = std::cosh(2.0 * fr.r0), s2 = std::sinh(2.0 * fr.r0);
    // Real-space initial correlators are diagonal in the tight-binding frame.
    CVec h(size), g(size);
    for (int n = 1; n <= size; ++n) {
        const double x = 2.0 * fr.r * (n - j0);
        h(n - 1) = 0.5 * std::cosh(x) * c2 - 0.5;
        g(n - 1) = cplx(-0.5 * std::sinh(x) * c2, 0.5 * s2) * ((n % 2 == 0) ? 1.0 : -1.0);
    }
    const CMat psi = tight_binding_spectrum(params).wavefunctions.cast<cplx>();
    InitialMomentumCorrelators out;
    out.normal = psi * h.asDiagonal() * psi.transpose();
    out.anomalous = psi * g.asDiagonal() * psi.transpose();
    return out;
}

double a_kernel(int n, int l, int size) {
    if (n < 1 || l < 1 || n > size || l > size)
        throw DomainError("kernel indices out of range");
    if (n == l)
        return 0.5 + 0.25 * (n == 1) + 0.25 * (n == size);
    if (std::abs(n - l) == 2)
        return -0.25;
    return 0.0;
}

double a_kernel_bruteforce(int n, int l, int size) {
    double sum = 0.0;
    for (int k = 1; k <= size; ++k) {
        const double s = ts(k, size);
        sum += s * s * ts(static_cast<double>(k) * l, size) * ts(static_cast<double>(k) * n, size);
    }
    return 2.0 / (size + 1) * sum;
}

long count_extra_resonances(const Vec& frequencies, double tol) {
    const int size = static_cast<int>(frequencies.size());
    struct Pair {
        double sum;
        int q, qp;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(size) * size);
    for (int q = 0; q < size; ++q)
        for (int qp = 0; qp < size; ++qp)
            pairs.push_back({frequencies(q) + frequencies(qp), q, qp});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return a.sum < b.sum || (a.sum == b.sum && std::make_pair(a.q, a.qp) < std::make_pair(b.q, b.qp));
    });
    const double scale = std::max(1.0, frequencies.cwiseAbs().maxCoeff());
    long extra = 0;
    std::size_t start = 0;
    while (start < pairs.size()) {
        std::size_t end = start + 1;
        while (end < pairs.size() && pairs[end].sum - pairs[end - 1].sum <= tol * scale)
            ++end;
        const double mid = pairs[(start + end) / 2].sum;
        // Pairs summing to zero are q' = N + 1 - q: all of them belong to set B.
        if (std::abs(mid) > tol * scale) {
            const long group = static_cast<long>(end - start);
            long generic = 0;
            for (std::size_t i = start; i < end; ++i)
                generic += pairs[i].q == pairs[i].qp ? 1 : 2;
            extra += group * group - generic;
        }
        start = end;
    }
    return extra;
}

SelectionSums selection_sums(const ModelParams& params, int site) {
    const int size = params.n_sites;
    const InitialMomentumCorrelators mc = momentum_correlators(params, site, default_gauge(params));
    const TightBindingSpectrum tb = tight_binding_spectrum(params);
    const Vec c = tb.wavefunctions.col(site - 1);
    const CMat& n0 = mc.normal;
    const CMat& m0 = mc.anomalous;
    const auto bar = [size](int q) { return size - 1 - q; };
    const auto t_r = [&](int q, int k, int qp, int kp) {
        return c(q) * c(k) * c(qp) * c(kp) * n0(q, k) * n0(qp, kp);
    };
    const auto t_a = [&](int q, int k, int qp, int kp) {
        return c(q) * c(qp) * c(k) * c(kp) * m0(k, kp) * std::conj(m0(q, qp));
    };

    SelectionSums s;
    cplx b_not_a_r = 0.0, b_not_a_a = 0.0, c_rest_r = 0.0, c_rest_a = 0.0;
    for (int q = 0; q < size; ++q) {
        for (int k = 0; k < size; ++k) {
            // A: (q, q, k, k); B: (q, k, bar q, bar k); C: (q, k, k, q).
            const cplx ar = t_r(q, q, k, k), aa = t_a(q, q, k, k);
            const cplx br = t_r(q, k, bar(q), bar(k)), ba = t_a(q, k, bar(q), bar(k));
            const cplx cr = t_r(q, k, k, q), ca = t_a(q, k, k, q);
            s.i_a_r += ar;
            s.i_a_a += aa;
            s.i_b_r += br;
            s.i_b_a += ba;
            s.i_c_r += cr;
            s.i_c_a += ca;
            if (q != k) {
                b_not_a_r += br;
                b_not_a_a += ba;
                if (k != bar(q)) {
                    c_rest_r += cr;
                    c_rest_a += ca;
                }
            }
        }
    }
    s.union_r = s.i_a_r + b_not_a_r + c_rest_r;
    s.union_a = s.i_a_a + b_not_a_a + c_rest_a;
    for (int q = 0; q < size; ++q) {
        s.n_bar += c(q) * c(q) * n0(q, q).real();
        s.m_bar += c(q) * c(bar(q)) * m0(q, bar(q));
    }
    s.extra_resonances = count_extra_resonances(tb.frequencies);
    return s;
}

double epsilon4(const ModelParams& params, int site) {
    const SelectionSums s = selection_sums(params, site);
    const double den = s.n_bar * s.n_bar - std::norm(s.m_bar);
    return ((s.union_r - s.union_a) / den).real() - 1.0;
}

double ib_minus_ia_estimate(const ModelParams& params) {
    require_non_reciprocal(params);
    const SqueezingFrame fr = squeezing_frame(params, default_gauge(params));
    const double n = params.n_sites;
    const double pre = 2.0 / (n + 1.0);
    return 0.5 * pre * pre * (n - std::cosh(2.0 * fr.r0) * std::sinh(n * fr.r) / std::sinh(fr.r));
}

double log_correction(const std::vector<double>& nu_sq_samples) {
    if (nu_sq_samples.empty())
        throw DomainError("no samples");
    const double n = static_cast<double>(nu_sq_samples.size());
    double mean = 0.0;
    for (double x : nu_sq_samples)
        mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : nu_sq_samples)
        var += (x - mean) * (x - mean);
    var /= n;
    return var / (mean * mean);
}

LogCorrectionResult log_correction(const ModelParams& params, int site,
                                   const AveragingProtocol& protocol) {
    require_non_reciprocal(params);
    const Propagator prop(params);
    GridSampler sampler(prop, protocol, Sites{site});
    std::vector<double> nu_sq;
    // The stopping rule runs on the entropy series; nu_t^2 is recorded alongside.
    const TimeAverageResult run = average_series(protocol, [&](int k) {
        const Mat b = sampler.reduced(k);
        const double nu = block_nu(b.block<2, 2>(0, 0));
        if (static_cast<int>(nu_sq.size()) == k)
            nu_sq.push_back(nu * nu);
        return entropy_kernel(nu);
    });
    LogCorrectionResult out;
    out.value = log_correction(nu_sq);
    double mean = 0.0;
    for (double x : nu_sq)
        mean += x;
    out.mean_nu_sq = mean / static_cast<double>(nu_sq.size());
    out.log_mean_nu_sq = std::log(out.mean_nu_sq);
    out.n_samples = run.n_samples;
    return out;
}

}  // namespace bkc
