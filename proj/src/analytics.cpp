#include "bkc/analytics.hpp"

#include "bkc/errors.hpp"
#include "bkc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace bkc {

namespace {

constexpr double kPi = std::numbers::pi;

SqueezingFrame frame_or_throw(const ModelParams& params, double j0) {
    return squeezing_frame(params, j0);
}

double sin_sq(int n, int j, int size) {
    const double s = std::sin(kPi * n * j / (size + 1));
    return s * s;
}

// (e^{ix} - 1) / x with its x -> 0 limit.
cplx phase_ratio(double x) {
    if (std::abs(x) < 1e-12)
        return cplx(0.0, 1.0);
    return (std::polar(1.0, x) - 1.0) / x;
}

}  // namespace

double ContinuumParams::l_over_xi() const {
    return std::isinf(xi) ? 0.0 : length_L / xi;
}

ContinuumParams continuum_params(const ModelParams& params, double j0) {
    const SqueezingFrame fr = frame_or_throw(params, j0);
    ContinuumParams c;
    c.length_L = params.n_sites + 1.0;
    c.xi = fr.r > 0.0 ? 1.0 / fr.r : std::numeric_limits<double>::infinity();
    c.x0 = j0;
    c.varphi = kPi - 2.0 * fr.phi;
    return c;
}

ConservedCorrelators conserved_correlators(const ModelParams& params, double j0) {
    const SqueezingFrame fr = frame_or_throw(params, j0);
    const int size = params.n_sites;
    const double c2 = std::cosh(2.0 * fr.r0), s2 = std::sinh(2.0 * fr.r0);
    ConservedCorrelators out;
    out.normal.resize(size);
    out.anomalous.resize(size);
    for (int n = 1; n <= size; ++n) {
        if (fr.regime == PhaseRegime::NonReciprocal) {
            double v = 0.0, w = 0.0;
            for (int j = 1; j <= size; ++j) {
                const double x = 2.0 * fr.r * (j - j0);
                v += std::cosh(x) * sin_sq(n, j, size);
                w += std::sinh(x) * sin_sq(n, j, size);
            }
            v /= size + 1;
            w /= size + 1;
            out.normal(n - 1) = v * c2 - 0.5;
            out.anomalous(n - 1) = cplx(w * c2, -0.5 * s2);
        } else {
            cplx sum = 0.0;
            for (int j = 1; j <= size; ++j)
                sum += sin_sq(n, j, size) * std::polar(1.0, -2.0 * (fr.phi - 0.5 * kPi) * j);
            out.normal(n - 1) = 0.5 * (c2 - 1.0);
            out.anomalous(n - 1) = cplx(0.0, -0.5 * s2) * (2.0 / (size + 1)) * sum;
        }
    }
    return out;
}

AvgSiteCorrelators avg_site_correlators(const ModelParams& params, int j, double j0,
                                        CorrelatorForm form) {
    const int size = params.n_sites;
    if (j < 1 || j > size)
        throw DomainError("site index out of range");
    const SqueezingFrame fr = frame_or_throw(params, j0);
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;  // (-1)^j
    AvgSiteCorrelators out;
    if (form == CorrelatorForm::Discrete) {
        const ConservedCorrelators cc = conserved_correlators(params, j0);
        for (int n = 1; n <= size; ++n) {
            const double amp = 2.0 / (size + 1) * sin_sq(n, j, size);
            out.n_bar += amp * cc.normal(n - 1);
            // psi_{N+1-n}(j) = (-1)^{j+1} psi_n(j)
            out.m_bar += -sign * amp * cc.anomalous(n - 1);
        }
        return out;
    }
    const ContinuumParams c = continuum_params(params, j0);
    const double c2 = std::cosh(2.0 * fr.r0), s2 = std::sinh(2.0 * fr.r0);
    if (fr.regime == PhaseRegime::NonReciprocal) {
        const double lx = c.l_over_xi();
        const double a = 2.0 * (c.length_L - c.x0) / c.xi, b = 2.0 * c.x0 / c.xi;
        out.n_bar = lx > 0.0 ? c2 * (std::sinh(a) + std::sinh(b)) / (4.0 * lx) - 0.5 : 0.5 * (c2 - 1.0);
        const double pair = lx > 0.0 ? c2 * (std::cosh(a) - std::cosh(b)) / (2.0 * lx) : 0.0;
        out.m_bar = -sign * 0.5 * cplx(pair, -s2);
    } else {
        out.n_bar = 0.5 * (c2 - 1.0);
        out.m_bar = sign * 0.5 * s2 * phase_ratio(c.varphi * c.length_L);
    }
    return out;
}

double nu_bar_squared(const ModelParams& params) {
    const ContinuumParams c = continuum_params(params, default_gauge(params));
    const SqueezingFrame fr = frame_or_throw(params, default_gauge(params));
    if (fr.regime == PhaseRegime::NonReciprocal) {
        const double x = c.l_over_xi();
        const double ratio = x > 0.0 ? std::sinh(x) / x : 1.0;
        const double c2 = std::cosh(2.0 * fr.r0);
        return 1.0 + c2 * c2 * (ratio * ratio - 1.0);
    }
    const double s2 = std::sinh(2.0 * fr.r0);
    const double y = c.varphi * c.length_L;
    const double f = std::abs(y) < 1e-8 ? 1.0 : 2.0 * (1.0 - std::cos(y)) / (y * y);
    return 1.0 + s2 * s2 * (1.0 - f);
}

double nu_bar_squared_discrete(const ModelParams& params, int j, double j0) {
    const AvgSiteCorrelators a = avg_site_correlators(params, j, j0, CorrelatorForm::Discrete);
    const double p = 2.0 * a.n_bar + 1.0, q = 2.0 * std::abs(a.m_bar);
    return (p - q) * (p + q);
}

double critical_s1_constant(const ModelParams& params) {
    return std::log(params.delta / (std::sqrt(3.0) * params.w)) + 1.0 - std::log(2.0);
}

bool in_critical_window(const ModelParams& params) {
    const double n = params.n_sites;
    return params.delta > 0.0 &&
           std::abs(params.g * params.g - params.delta * params.delta) * n * n /
                   (params.w * params.w) <
               1.0;
}

double s1_prediction(const ModelParams& params) {
    const double n = params.n_sites;
    if (in_critical_window(params)) {
        const double x = (params.delta * params.delta - params.g * params.g) / (params.w * params.w);
        return std::log(n) + x * n * n / 15.0 + critical_s1_constant(params);
    }
    if (classify_phase(params) == PhaseRegime::NonReciprocal) {
        const double x = continuum_params(params, default_gauge(params)).l_over_xi();
        if (x < 300.0)
            return 0.5 * std::log(nu_bar_squared(params));
        // sinh(x)^2 overflows; the remaining terms are below double resolution here.
        const double c2 = std::cosh(2.0 * squeezing_frame(params, default_gauge(params)).r0);
        return std::log(c2) + x - std::log(2.0 * x);
    }
    // Only g == delta == 0 can reach here as critical: a decoupled hopping chain.
    if (classify_phase(params) == PhaseRegime::Critical)
        return 0.0;
    return entropy_kernel(std::sqrt(nu_bar_squared(params)));
}

GgeSpectrum gge_spectrum(const ModelParams& params, double j0) {
    const SqueezingFrame fr = frame_or_throw(params, j0);
    const int size = params.n_sites;
    GgeSpectrum out;
    out.nus.resize(size);
    out.entropy_per_mode.resize(size);
    const double c2 = std::cosh(2.0 * fr.r0), s2 = std::sinh(2.0 * fr.r0);
    const ConservedCorrelators cc = conserved_correlators(params, j0);
    for (int n = 1; n <= size; ++n) {
        double nu2;
        if (fr.regime == PhaseRegime::NonReciprocal) {
            // (2<b^dag b> + 1)^2 - 4|<b b>|^2 with v - w and v + w summed separately.
            double vm = 0.0, vp = 0.0;
            for (int j = 1; j <= size; ++j) {
                const double x = 2.0 * fr.r * (j - j0);
                vm += std::exp(-x) * sin_sq(n, j, size);
                vp += std::exp(x) * sin_sq(n, j, size);
            }
            vm /= size + 1;
            vp /= size + 1;
            nu2 = 4.0 * c2 * c2 * vm * vp - s2 * s2;
        } else {
            const double p = 2.0 * cc.normal(n - 1) + 1.0, q = 2.0 * std::abs(cc.anomalous(n - 1));
            nu2 = (p - q) * (p + q);
        }
        out.nus(n - 1) = std::sqrt(std::max(1.0, nu2));
        out.entropy_per_mode(n - 1) = entropy_kernel(out.nus(n - 1));
    }
    return out;
}

double gge_continuum_nu(const ModelParams& params, int n) {
    const ContinuumParams c = continuum_params(params, 0.0);
    const SqueezingFrame fr = frame_or_throw(params, 0.0);
    const double p = kPi * n / c.length_L;
    if (fr.regime == PhaseRegime::NonReciprocal) {
        const double c2 = std::cosh(2.0 * fr.r0);
        const double px = p * c.xi;
        const double lx = c.l_over_xi();
        const double a = px * px / (1.0 + px * px) * std::sinh(lx) / lx;
        return std::sqrt(c2 * c2 * (a * a - 1.0) + 1.0);
    }
    const double s2 = std::sinh(2.0 * fr.r0);
    const double phl = c.varphi * c.length_L;
    const double den = phl * (4.0 * p * p - c.varphi * c.varphi);
    const double frac = 32.0 * std::pow(p, 4) * (1.0 - std::cos(phl)) / (den * den);
    return std::sqrt(1.0 + s2 * s2 * (1.0 - frac));
}

double gge_entropy(const ModelParams& params, int l, double j0) {
    if (l < 0 || l > params.n_sites)
        throw DomainError("subsystem size out of range");
    if (l == 0)
        return 0.0;
    return static_cast<double>(l) / params.n_sites * gge_spectrum(params, j0).entropy_per_mode.sum();
}

CollapseResult scaling_collapse(const std::vector<CollapseRow>& dataset, double delta,
                                double nu_exp, CollapseMode mode) {
    if (!(nu_exp > 0.0))
        throw DomainError("scaling exponent must be positive");
    std::map<int, double> reference;
    for (const CollapseRow& row : dataset)
        if (std::abs(row.g - delta) <= 1e-12)
            reference[row.n_sites] = row.entropy;

    CollapseResult out;
    std::map<int, std::vector<CollapsePoint>> curves;
    for (const CollapseRow& row : dataset) {
        const auto it = reference.find(row.n_sites);
        if (it == reference.end())
            throw MissingReference("no g = delta row for N = " + std::to_string(row.n_sites));
        const double n = row.n_sites;
        CollapsePoint pt{row.g, row.n_sites, (row.g * row.g - delta * delta) * std::pow(n, 1.0 / nu_exp),
                         row.entropy - it->second};
        if (mode == CollapseMode::QuarterCut)
            pt.y /= n;
        out.points.push_back(pt);
        if (std::abs(row.g - delta) > 1e-12)
            curves[row.n_sites].push_back(pt);
    }
    for (auto& [n, pts] : curves)
        std::sort(pts.begin(), pts.end(),
                  [](const CollapsePoint& a, const CollapsePoint& b) { return a.x < b.x; });

    double sum = 0.0;
    long count = 0;
    for (const auto& [na, pa] : curves) {
        for (const CollapsePoint& pt : pa) {
            for (const auto& [nb, pb] : curves) {
                if (nb == na || pb.size() < 2 || pt.x < pb.front().x || pt.x > pb.back().x)
                    continue;
                auto hi = std::lower_bound(
                    pb.begin(), pb.end(), pt.x,
                    [](const CollapsePoint& p, double x) { return p.x < x; });
                if (hi == pb.begin())
                    ++hi;
                const auto lo = hi - 1;
                const double span = hi->x - lo->x;
                const double y = span > 0.0 ? lo->y + (hi->y - lo->y) * (pt.x - lo->x) / span : lo->y;
                sum += (pt.y - y) * (pt.y - y);
                ++count;
            }
        }
    }
    out.quality = count > 0 ? sum / count : 0.0;
    return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw DomainError("linear fit needs at least two paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * x[i]);
        sse += e * e;
    }
    fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return fit;
}

}  // namespace bkc
