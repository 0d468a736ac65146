#include "bkc/analytics.hpp"
#include "bkc/dynamics.hpp"
#include "bkc/errors.hpp"
#include "bkc/gaussian.hpp"

#include <doctest.h>

#include <cmath>

using namespace bkc;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("continuum parameters") {
    const ModelParams p(1.0, 0.1, 0.25, 63);
    const ContinuumParams c = continuum_params(p, 32.0);
    const SqueezingFrame f = squeezing_frame(p, 32.0);
    CHECK(c.length_L == 64.0);
    CHECK(c.x0 == 32.0);
    CHECK(c.l_over_xi() == doctest::Approx(64.0 * f.r).epsilon(1e-15));
    CHECK(c.varphi * c.length_L == doctest::Approx(64.0 * (std::numbers::pi - 2 * f.phi)).epsilon(1e-14));
    CHECK_THROWS_AS(continuum_params(ModelParams(1.0, 0.25, 0.25, 8), 4.5), CriticalFrameUndefined);
}

TEST_CASE("conserved correlators match a direct projection of the initial state") {
    for (double g : {0.0, 0.1, 0.3}) {
        const ModelParams p(1.0, g, 0.25, 8);
        const double j0 = 4.5;
        const SqueezingFrame frame = squeezing_frame(p, j0);
        const Mat f = frame.global();
        const CovarianceMatrix sigma_d = apply_symplectic(vacuum(8), f);
        const LadderCorrelators d = ladder_correlators(sigma_d.data());
        const Mat psi = tight_binding_spectrum(p).wavefunctions;
        const CMat nb = psi * d.normal * psi.transpose();
        const CMat mb = psi * d.anomalous * psi.transpose();
        const ConservedCorrelators cc = conserved_correlators(p, j0);
        for (int n = 0; n < 8; ++n) {
            CHECK(std::abs(nb(n, n) - cc.normal(n)) < 1e-10);
            CHECK(std::abs(mb(7 - n, n) - cc.anomalous(n)) < 1e-10);
        }
    }
}

TEST_CASE("conserved correlator special cases") {
    const ConservedCorrelators g0 = conserved_correlators(ModelParams(1.0, 0.0, 0.25, 12), 6.5);
    CHECK(g0.anomalous.imag().cwiseAbs().maxCoeff() < 1e-15);

    const ModelParams rec(1.0, 0.3, 0.25, 12);
    const SqueezingFrame f = squeezing_frame(rec, 6.5);
    const ConservedCorrelators cr = conserved_correlators(rec, 6.5);
    for (int n = 0; n < 12; ++n)
        CHECK(cr.normal(n) == doctest::Approx(0.5 * (std::cosh(2 * f.r0) - 1.0)).epsilon(1e-13));
    CHECK_THROWS_AS(conserved_correlators(ModelParams(1.0, 0.25, 0.25, 8), 4.5),
                    CriticalFrameUndefined);
}

TEST_CASE("continuum averaged correlators") {
    const ModelParams p(1.0, 0.0, 0.25, 64);
    const AvgSiteCorrelators c = avg_site_correlators(p, 10, 32.5, CorrelatorForm::Continuum);
    const double x = 65.0 * squeezing_frame(p, 32.5).r;
    CHECK(x == doctest::Approx(16.60).epsilon(1e-3));
    CHECK(c.n_bar == doctest::Approx(std::sinh(x) / (2 * x) - 0.5).epsilon(1e-12));
    CHECK(c.n_bar == doctest::Approx(2.42e5).epsilon(0.01));
    CHECK(std::abs(c.m_bar) == 0.0);

    const ModelParams q(1.0, 0.1, 0.25, 64);
    const SqueezingFrame fq = squeezing_frame(q, 32.5);
    const AvgSiteCorrelators m3 = avg_site_correlators(q, 3, 32.5, CorrelatorForm::Continuum);
    const AvgSiteCorrelators m4 = avg_site_correlators(q, 4, 32.5, CorrelatorForm::Continuum);
    CHECK(std::abs(m3.m_bar + m4.m_bar) < 1e-12 * std::abs(m3.m_bar));
    CHECK(std::abs(m3.m_bar) == doctest::Approx(0.5 * std::sinh(2 * fq.r0)).epsilon(1e-12));
}

TEST_CASE("discrete averaged density matches the numerical time average") {
    const ModelParams p(1.0, 0.0, 0.25, 48);
    const double j0 = default_gauge(p);
    const Propagator prop(p);
    AveragingProtocol proto = AveragingProtocol::for_params(p);
    proto.max_samples = 200000;
    proto.rel_threshold = 2e-3;
    GridSampler sampler(prop, proto, Sites{1});
    const VectorAverageResult avg = average_vector_series(proto, 1, 1, [&](int k) {
        const Mat s = sampler.reduced(k);
        Vec v(1);
        v(0) = 0.25 * (s(0, 0) + s(1, 1) - 2.0);
        return v;
    });
    const AvgSiteCorrelators c = avg_site_correlators(p, 1, j0);
    CHECK(rel_err(avg.mean(0), c.n_bar) <= 0.01);
}

TEST_CASE("discrete sums approach the continuum forms") {
    // Non-reciprocal quantities grow like e^{N r}; the continuum forms drop an O(1)
    // factor, so agreement is measured on the entropy scale ln(nu^2) / 2.
    for (double g : {0.0, 0.1, 0.2}) {
        const ModelParams p(1.0, g, 0.25, 96);
        const double j0 = default_gauge(p);
        const double cont = 0.5 * std::log(nu_bar_squared(p));
        for (int j : {1, 2, 24, 48})
            CHECK(rel_err(0.5 * std::log(nu_bar_squared_discrete(p, j, j0)), cont) <= 0.02);
    }
    const ModelParams rec(1.0, 0.3, 0.25, 96);
    for (int j : {1, 2, 24, 48}) {
        const double j0 = default_gauge(rec);
        CHECK(rel_err(nu_bar_squared_discrete(rec, j, j0), nu_bar_squared(rec)) <= 0.02);
        const AvgSiteCorrelators d = avg_site_correlators(rec, j, j0);
        const AvgSiteCorrelators c = avg_site_correlators(rec, j, j0, CorrelatorForm::Continuum);
        CHECK(rel_err(d.n_bar, c.n_bar) <= 1e-12);
    }
}

TEST_CASE("nu bar squared limits") {
    const ModelParams g0(1.0, 0.0, 0.25, 64);
    const double x = 65.0 * squeezing_frame(g0, 32.5).r;
    CHECK(nu_bar_squared(g0) == doctest::Approx(std::pow(std::sinh(x) / x, 2)).epsilon(1e-12));

    const ModelParams rec(1.0, 0.3, 0.25, 4000);
    const SqueezingFrame f = squeezing_frame(rec, 0.0);
    CHECK(nu_bar_squared(rec) == doctest::Approx(std::pow(std::cosh(2 * f.r0), 2)).epsilon(1e-3));
    CHECK(s1_prediction(rec) == doctest::Approx(entropy_kernel(std::cosh(2 * f.r0))).epsilon(1e-3));
    CHECK_THROWS_AS(nu_bar_squared(ModelParams(1.0, 0.25, 0.25, 8)), CriticalFrameUndefined);
}

TEST_CASE("near-critical scaling of nu") {
    const int n = 64;
    const double target = n * 0.25 / std::sqrt(3.0);
    for (double g : {0.2499, 0.2501}) {
        const ModelParams p(1.0, g, 0.25, n);
        CHECK(std::sqrt(nu_bar_squared(p)) == doctest::Approx(target).epsilon(0.05));
    }
}

TEST_CASE("single-site predictions") {
    CHECK(s1_prediction(ModelParams(1.0, 0.3, 0.25, 128)) == doctest::Approx(0.8434).epsilon(1e-3));
    CHECK(s1_prediction(ModelParams(1.0, 0.0, 0.0, 32)) == 0.0);
    for (int n : {32, 64, 128}) {
        const ModelParams p(1.0, 0.25, 0.25, n);
        CHECK(in_critical_window(p));
        CHECK(s1_prediction(p) == doctest::Approx(std::log(n) + critical_s1_constant(p)).epsilon(1e-14));
    }
    CHECK(critical_s1_constant(ModelParams(1.0, 0.25, 0.25, 8)) ==
          doctest::Approx(std::log(0.25 / std::sqrt(3.0)) + 1.0 - std::log(2.0)).epsilon(1e-15));

    // Large-N slope in the non-reciprocal phase approaches r.
    const double r = squeezing_frame(ModelParams(1.0, 0.0, 0.25, 8), 0.0).r;
    const double slope = s1_prediction(ModelParams(1.0, 0.0, 0.25, 4000)) -
                         s1_prediction(ModelParams(1.0, 0.0, 0.25, 3999));
    CHECK(slope == doctest::Approx(r).epsilon(1e-3));
}

TEST_CASE("critical expansion is continuous across the transition") {
    const int n = 64;
    const double eps = 1e-6;
    const double below = s1_prediction(ModelParams(1.0, 0.25 - eps, 0.25, n));
    const double at = s1_prediction(ModelParams(1.0, 0.25, 0.25, n));
    const double above = s1_prediction(ModelParams(1.0, 0.25 + eps, 0.25, n));
    // Both sides use the same expansion, linear in delta^2 - g^2.
    const double shift = (0.0625 - (0.25 - eps) * (0.25 - eps)) * n * n / 15.0;
    CHECK(below - at == doctest::Approx(shift).epsilon(1e-6));
    CHECK(at - above == doctest::Approx(shift).epsilon(1e-2));
    // Inside the window the expansion tracks the full closed form, including the
    // large-nu offset 1 - ln 2 of the entropy kernel.
    for (double g : {0.2498, 0.2502}) {
        const ModelParams p(1.0, g, 0.25, n);
        REQUIRE(in_critical_window(p));
        CHECK(s1_prediction(p) ==
              doctest::Approx(entropy_kernel(std::sqrt(nu_bar_squared(p)))).epsilon(0.02));
    }
}

TEST_CASE("gge spectrum") {
    const ModelParams p(1.0, 0.0, 0.25, 16);
    const GgeSpectrum s = gge_spectrum(p);
    REQUIRE(s.nus.size() == 16);
    CHECK(s.nus.minCoeff() >= 1.0 - 1e-9);
    for (int n = 6; n <= 11; ++n)
        CHECK(s.nus(n - 1) == doctest::Approx(gge_continuum_nu(p, n)).epsilon(0.05));

    const double total = s.entropy_per_mode.sum();
    CHECK(gge_entropy(p, 16) == doctest::Approx(total).epsilon(1e-14));
    CHECK(gge_entropy(p, 4) == doctest::Approx(total / 4).epsilon(1e-14));
    CHECK(gge_entropy(p, 0) == 0.0);
    CHECK_THROWS_AS(gge_entropy(p, 17), DomainError);
}

TEST_CASE("gge deep non-reciprocal plateau") {
    // Corrections are additive O(ln), so the relative plateau sharpens with L / xi.
    const ModelParams p(1.0, 0.0, 0.6, 128);
    const double lxi = 129.0 * squeezing_frame(p, 0.0).r;
    const GgeSpectrum s = gge_spectrum(p);
    for (int n = 15; n <= 45; ++n)
        CHECK(s.entropy_per_mode(n - 1) == doctest::Approx(lxi).epsilon(0.1));
}

TEST_CASE("gge reciprocal limit") {
    const ModelParams p(1.0, 0.3, 0.25, 256);
    const SqueezingFrame f = squeezing_frame(p, 0.0);
    for (int n : {40, 90, 170, 220})
        CHECK(gge_continuum_nu(p, n) == doctest::Approx(std::cosh(2 * f.r0)).epsilon(0.02));
}

TEST_CASE("gge matches the minimal bipartition") {
    const ModelParams p(1.0, 0.0, 0.25, 128);
    CHECK(gge_entropy(p, 2) == doctest::Approx(2 * s1_prediction(p)).epsilon(0.1));
}

TEST_CASE("scaling collapse") {
    std::vector<CollapseRow> rows;
    for (int n : {16, 32})
        for (double g : {0.2, 0.25, 0.3})
            rows.push_back({g, n, std::log(n) - (g * g - 0.0625) * n * n / 15.0});
    const CollapseResult half = scaling_collapse(rows, 0.25, 0.5, CollapseMode::SingleSite);
    const CollapseResult one = scaling_collapse(rows, 0.25, 1.0, CollapseMode::SingleSite);
    CHECK(half.points.size() == 6);
    CHECK(half.quality < 1e-20);
    CHECK(one.quality > 0.0);
    for (const CollapsePoint& pt : half.points)
        CHECK(pt.y == doctest::Approx(-pt.x / 15.0).epsilon(1e-12));

    std::vector<CollapseRow> single;
    for (double g : {0.0, 0.2, 0.25, 0.3})
        single.push_back({g, 64, 1.0 + g});
    CHECK(scaling_collapse(single, 0.25, 0.5, CollapseMode::QuarterCut).quality == 0.0);

    std::vector<CollapseRow> missing = {{0.2, 16, 1.0}, {0.25, 16, 2.0}, {0.2, 32, 1.5}};
    CHECK_THROWS_AS(scaling_collapse(missing, 0.25, 0.5, CollapseMode::SingleSite), MissingReference);
    CHECK_THROWS_AS(scaling_collapse(single, 0.25, 0.0, CollapseMode::SingleSite), DomainError);

    const CollapseResult q = scaling_collapse(single, 0.25, 0.5, CollapseMode::QuarterCut);
    for (const CollapsePoint& pt : q.points)
        CHECK(pt.y == doctest::Approx((pt.g - 0.25) / 64.0).epsilon(1e-12));
}

TEST_CASE("linear fit") {
    const LinearFit f = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK_THROWS_AS(linear_fit({1}, {2}), DomainError);
}
