#include "bkc/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace bkc {

namespace {

constexpr double kOverflowLimit = 1e300;

Mat guarded_exp(const Mat& gen, double t) {
    Mat s = (gen * t).exp();
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > kOverflowLimit)
        throw OverflowGuard("matrix exponential overflowed at t=" + std::to_string(t));
    return s;
}

Sites all_sites(int n) {
    return left_cut(n);
}

}  // namespace

const char* to_string(PropagationMode mode) {
    switch (mode) {
    case PropagationMode::Auto: return "auto";
    case PropagationMode::FrameExact: return "frame-exact";
    case PropagationMode::LabExponential: return "lab-exponential";
    }
    return "unknown";
}

AveragingProtocol AveragingProtocol::for_params(const ModelParams& params) {
    AveragingProtocol p;
    const double j = params.amplitude_j();
    p.t_min = 10.0 * params.n_sites / j;
    p.dt = 10.0 / j;
    return p;
}

void AveragingProtocol::validate() const {
    if (!(t_min >= 0.0) || !(dt > 0.0) || initial_samples < 2 || batch < 1 ||
        !(rel_threshold > 0.0) || max_samples < initial_samples)
        throw DomainError("invalid averaging protocol");
}

Propagator::Propagator(const ModelParams& params, PropagationMode mode)
    : params_(params), mode_(mode) {
    const BdgMatrices m = bdg_matrices(params_);
    generator_ = m.omega * m.h;
    const bool critical = classify_phase(params_) == PhaseRegime::Critical;
    if (mode_ == PropagationMode::Auto)
        mode_ = critical ? PropagationMode::LabExponential : PropagationMode::FrameExact;
    if (mode_ == PropagationMode::LabExponential)
        return;

    frame_ = squeezing_frame(params_, default_gauge(params_));
    f_ = frame_->global();
    finv_ = frame_->global_inverse();
    const TightBindingSpectrum tb = tight_binding_spectrum(params_);
    psi_ = tb.wavefunctions;
    omega_ = tb.frequencies;
    const LadderCorrelators init = ladder_correlators(f_ * f_.transpose());
    const CMat psi_c = psi_.cast<cplx>();
    normal_b_ = psi_c * init.normal * psi_c.transpose();
    anomalous_b_ = psi_c * init.anomalous * psi_c.transpose();
}

CMat Propagator::site_rotation(double t, const Sites& sites) const {
    const int n = params_.n_sites;
    const int l = static_cast<int>(sites.size());
    CVec phase(n);
    for (int m = 0; m < n; ++m)
        phase(m) = std::polar(1.0, -omega_(m) * t);
    CMat v(l, n);
    for (int a = 0; a < l; ++a) {
        if (sites[a] < 1 || sites[a] > n)
            throw DomainError("site index out of range");
        for (int m = 0; m < n; ++m)
            v(a, m) = psi_(m, sites[a] - 1) * phase(m);
    }
    return v;
}

Mat Propagator::symplectic(double t) const {
    if (mode_ == PropagationMode::LabExponential)
        return guarded_exp(generator_, t);
    const int n = params_.n_sites;
    const CMat v = site_rotation(t, all_sites(n)) * psi_.cast<cplx>();
    Mat rot(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const cplx z = v(j, k);
            rot(2 * j, 2 * k) = z.real();
            rot(2 * j, 2 * k + 1) = -z.imag();
            rot(2 * j + 1, 2 * k) = z.imag();
            rot(2 * j + 1, 2 * k + 1) = z.real();
        }
    }
    return finv_ * rot * f_;
}

Mat Propagator::covariance(double t) const {
    if (mode_ == PropagationMode::LabExponential) {
        const Mat s = guarded_exp(generator_, t);
        return s * s.transpose();
    }
    return finv_ * frame_covariance(t) * finv_.transpose();
}

Mat Propagator::frame_covariance(double t) const {
    if (mode_ != PropagationMode::FrameExact)
        throw CriticalFrameUndefined("no tight-binding frame in lab-exponential mode");
    return local_covariance(t, all_sites(params_.n_sites));
}

Mat Propagator::local_covariance(double t, const Sites& sites) const {
    if (mode_ == PropagationMode::LabExponential)
        return restrict_to(covariance(t), sites);
    const CMat v = site_rotation(t, sites);
    const CMat nm = v.conjugate() * normal_b_ * v.transpose();
    const CMat mm = v * anomalous_b_ * v.transpose();
    return covariance_from_ladder(nm, mm);
}

Eigen::Matrix2d Propagator::to_lab(int site) const {
    if (mode_ == PropagationMode::LabExponential)
        return Eigen::Matrix2d::Identity();
    return frame_->site_factors.at(site - 1).inverse();
}

GridSampler::GridSampler(const Propagator& prop, const AveragingProtocol& protocol, Sites watch)
    : prop_(prop), protocol_(protocol), watch_(std::move(watch)) {
    if (watch_.empty())
        throw DomainError("subsystem must be nonempty");
    if (prop_.mode() == PropagationMode::LabExponential)
        step_ = guarded_exp(prop_.generator(), protocol_.dt);
}

void GridSampler::anchor(int k) {
    const Mat s = guarded_exp(prop_.generator(), protocol_.time(k));
    const int l = static_cast<int>(watch_.size());
    rows_.resize(2 * l, s.cols());
    for (int a = 0; a < l; ++a) {
        const int n = static_cast<int>(s.rows() / 2);
        if (watch_[a] < 1 || watch_[a] > n)
            throw DomainError("site index out of range");
        rows_.row(2 * a) = s.row(2 * (watch_[a] - 1));
        rows_.row(2 * a + 1) = s.row(2 * (watch_[a] - 1) + 1);
    }
    current_ = k;
}

Mat GridSampler::reduced(int k) {
    if (prop_.mode() != PropagationMode::LabExponential)
        return prop_.local_covariance(protocol_.time(k), watch_);
    if (k != current_) {
        if (k == current_ + 1 && k % kAnchorInterval != 0) {
            rows_ = rows_ * step_;
            current_ = k;
            if (!rows_.allFinite() || rows_.cwiseAbs().maxCoeff() > kOverflowLimit)
                throw OverflowGuard("lab propagation overflowed");
        } else {
            anchor(k);
        }
    }
    return rows_ * rows_.transpose();
}

namespace {

bool meets_threshold(double mean, double se, double thr) {
    return se == 0.0 || se < thr * std::abs(mean);
}

}  // namespace

TimeAverageResult average_series(const AveragingProtocol& protocol,
                                 const std::function<double(int)>& sample) {
    protocol.validate();
    TimeAverageResult res;
    int target = protocol.initial_samples;
    for (;;) {
        while (static_cast<int>(res.samples.size()) < target)
            res.samples.push_back(sample(static_cast<int>(res.samples.size())));
        const double n = static_cast<double>(res.samples.size());
        const double mean = std::accumulate(res.samples.begin(), res.samples.end(), 0.0) / n;
        double var = 0.0;
        for (double s : res.samples)
            var += (s - mean) * (s - mean);
        var /= n;
        res.mean = mean;
        res.std_error = std::sqrt(var / n);
        res.n_samples = static_cast<int>(res.samples.size());
        res.converged = meets_threshold(mean, res.std_error, protocol.rel_threshold);
        if (res.converged)
            return res;
        if (res.n_samples >= protocol.max_samples)
            throw NonConvergence("time average not converged after " +
                                     std::to_string(res.n_samples) + " samples",
                                 std::move(res));
        target = std::min(res.n_samples + protocol.batch, protocol.max_samples);
    }
}

VectorAverageResult average_vector_series(const AveragingProtocol& protocol, int dim,
                                          int n_tracked,
                                          const std::function<Vec(int)>& sample) {
    protocol.validate();
    Vec sum = Vec::Zero(dim);
    Vec sum_sq = Vec::Zero(dim);
    std::vector<Vec> history;
    int count = 0;
    int target = protocol.initial_samples;
    VectorAverageResult res;
    for (;;) {
        while (count < target) {
            Vec x = sample(count);
            sum += x;
            history.push_back(std::move(x));
            ++count;
        }
        res.mean = sum / count;
        // Two-pass variance for accuracy.
        sum_sq.setZero();
        for (const Vec& x : history)
            sum_sq += (x - res.mean).cwiseAbs2();
        res.std_error = (sum_sq / count / count).cwiseSqrt();
        res.n_samples = count;
        res.converged = true;
        for (int i = 0; i < n_tracked; ++i)
            res.converged = res.converged &&
                            meets_threshold(res.mean(i), res.std_error(i), protocol.rel_threshold);
        if (res.converged)
            return res;
        if (count >= protocol.max_samples) {
            TimeAverageResult partial;
            partial.mean = res.mean.head(n_tracked).sum();
            partial.n_samples = count;
            throw NonConvergence("profile average not converged after " +
                                     std::to_string(count) + " samples",
                                 partial);
        }
        target = std::min(count + protocol.batch, protocol.max_samples);
    }
}

CovarianceMatrix evolve(const ModelParams& params, double t) {
    if (t < 0.0)
        throw DomainError("time must be non-negative");
    const Mat s = Propagator(params).covariance(t);
    return CovarianceMatrix(0.5 * (s + s.transpose()));
}

CovarianceMatrix lab_exponential_evolve(const ModelParams& params, double t) {
    if (t < 0.0)
        throw DomainError("time must be non-negative");
    const Mat s = Propagator(params, PropagationMode::LabExponential).covariance(t);
    return CovarianceMatrix(0.5 * (s + s.transpose()));
}

TimeAverageResult time_averaged_entropy(const ModelParams& params, const Sites& sites,
                                        const AveragingProtocol& protocol) {
    const Propagator prop(params);
    GridSampler sampler(prop, protocol, sites);
    return average_series(protocol, [&](int k) { return reduced_entropy(sampler.reduced(k)); });
}

double fluctuation_ratio(const std::vector<double>& samples) {
    if (samples.empty())
        return 0.0;
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (mean == 0.0)
        return 0.0;
    double var = 0.0;
    for (double s : samples)
        var += (s - mean) * (s - mean);
    return std::sqrt(var / n) / mean;
}

double fluctuation_ratio(const ModelParams& params, const Sites& sites,
                         const AveragingProtocol& protocol) {
    return fluctuation_ratio(time_averaged_entropy(params, sites, protocol).samples);
}

std::vector<PagePoint> page_curve(const ModelParams& params, const AveragingProtocol& protocol) {
    std::vector<PagePoint> out;
    for (int l = 1; l < params.n_sites; ++l)
        out.push_back({l, time_averaged_entropy(params, left_cut(l), protocol)});
    return out;
}

Profiles profiles(const ModelParams& params, const AveragingProtocol& protocol) {
    const int n = params.n_sites;
    const Propagator prop(params);
    GridSampler sampler(prop, protocol, left_cut(n));
    // Layout: entropy, then the qq, pp, qp entries of each local block.
    const auto sample = [&](int k) {
        const Mat sig = sampler.reduced(k);
        Vec x(4 * n);
        for (int j = 0; j < n; ++j) {
            const Eigen::Matrix2d b = sig.block<2, 2>(2 * j, 2 * j);
            x(j) = entropy_kernel(block_nu(b));
            x(n + j) = b(0, 0);
            x(2 * n + j) = b(1, 1);
            x(3 * n + j) = 0.5 * (b(0, 1) + b(1, 0));
        }
        return x;
    };
    const VectorAverageResult avg = average_vector_series(protocol, 4 * n, n, sample);

    Profiles out;
    out.n_samples = avg.n_samples;
    out.entropy = avg.mean.head(n);
    out.entropy_stderr = avg.std_error.head(n);
    out.density.resize(n);
    out.thermal.resize(n);
    for (int j = 0; j < n; ++j) {
        Eigen::Matrix2d local;
        local << avg.mean(n + j), avg.mean(3 * n + j), avg.mean(3 * n + j), avg.mean(2 * n + j);
        const Eigen::Matrix2d t = prop.to_lab(j + 1);
        const Eigen::Matrix2d lab = t * local * t.transpose();
        out.lab_blocks.push_back(lab);
        out.density(j) = block_correlators(lab).n;
        out.thermal(j) = thermal_entropy(std::max(0.0, out.density(j)));
        out.decomposition.push_back(local_decompose(lab));
    }
    return out;
}

}  // namespace bkc
