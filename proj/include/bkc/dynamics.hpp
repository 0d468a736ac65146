#pragma once

#include "bkc/errors.hpp"
#include "bkc/gaussian.hpp"
#include "bkc/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace bkc {

enum class PropagationMode { Auto, FrameExact, LabExponential };

const char* to_string(PropagationMode mode);

// Long-time sampling grid t_k = t_min + k dt and its stopping rule.
struct AveragingProtocol {
    double t_min = 0.0;
    double dt = 1.0;
    int initial_samples = 1000;
    int batch = 500;
    double rel_threshold = 1e-3;
    int max_samples = 20000;

    // t_min = 10 N / J, dt = 10 / J.
    static AveragingProtocol for_params(const ModelParams& params);
    double time(int k) const { return t_min + k * dt; }
    void validate() const;
};

struct TimeAverageResult {
    double mean = 0.0;
    double std_error = 0.0;  // sample std / sqrt(n)
    int n_samples = 0;
    bool converged = false;
    std::vector<double> samples;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, TimeAverageResult partial)
        : Error(what), partial_(std::move(partial)) {}
    const TimeAverageResult& partial() const { return partial_; }

private:
    TimeAverageResult partial_;
};

// Vacuum quench propagator for one parameter set.
class Propagator {
public:
    explicit Propagator(const ModelParams& params, PropagationMode mode = PropagationMode::Auto);

    PropagationMode mode() const { return mode_; }
    const ModelParams& params() const { return params_; }
    // Frame used by FrameExact; empty in LabExponential mode.
    const std::optional<SqueezingFrame>& frame() const { return frame_; }

    // Lab-frame S(t) with sigma(t) = S sigma(0) S^T.
    Mat symplectic(double t) const;
    // Lab-frame covariance.
    Mat covariance(double t) const;
    // Full covariance in the tight-binding frame (FrameExact only).
    Mat frame_covariance(double t) const;
    // Reduced covariance on the sites, in the tight-binding frame for FrameExact and
    // in the lab frame otherwise. The two differ by per-site symplectics only.
    Mat local_covariance(double t, const Sites& sites) const;
    // Per-site 2x2 map from the local_covariance frame back to the lab.
    Eigen::Matrix2d to_lab(int site) const;

    // Generator Omega h.
    const Mat& generator() const { return generator_; }

private:
    CMat site_rotation(double t, const Sites& sites) const;

    ModelParams params_;
    PropagationMode mode_;
    std::optional<SqueezingFrame> frame_;
    Mat f_, finv_;
    Mat psi_;        // psi(n, j)
    Vec omega_;      // mode frequencies
    CMat normal_b_;  // <b_k^dag b_q> at t = 0
    CMat anomalous_b_;
    Mat generator_;
};

// Sequential evaluation on the protocol grid. In LabExponential mode the watched
// rows of S(t) are advanced by a fixed one-step propagator and re-anchored with a
// fresh exponential every few steps.
class GridSampler {
public:
    GridSampler(const Propagator& prop, const AveragingProtocol& protocol, Sites watch);

    // Covariance on the watched sites at t_k, in the propagator's local frame.
    Mat reduced(int k);
    const Sites& watch() const { return watch_; }

    static constexpr int kAnchorInterval = 64;

private:
    void anchor(int k);

    const Propagator& prop_;
    AveragingProtocol protocol_;
    Sites watch_;
    int current_ = -1;
    Mat rows_;  // rows of S(t_k) for the watched sites
    Mat step_;
};

// Runs the stopping rule over a scalar series sample(k). Throws NonConvergence at the cap.
TimeAverageResult average_series(const AveragingProtocol& protocol,
                                 const std::function<double(int)>& sample);

struct VectorAverageResult {
    Vec mean;
    Vec std_error;
    int n_samples = 0;
    bool converged = false;
};

// Vector version; only the first n_tracked components enter the stopping rule.
VectorAverageResult average_vector_series(const AveragingProtocol& protocol, int dim,
                                          int n_tracked,
                                          const std::function<Vec(int)>& sample);

CovarianceMatrix evolve(const ModelParams& params, double t);
CovarianceMatrix lab_exponential_evolve(const ModelParams& params, double t);

TimeAverageResult time_averaged_entropy(const ModelParams& params, const Sites& sites,
                                        const AveragingProtocol& protocol);

double fluctuation_ratio(const std::vector<double>& samples);
double fluctuation_ratio(const ModelParams& params, const Sites& sites,
                         const AveragingProtocol& protocol);

struct PagePoint {
    int l = 0;
    TimeAverageResult entropy;
};

std::vector<PagePoint> page_curve(const ModelParams& params, const AveragingProtocol& protocol);

struct Profiles {
    Vec density;         // lab-frame time-averaged <a_j^dag a_j>
    Vec entropy;         // time-averaged single-site entropy
    Vec entropy_stderr;
    Vec thermal;         // thermal entropy of the density
    std::vector<LocalDecomposition> decomposition;
    std::vector<Eigen::Matrix2d> lab_blocks;  // time-averaged lab covariance blocks
    int n_samples = 0;
};

Profiles profiles(const ModelParams& params, const AveragingProtocol& protocol);

}  // namespace bkc
