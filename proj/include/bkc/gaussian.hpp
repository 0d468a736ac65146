#pragma once

#include "bkc/model.hpp"

#include <vector>

namespace bkc {

// 1-based site indices.
using Sites = std::vector<int>;

Sites left_cut(int l);

// Covariance sigma_ij = <{r_i, r_j}>; the vacuum is the identity.
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(Mat data);

    const Mat& data() const { return data_; }
    int n_modes() const { return static_cast<int>(data_.rows() / 2); }
    // Validates the uncertainty principle on the global state.
    void check_physical() const;

private:
    Mat data_;
};

CovarianceMatrix vacuum(int n_modes);

// Rows/columns of the listed sites, in the listed order.
Mat restrict_to(const Mat& sigma, const Sites& sites);

// Positive symplectic eigenvalues of sigma on the subsystem, ascending.
Vec symplectic_eigenvalues(const Mat& sigma, const Sites& sites);
// Same, for a covariance already restricted to the subsystem. Values below 1 by less
// than the solver resolution (1e-9 of the largest value, at least 1e-8) read as 1.
Vec symplectic_eigenvalues(const Mat& sigma_a);

double entropy_kernel(double x);

double subsystem_entropy(const Mat& sigma, const Sites& sites);
double reduced_entropy(const Mat& sigma_a);

struct SiteCorrelators {
    double n = 0.0;  // <d^dag d>
    cplx m;          // <d d>
};

SiteCorrelators site_correlators(const Mat& sigma, int site);
SiteCorrelators block_correlators(const Eigen::Matrix2d& block);

double single_site_nu(double n, cplx m);
double block_nu(const Eigen::Matrix2d& block);

double thermal_entropy(double n_bar);

struct LocalDecomposition {
    double rotation_angle = 0.0;
    double z = 0.0;
    double beta = 0.0;

    Eigen::Matrix2d reconstruct() const;
};

LocalDecomposition local_decompose(const Eigen::Matrix2d& block);

// Ladder-operator correlators of a zero-mean state, d = (q + i p) / sqrt(2).
struct LadderCorrelators {
    CMat normal;     // (j, k) -> <d_j^dag d_k>
    CMat anomalous;  // (j, k) -> <d_j d_k>
};

LadderCorrelators ladder_correlators(const Mat& sigma);
Mat covariance_from_ladder(const CMat& normal, const CMat& anomalous);

bool is_symplectic(const Mat& s, double tol = 1e-10);

CovarianceMatrix apply_symplectic(const CovarianceMatrix& sigma, const Mat& s);

}  // namespace bkc
