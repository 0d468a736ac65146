#include "bkc/gaussian.hpp"

#include "bkc/errors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace bkc {

namespace {
constexpr double kNuTolerance = 1e-8;
// Absolute accuracy of the smallest nu is about this times the largest one.
constexpr double kEigenResolution = 1e-9;
}

Sites left_cut(int l) {
    Sites s(l);
    for (int i = 0; i < l; ++i)
        s[i] = i + 1;
    return s;
}

CovarianceMatrix::CovarianceMatrix(Mat data) : data_(std::move(data)) {
    if (data_.rows() != data_.cols() || data_.rows() % 2 != 0 || data_.rows() == 0)
        throw DomainError("covariance must be a nonempty 2N x 2N matrix");
    const double scale = std::max(1.0, data_.cwiseAbs().maxCoeff());
    if ((data_ - data_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw DomainError("covariance is not symmetric");
}

void CovarianceMatrix::check_physical() const {
    const Vec nu = symplectic_eigenvalues(data_);
    if (nu.size() > 0 && nu(0) < 1.0 - kNuTolerance)
        throw DomainError("covariance violates the uncertainty principle");
}

CovarianceMatrix vacuum(int n_modes) {
    if (n_modes < 1)
        throw DomainError("vacuum needs at least one mode");
    return CovarianceMatrix(Mat::Identity(2 * n_modes, 2 * n_modes));
}

Mat restrict_to(const Mat& sigma, const Sites& sites) {
    const int n = static_cast<int>(sigma.rows() / 2);
    const int l = static_cast<int>(sites.size());
    if (l == 0)
        throw DomainError("subsystem must be nonempty");
    Mat out(2 * l, 2 * l);
    for (int a = 0; a < l; ++a) {
        if (sites[a] < 1 || sites[a] > n)
            throw DomainError("site index out of range");
        for (int b = 0; b < l; ++b)
            out.block<2, 2>(2 * a, 2 * b) = sigma.block<2, 2>(2 * (sites[a] - 1), 2 * (sites[b] - 1));
    }
    return out;
}

Vec symplectic_eigenvalues(const Mat& sigma_a) {
    const int l = static_cast<int>(sigma_a.rows() / 2);
    if (l == 1) {
        Vec out(1);
        out(0) = block_nu(sigma_a.block<2, 2>(0, 0));
        return out;
    }
    // A local squeeze per mode equalizes the q and p variances. It leaves the
    // spectrum untouched and tames the dynamic range seen by the eigensolver.
    Vec scale(2 * l);
    for (int j = 0; j < l; ++j) {
        const double qq = sigma_a(2 * j, 2 * j), pp = sigma_a(2 * j + 1, 2 * j + 1);
        const double lam = (qq > 0.0 && pp > 0.0) ? std::pow(pp / qq, 0.25) : 1.0;
        scale(2 * j) = lam;
        scale(2 * j + 1) = 1.0 / lam;
    }
    const Mat conditioned = scale.asDiagonal() * sigma_a * scale.asDiagonal();
    Eigen::EigenSolver<Mat> es(symplectic_form(l) * conditioned, false);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("eigensolver did not converge");
    std::vector<double> im(2 * l);
    for (int i = 0; i < 2 * l; ++i)
        im[i] = std::abs(es.eigenvalues()(i).imag());
    std::sort(im.begin(), im.end());
    Vec out(l);
    for (int k = 0; k < l; ++k)
        out(k) = 0.5 * (im[2 * k] + im[2 * k + 1]);
    // With nu_max near 1e12 the pairs closest to 1 are not resolved in double
    // precision and can come out anywhere in [0, 1]; those are set to 1.
    const double floor = 1.0 - std::max(kNuTolerance, kEigenResolution * out(l - 1));
    for (int k = 0; k < l; ++k)
        if (out(k) < 1.0 && out(k) >= floor)
            out(k) = 1.0;
    return out;
}

Vec symplectic_eigenvalues(const Mat& sigma, const Sites& sites) {
    return symplectic_eigenvalues(restrict_to(sigma, sites));
}

double entropy_kernel(double x) {
    if (std::isnan(x) || x < 1.0 - kNuTolerance)
        throw DomainError("entropy kernel needs x >= 1, got " + std::to_string(x));
    if (x <= 1.0)
        return 0.0;
    if (x > 1e100)
        return std::log(0.5 * x) + 1.0;
    // Equal to ((x+1)/2) ln((x+1)/2) - ((x-1)/2) ln((x-1)/2) without the cancellation at large x.
    const double b = 0.5 * (x - 1.0);
    return std::log(0.5 * (x + 1.0)) + b * std::log1p(1.0 / b);
}

double reduced_entropy(const Mat& sigma_a) {
    const Vec nu = symplectic_eigenvalues(sigma_a);
    double s = 0.0;
    for (int i = 0; i < nu.size(); ++i)
        s += entropy_kernel(nu(i));
    return s;
}

double subsystem_entropy(const Mat& sigma, const Sites& sites) {
    return reduced_entropy(restrict_to(sigma, sites));
}

SiteCorrelators block_correlators(const Eigen::Matrix2d& block) {
    const double qq = block(0, 0), pp = block(1, 1);
    const double qp = 0.5 * (block(0, 1) + block(1, 0));
    return {0.25 * (qq + pp - 2.0), cplx(0.25 * (qq - pp), 0.5 * qp)};
}

SiteCorrelators site_correlators(const Mat& sigma, int site) {
    const int n = static_cast<int>(sigma.rows() / 2);
    if (site < 1 || site > n)
        throw DomainError("site index out of range");
    return block_correlators(sigma.block<2, 2>(2 * (site - 1), 2 * (site - 1)));
}

double single_site_nu(double n, cplx m) {
    const double a = 2.0 * n + 1.0;
    const double b = 2.0 * std::abs(m);
    if (a - b < -kNuTolerance * std::max(1.0, a))
        throw DomainError("single-site correlators violate (2n+1)^2 >= 4|m|^2");
    return std::sqrt(std::max(0.0, (a - b) * (a + b)));
}

double block_nu(const Eigen::Matrix2d& block) {
    const double det = block(0, 0) * block(1, 1) - block(0, 1) * block(1, 0);
    return std::sqrt(std::max(0.0, det));
}

double thermal_entropy(double n_bar) {
    if (n_bar < 0.0)
        throw DomainError("thermal occupation must be non-negative");
    if (n_bar == 0.0)
        return 0.0;
    return std::log1p(n_bar) + n_bar * std::log1p(1.0 / n_bar);
}

Eigen::Matrix2d LocalDecomposition::reconstruct() const {
    Eigen::Matrix2d rot;
    rot << std::cos(rotation_angle), -std::sin(rotation_angle), std::sin(rotation_angle),
        std::cos(rotation_angle);
    const Eigen::Matrix2d d =
        Eigen::Vector2d(std::exp(2.0 * beta + 2.0 * z), std::exp(2.0 * beta - 2.0 * z)).asDiagonal();
    return rot * d * rot.transpose();
}

LocalDecomposition local_decompose(const Eigen::Matrix2d& block) {
    const Eigen::Matrix2d sym = 0.5 * (block + block.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sym);
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(1);
    if (!(lmin > 0.0))
        throw DomainError("local block is not positive definite");
    LocalDecomposition out;
    out.beta = 0.25 * std::log(lmin * lmax);
    out.z = 0.25 * std::log(lmax / lmin);
    const Eigen::Vector2d v = es.eigenvectors().col(1);
    out.rotation_angle = std::atan2(v(1), v(0));
    return out;
}

LadderCorrelators ladder_correlators(const Mat& sigma) {
    const int n = static_cast<int>(sigma.rows() / 2);
    Mat qq(n, n), pp(n, n), qp(n, n), pq(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            qq(j, k) = sigma(2 * j, 2 * k);
            pp(j, k) = sigma(2 * j + 1, 2 * k + 1);
            qp(j, k) = sigma(2 * j, 2 * k + 1);
            pq(j, k) = sigma(2 * j + 1, 2 * k);
        }
    }
    const cplx i(0.0, 1.0);
    LadderCorrelators out;
    out.normal = 0.25 * ((qq + pp).cast<cplx>() + i * (qp - pq).cast<cplx>());
    out.normal.diagonal().array() -= 0.5;
    out.anomalous = 0.25 * ((qq - pp).cast<cplx>() + i * (qp + pq).cast<cplx>());
    return out;
}

Mat covariance_from_ladder(const CMat& normal, const CMat& anomalous) {
    const int n = static_cast<int>(normal.rows());
    const Mat qq = 2.0 * (normal + anomalous).real() + Mat::Identity(n, n);
    const Mat pp = 2.0 * (normal - anomalous).real() + Mat::Identity(n, n);
    const Mat qp = 2.0 * (anomalous.imag() + normal.imag());
    Mat sigma(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            sigma(2 * j, 2 * k) = qq(j, k);
            sigma(2 * j + 1, 2 * k + 1) = pp(j, k);
            sigma(2 * j, 2 * k + 1) = qp(j, k);
            sigma(2 * j + 1, 2 * k) = qp(k, j);
        }
    }
    return sigma;
}

bool is_symplectic(const Mat& s, double tol) {
    if (s.rows() != s.cols() || s.rows() % 2 != 0)
        return false;
    const Mat om = symplectic_form(static_cast<int>(s.rows() / 2));
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff() * s.cwiseAbs().maxCoeff());
    return (s * om * s.transpose() - om).cwiseAbs().maxCoeff() <= tol * scale;
}

CovarianceMatrix apply_symplectic(const CovarianceMatrix& sigma, const Mat& s) {
    if (s.rows() != sigma.data().rows() || !is_symplectic(s))
        throw NotSymplectic("matrix does not preserve the symplectic form");
    Mat out = s * sigma.data() * s.transpose();
    return CovarianceMatrix(0.5 * (out + out.transpose()));
}

}  // namespace bkc
