#ifndef EFI_BASELINES_HPP
#define EFI_BASELINES_HPP

#include <cstdint>
#include <utility>

#include "efi/models.hpp"
#include "efi/rng.hpp"

namespace efi {

struct OlsFit {
    Vector beta;
    double rss = 0.0;
    double sigma2_mle = 0.0;        // rss / n
    Eigen::MatrixXd cov_unscaled;   // (X'X)^{-1}
    int n = 0;
    int p = 0;
};

OlsFit ols_fit(const Vector& y, const Matrix& X);

// Exact confidence distributions for the Gaussian linear model.  With known
// sigma, beta ~ N(beta_hat, sigma^2 (X'X)^{-1}).  With unknown sigma,
// sigma^2 ~ A / chi2_{n-p+1} with A = RSS, and beta marginally follows the
// multivariate t around beta_hat with scale (A/df) (X'X)^{-1} and df = n-p+1.
struct EfdLinear {
    bool sigma_known = false;
    double sigma = 0.0;         // fixed noise scale when known
    bool unbias_scale = false;  // optional (n-p-3)/(n-p-1) factor on A
    OlsFit ols;
    Eigen::MatrixXd chol_unscaled;  // lower Cholesky factor of (X'X)^{-1}

    int df() const { return ols.n - ols.p + 1; }
    double scale_a() const;

    // Equal-tailed closed-form intervals.
    std::pair<double, double> beta_ci(int j, double level) const;
    std::pair<double, double> sigma2_ci(double level) const;  // unknown sigma

    // One joint draw; sigma2_out echoes sigma^2 when sigma is known.
    void sample(CounterRng& rng, Vector& beta_out, double& sigma2_out) const;
};

EfdLinear efd_linear(const Vector& y, const Matrix& X);  // unknown sigma
EfdLinear efd_linear(const Vector& y, const Matrix& X, double sigma);

// Acceptance-rejection fiducial sampler for the linear model: propose
// Z ~ N(0, I), fit theta by least squares of (y - sigma Z), accept when the
// refit residual norm is within eps.  Degrades sharply with n, which is the
// point of keeping it around as a baseline.
enum class GfiNorm { kL2, kLinf };

struct GfiResult {
    Matrix accepted;  // one accepted theta per row
    long long n_proposals = 0;
    long long n_accepted = 0;
    double acceptance_rate = 0.0;
};

GfiResult gfi_accept_reject(const Vector& y, const Matrix& X, double sigma,
                            double eps, GfiNorm norm, long long n_proposals,
                            std::uint64_t seed);

// Classical fiducial distributions for a bivariate normal sample:
//   sqrt(n) (ybar_k - mu_k) / s_k ~ t(n-2)
//   (n-1) s_k^2 / sigma_k^2      ~ chi2(n-2)
// and the correlation via the stochastic representation
//   psi( (sqrt(Xn2) * r / sqrt(1-r^2) - Z) / sqrt(Xn1) ),
// psi(x) = x / sqrt(1+x^2), with independent Z ~ N(0,1), Xn2 ~ chi2(n-2),
// and Xn1 ~ chi2(n-1) shared by both terms of a draw.
struct BivariateFiducial {
    int n = 0;
    double mean1 = 0.0, mean2 = 0.0;
    double s2_1 = 0.0, s2_2 = 0.0;  // sample variances (n-1 denominator)
    double r = 0.0;

    std::pair<double, double> mu_ci(int k, double level) const;      // k in {1,2}
    std::pair<double, double> sigma2_ci(int k, double level) const;  // k in {1,2}
    double rho_draw(CounterRng& rng) const;
    Vector rho_draws(int m, CounterRng& rng) const;
};

BivariateFiducial bivariate_fiducial_closed_form(const Matrix& Y);

// Two-sample location inference for the difference mu1 - mu2.
struct TwoSampleInterval {
    double center = 0.0;
    double lo = 0.0, hi = 0.0;
    double df = 0.0;      // 0 for the Monte Carlo method
    bool reject = false;  // interval excludes 0
    double width() const { return hi - lo; }
};

struct TwoSampleTests {
    TwoSampleInterval welch;        // Satterthwaite degrees of freedom
    TwoSampleInterval hsu_scheffe;  // df = min(n1, n2) - 1
    TwoSampleInterval behrens_mc;   // Monte Carlo Behrens distribution
};

TwoSampleTests two_sample_tests(const Vector& group1, const Vector& group2,
                                double level, int mc_draws,
                                std::uint64_t seed);

// Classical mediation tests on the two-equation model (no intercepts):
//   y ~ (t, m, x1, x2) and m ~ (t, x1, x2), both fit by least squares.
// `level` is the significance level of the tests (e.g. 0.05).
struct MediationTests {
    double beta_hat = 0.0, gamma_hat = 0.0;
    double se_beta = 0.0, se_gamma = 0.0;
    double p_beta = 0.0, p_gamma = 0.0;  // two-sided t-test p-values
    double sobel_z = 0.0, p_sobel = 0.0;
    bool sobel_reject = false;
    bool maxp_reject = false;  // max(p_beta, p_gamma) < level
};

MediationTests mediation_tests(const Dataset& data, double level);

}  // namespace efi

#endif  // EFI_BASELINES_HPP
