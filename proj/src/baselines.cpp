#include "efi/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "efi/special.hpp"

namespace efi {

OlsFit ols_fit(const Vector& y, const Matrix& X) {
    OlsFit fit;
    fit.n = static_cast<int>(X.rows());
    fit.p = static_cast<int>(X.cols());
    if (y.size() != fit.n) throw std::invalid_argument("response length mismatch");
    if (fit.n < 1 || fit.p < 1) throw std::invalid_argument("empty design");

    const Eigen::MatrixXd Xd = X;
    const Eigen::MatrixXd xtx = Xd.transpose() * Xd;
    Eigen::LDLT<Eigen::MatrixXd> solver(xtx);
    // A rank-deficient Gram matrix still factors "successfully", so rank
    // deficiency is caught through the pivot spread instead.
    const Vector d = solver.vectorD();
    const double d_max = d.maxCoeff();
    if (solver.info() != Eigen::Success || !solver.isPositive() ||
        !(d_max > 0.0) || d.minCoeff() <= 1e-12 * d_max) {
        throw std::runtime_error("singular design matrix");
    }
    fit.beta = solver.solve(Xd.transpose() * y);
    fit.cov_unscaled =
        solver.solve(Eigen::MatrixXd::Identity(fit.p, fit.p));
    const Vector resid = y - Xd * fit.beta;
    fit.rss = resid.squaredNorm();
    fit.sigma2_mle = fit.rss / fit.n;
    return fit;
}

double EfdLinear::scale_a() const {
    double a = ols.rss;
    if (unbias_scale) {
        a *= static_cast<double>(ols.n - ols.p - 3) /
             static_cast<double>(ols.n - ols.p - 1);
    }
    return a;
}

std::pair<double, double> EfdLinear::beta_ci(int j, double level) const {
    if (j < 0 || j >= ols.p) throw std::out_of_range("coordinate out of range");
    const double q = 0.5 * (1.0 + level);
    const double root_cov = std::sqrt(ols.cov_unscaled(j, j));
    double half;
    if (sigma_known) {
        half = norm_ppf(q) * sigma * root_cov;
    } else {
        const double nu = df();
        half = t_ppf(q, nu) * std::sqrt(scale_a() / nu) * root_cov;
    }
    return {ols.beta[j] - half, ols.beta[j] + half};
}

std::pair<double, double> EfdLinear::sigma2_ci(double level) const {
    if (sigma_known) {
        throw std::logic_error("sigma2 interval undefined with known sigma");
    }
    const double a = scale_a();
    const double nu = df();
    const double q_lo = chi2_ppf(0.5 * (1.0 - level), nu);
    const double q_hi = chi2_ppf(0.5 * (1.0 + level), nu);
    return {a / q_hi, a / q_lo};
}

void EfdLinear::sample(CounterRng& rng, Vector& beta_out,
                       double& sigma2_out) const {
    sigma2_out = sigma_known ? sigma * sigma : scale_a() / rng.chi_square(df());
    const double scale = std::sqrt(sigma2_out);
    Vector e(ols.p);
    for (int j = 0; j < ols.p; ++j) e[j] = rng.normal();
    beta_out = ols.beta + scale * (chol_unscaled * e);
}

namespace {

EfdLinear make_efd(const Vector& y, const Matrix& X) {
    EfdLinear efd;
    efd.ols = ols_fit(y, X);
    if (efd.ols.n <= efd.ols.p) {
        throw std::invalid_argument("need more observations than parameters");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(efd.ols.cov_unscaled);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("covariance factorization failed");
    }
    efd.chol_unscaled = llt.matrixL();
    return efd;
}

}  // namespace

EfdLinear efd_linear(const Vector& y, const Matrix& X) {
    EfdLinear efd = make_efd(y, X);
    efd.sigma_known = false;
    return efd;
}

EfdLinear efd_linear(const Vector& y, const Matrix& X, double sigma) {
    EfdLinear efd = make_efd(y, X);
    efd.sigma_known = true;
    efd.sigma = sigma;
    return efd;
}

GfiResult gfi_accept_reject(const Vector& y, const Matrix& X, double sigma,
                            double eps, GfiNorm norm, long long n_proposals,
                            std::uint64_t seed) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (y.size() != n) throw std::invalid_argument("response length mismatch");

    const Eigen::MatrixXd Xd = X;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Xd);
    const Eigen::MatrixXd Q =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, p);

    CounterRng rng(seed, 0);
    std::vector<Vector> kept;
    Vector z(n), v(n), qtv(p);
    for (long long t = 0; t < n_proposals; ++t) {
        for (int i = 0; i < n; ++i) z[i] = rng.normal();
        v = y - sigma * z;
        qtv.noalias() = Q.transpose() * v;
        bool accept;
        if (norm == GfiNorm::kL2) {
            // |(I-H)v|^2 = |v|^2 - |Q'v|^2, no need for the full residual.
            const double res2 = v.squaredNorm() - qtv.squaredNorm();
            accept = res2 <= eps * eps;
        } else {
            accept = (v - Q * qtv).lpNorm<Eigen::Infinity>() <= eps;
        }
        if (accept) kept.push_back(qr.solve(v));
    }

    GfiResult out;
    out.n_proposals = n_proposals;
    out.n_accepted = static_cast<long long>(kept.size());
    out.acceptance_rate =
        n_proposals > 0
            ? static_cast<double>(out.n_accepted) / static_cast<double>(n_proposals)
            : 0.0;
    out.accepted.resize(static_cast<Eigen::Index>(kept.size()), p);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out.accepted.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();
    }
    return out;
}

BivariateFiducial bivariate_fiducial_closed_form(const Matrix& Y) {
    const int n = static_cast<int>(Y.rows());
    if (Y.cols() != 2) throw std::invalid_argument("need two response columns");
    if (n < 4) throw std::invalid_argument("need at least 4 observations");

    BivariateFiducial f;
    f.n = n;
    f.mean1 = Y.col(0).mean();
    f.mean2 = Y.col(1).mean();
    double s11 = 0.0, s22 = 0.0, s12 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d1 = Y(i, 0) - f.mean1;
        const double d2 = Y(i, 1) - f.mean2;
        s11 += d1 * d1;
        s22 += d2 * d2;
        s12 += d1 * d2;
    }
    f.s2_1 = s11 / (n - 1);
    f.s2_2 = s22 / (n - 1);
    if (!(f.s2_1 > 0.0) || !(f.s2_2 > 0.0)) {
        throw std::invalid_argument("degenerate sample variance");
    }
    f.r = s12 / std::sqrt(s11 * s22);
    return f;
}

std::pair<double, double> BivariateFiducial::mu_ci(int k, double level) const {
    if (k != 1 && k != 2) throw std::out_of_range("component must be 1 or 2");
    const double mean = k == 1 ? mean1 : mean2;
    const double sd = std::sqrt(k == 1 ? s2_1 : s2_2);
    const double half = t_ppf(0.5 * (1.0 + level), n - 2) * sd / std::sqrt(n);
    return {mean - half, mean + half};
}

std::pair<double, double> BivariateFiducial::sigma2_ci(int k,
                                                       double level) const {
    if (k != 1 && k != 2) throw std::out_of_range("component must be 1 or 2");
    const double ss = (n - 1) * (k == 1 ? s2_1 : s2_2);
    const double q_lo = chi2_ppf(0.5 * (1.0 - level), n - 2);
    const double q_hi = chi2_ppf(0.5 * (1.0 + level), n - 2);
    return {ss / q_hi, ss / q_lo};
}

double BivariateFiducial::rho_draw(CounterRng& rng) const {
    const double zn = rng.normal();
    const double xn2 = rng.chi_square(static_cast<double>(n - 2));
    const double xn1 = rng.chi_square(static_cast<double>(n - 1));
    const double t = r / std::sqrt(1.0 - r * r);
    const double x = (std::sqrt(xn2) * t - zn) / std::sqrt(xn1);
    return x / std::sqrt(1.0 + x * x);
}

Vector BivariateFiducial::rho_draws(int m, CounterRng& rng) const {
    Vector out(m);
    for (int i = 0; i < m; ++i) out[i] = rho_draw(rng);
    return out;
}

namespace {

struct GroupStats {
    int n = 0;
    double mean = 0.0;
    double var = 0.0;  // n-1 denominator
};

GroupStats group_stats(const Vector& g) {
    GroupStats s;
    s.n = static_cast<int>(g.size());
    if (s.n < 2) throw std::invalid_argument("each group needs >= 2 values");
    s.mean = g.mean();
    s.var = (g.array() - s.mean).square().sum() / (s.n - 1);
    if (!(s.var > 0.0)) throw std::invalid_argument("zero group variance");
    return s;
}

TwoSampleInterval t_interval(double center, double se, double df,
                             double level) {
    TwoSampleInterval ci;
    ci.center = center;
    ci.df = df;
    const double half = t_ppf(0.5 * (1.0 + level), df) * se;
    ci.lo = center - half;
    ci.hi = center + half;
    ci.reject = ci.lo > 0.0 || ci.hi < 0.0;
    return ci;
}

}  // namespace

TwoSampleTests two_sample_tests(const Vector& group1, const Vector& group2,
                                double level, int mc_draws,
                                std::uint64_t seed) {
    const GroupStats a = group_stats(group1);
    const GroupStats b = group_stats(group2);
    const double va = a.var / a.n;
    const double vb = b.var / b.n;
    const double se = std::sqrt(va + vb);
    const double center = a.mean - b.mean;

    TwoSampleTests out;

    const double welch_df = (va + vb) * (va + vb) /
                            (va * va / (a.n - 1) + vb * vb / (b.n - 1));
    out.welch = t_interval(center, se, welch_df, level);
    out.hsu_scheffe = t_interval(center, se, std::min(a.n, b.n) - 1, level);

    // Behrens distribution of mu1 - mu2 by Monte Carlo:
    // center - (s1/sqrt(n1)) T1 + (s2/sqrt(n2)) T2 with independent t draws.
    if (mc_draws < 2) throw std::invalid_argument("need >= 2 Monte Carlo draws");
    CounterRng rng(seed, 0);
    std::vector<double> draws(static_cast<std::size_t>(mc_draws));
    const double sa = std::sqrt(va);
    const double sb = std::sqrt(vb);
    for (double& d : draws) {
        d = center - sa * rng.student_t(a.n - 1) + sb * rng.student_t(b.n - 1);
    }
    std::sort(draws.begin(), draws.end());
    auto pick = [&](double p) {
        const double h = p * (mc_draws - 1);
        const auto i = static_cast<std::size_t>(h);
        if (i + 1 >= draws.size()) return draws.back();
        return draws[i] + (h - i) * (draws[i + 1] - draws[i]);
    };
    out.behrens_mc.center = center;
    out.behrens_mc.lo = pick(0.5 * (1.0 - level));
    out.behrens_mc.hi = pick(0.5 * (1.0 + level));
    out.behrens_mc.reject =
        out.behrens_mc.lo > 0.0 || out.behrens_mc.hi < 0.0;
    return out;
}

MediationTests mediation_tests(const Dataset& data, double level) {
    const int n = data.n();
    if (data.Y.cols() != 2 || data.X.cols() != 3) {
        throw std::invalid_argument("mediation data needs (y, m) and (t, x1, x2)");
    }

    // Outcome equation: y on (t, m, x1, x2); beta is the mediator slope.
    Matrix Xy(n, 4);
    Xy.col(0) = data.X.col(0);
    Xy.col(1) = data.Y.col(1);
    Xy.col(2) = data.X.col(1);
    Xy.col(3) = data.X.col(2);
    const OlsFit fy = ols_fit(data.Y.col(0), Xy);

    // Mediator equation: m on (t, x1, x2); gamma is the treatment slope.
    const OlsFit fm = ols_fit(data.Y.col(1), data.X);

    MediationTests out;
    out.beta_hat = fy.beta[1];
    out.gamma_hat = fm.beta[0];
    const double s2y = fy.rss / (fy.n - fy.p);
    const double s2m = fm.rss / (fm.n - fm.p);
    out.se_beta = std::sqrt(s2y * fy.cov_unscaled(1, 1));
    out.se_gamma = std::sqrt(s2m * fm.cov_unscaled(0, 0));

    const double t_beta = out.beta_hat / out.se_beta;
    const double t_gamma = out.gamma_hat / out.se_gamma;
    out.p_beta = 2.0 * t_cdf(-std::abs(t_beta), fy.n - fy.p);
    out.p_gamma = 2.0 * t_cdf(-std::abs(t_gamma), fm.n - fm.p);
    out.maxp_reject = std::max(out.p_beta, out.p_gamma) < level;

    const double denom = std::sqrt(out.beta_hat * out.beta_hat * out.se_gamma *
                                       out.se_gamma +
                                   out.gamma_hat * out.gamma_hat * out.se_beta *
                                       out.se_beta);
    out.sobel_z = denom > 0.0 ? out.beta_hat * out.gamma_hat / denom : 0.0;
    out.p_sobel = 2.0 * norm_cdf(-std::abs(out.sobel_z));
    out.sobel_reject = out.p_sobel < level;
    return out;
}

}  // namespace efi
