#ifndef EFI_SPECIAL_HPP
#define EFI_SPECIAL_HPP

namespace efi {

// Distribution functions used by the closed-form baselines and the interval
// constructors.  All regularized, all double precision; the quantile routines
// are safeguarded Newton iterations that hold |cdf(result) - p| well below
// 1e-10 over the parameter ranges exercised by the tests.

double norm_pdf(double x);
double norm_cdf(double x);
double norm_ppf(double p);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
// continued fraction otherwise.
double incomplete_gamma(double a, double x);

double t_pdf(double x, double df);
double t_cdf(double x, double df);
double t_ppf(double p, double df);

double chi2_pdf(double x, double df);
double chi2_cdf(double x, double df);
double chi2_ppf(double p, double df);

}  // namespace efi

#endif  // EFI_SPECIAL_HPP
