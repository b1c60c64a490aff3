#include "efi/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace efi {

namespace {

constexpr double kCfEps = 1e-16;
constexpr double kFpMin = std::numeric_limits<double>::min() / kCfEps;
constexpr int kCfMaxIter = 500;

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kCfMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kCfEps) break;
    }
    return h;
}

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < kCfMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kCfEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kCfMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kCfEps) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Generic safeguarded Newton solver for a monotone CDF.  The bracket
// [lo, hi] must contain the root of cdf(x) = p; it shrinks every step, and
// a bisection fallback fires whenever Newton leaves it or stalls.
template <typename Cdf, typename Pdf>
double cdf_invert(double p, double x, double lo, double hi,
                  const Cdf& cdf, const Pdf& pdf) {
    if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double err = cdf(x) - p;
        if (err > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double dens = pdf(x);
        double next = (dens > 0.0) ? x - err / dens
                                   : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-14 * (std::abs(x) + 1e-300)) return next;
        x = next;
    }
    return x;
}

}  // namespace

double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double norm_ppf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("norm_ppf: p outside [0, 1]");
    }
    // Acklam's rational approximation (~1e-9 absolute), then one Halley step
    // against erfc pushes the error to the last couple of bits.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = norm_cdf(x) - p;
    const double u = e / norm_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);  // Halley
    return x;
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::domain_error("incomplete_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double incomplete_gamma(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("incomplete_gamma: a must be positive");
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double t_pdf(double x, double df) {
    const double ln = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                      0.5 * std::log(df * std::numbers::pi) -
                      0.5 * (df + 1.0) * std::log1p(x * x / df);
    return std::exp(ln);
}

double t_cdf(double x, double df) {
    if (df <= 0.0) throw std::domain_error("t_cdf: df must be positive");
    if (x == 0.0) return 0.5;
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + x * x));
    return x > 0.0 ? 1.0 - tail : tail;
}

double t_ppf(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("t_ppf: p outside [0, 1]");
    }
    if (p == 0.5) return 0.0;
    // The normal quantile underestimates |x| for small df; widen the bracket
    // geometrically until it straddles p.
    double x = norm_ppf(p);
    double lo = x, hi = x;
    double span = std::max(1.0, std::abs(x));
    while (t_cdf(lo, df) > p) { lo -= span; span *= 2.0; }
    span = std::max(1.0, std::abs(x));
    while (t_cdf(hi, df) < p) { hi += span; span *= 2.0; }
    return cdf_invert(p, x, lo, hi,
                      [df](double v) { return t_cdf(v, df); },
                      [df](double v) { return t_pdf(v, df); });
}

double chi2_pdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    const double h = 0.5 * df;
    const double ln = (h - 1.0) * std::log(x) - 0.5 * x - std::lgamma(h) -
                      h * std::numbers::ln2;
    return std::exp(ln);
}

double chi2_cdf(double x, double df) {
    if (df <= 0.0) throw std::domain_error("chi2_cdf: df must be positive");
    if (x <= 0.0) return 0.0;
    return incomplete_gamma(0.5 * df, 0.5 * x);
}

double chi2_ppf(double p, double df) {
    if (!(p >= 0.0 && p < 1.0)) {
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("chi2_ppf: p outside [0, 1]");
    }
    if (p == 0.0) return 0.0;
    // Wilson-Hilferty start.
    const double z = norm_ppf(p);
    const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    double x = df * t * t * t;
    if (!(x > 0.0)) x = df * std::exp(z / std::sqrt(df));  // tiny-p fallback
    double lo = 0.0;
    double hi = std::max(x, df) * 2.0 + 10.0;
    while (chi2_cdf(hi, df) < p) hi *= 2.0;
    return cdf_invert(p, x, lo, hi,
                      [df](double v) { return chi2_cdf(v, df); },
                      [df](double v) { return chi2_pdf(v, df); });
}

}  // namespace efi
