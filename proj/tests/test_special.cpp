#include <cmath>

#include "doctest.h"
#include "efi/special.hpp"
#include "test_util.hpp"

using efi_test::rel_close;

// Reference values computed with an independent high-precision library
// (64-bit results frozen here).

TEST_CASE("normal cdf matches reference values across the range") {
    CHECK(rel_close(efi::norm_cdf(-3.7), 0.00010779973347738823, 1e-13));
    CHECK(rel_close(efi::norm_cdf(-1.0), 0.15865525393145707, 1e-13));
    CHECK(rel_close(efi::norm_cdf(0.3), 0.6179114221889526, 1e-13));
    CHECK(rel_close(efi::norm_cdf(2.5), 0.9937903346742238, 1e-13));
    CHECK(efi::norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("normal quantile matches reference values including deep tails") {
    CHECK(rel_close(efi::norm_ppf(0.025), -1.9599639845400545, 1e-10));
    CHECK(rel_close(efi::norm_ppf(0.3), -0.5244005127080409, 1e-10));
    CHECK(rel_close(efi::norm_ppf(0.975), 1.959963984540054, 1e-10));
    CHECK(rel_close(efi::norm_ppf(1e-9), -5.9978070150076865, 1e-9));
}

TEST_CASE("normal pdf matches reference values") {
    CHECK(rel_close(efi::norm_pdf(0.0), 0.3989422804014327, 1e-13));
    CHECK(rel_close(efi::norm_pdf(1.3), 0.17136859204780736, 1e-13));
}

TEST_CASE("student-t cdf and quantile match reference values") {
    CHECK(rel_close(efi::t_cdf(-2.1, 3), 0.06328260127484227, 1e-12));
    CHECK(rel_close(efi::t_cdf(1.5, 11), 0.919120991472273, 1e-12));
    CHECK(rel_close(efi::t_cdf(0.7, 98), 0.7572071445280607, 1e-12));
    CHECK(rel_close(efi::t_cdf(2.0, 491), 0.9769747009757017, 1e-12));

    CHECK(rel_close(efi::t_ppf(0.975, 98), 1.984467454426692, 1e-10));
    CHECK(rel_close(efi::t_ppf(0.025, 3), -3.1824463052842638, 1e-10));
    CHECK(rel_close(efi::t_ppf(0.975, 491), 1.9648072234708787, 1e-10));
    CHECK(rel_close(efi::t_ppf(0.6, 11), 0.25955586047627044, 1e-10));

    CHECK(rel_close(efi::t_pdf(0.4, 7), 0.3517152153149108, 1e-12));
}

TEST_CASE("chi-square cdf and quantile match reference values") {
    CHECK(rel_close(efi::chi2_cdf(4.5, 4), 0.657452520173941, 1e-12));
    CHECK(rel_close(efi::chi2_cdf(18.0, 19), 0.47756172601373725, 1e-12));
    CHECK(rel_close(efi::chi2_cdf(98.0, 98), 0.5189993069071922, 1e-12));
    CHECK(rel_close(efi::chi2_cdf(430.0, 491), 0.022104980749099553, 1e-11));

    CHECK(rel_close(efi::chi2_ppf(0.025, 98), 72.50093949765828, 1e-10));
    CHECK(rel_close(efi::chi2_ppf(0.975, 98), 127.28207236425453, 1e-10));
    CHECK(rel_close(efi::chi2_ppf(0.025, 491), 431.49652775995366, 1e-10));
    CHECK(rel_close(efi::chi2_ppf(0.975, 491), 554.2909728162317, 1e-10));
    CHECK(rel_close(efi::chi2_ppf(0.5, 1), 0.454936423119572, 1e-10));

    CHECK(rel_close(efi::chi2_pdf(3.0, 5), 0.15418032980376928, 1e-12));
}

TEST_CASE("regularized incomplete beta matches reference values") {
    CHECK(rel_close(efi::incomplete_beta(0.5, 0.5, 0.3), 0.36901011956554536, 1e-12));
    CHECK(rel_close(efi::incomplete_beta(5.0, 3.0, 0.7), 0.6470695, 1e-7));
    CHECK(rel_close(efi::incomplete_beta(49.0, 0.5, 0.99), 0.32221736303061954, 1e-11));
    CHECK(rel_close(efi::incomplete_beta(245.5, 0.5, 0.999), 0.4835948486351648, 1e-11));
    CHECK(efi::incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(efi::incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("regularized incomplete gamma matches reference values") {
    CHECK(rel_close(efi::incomplete_gamma(0.5, 0.25), 0.5204998778130466, 1e-12));
    CHECK(rel_close(efi::incomplete_gamma(2.0, 2.0), 0.5939941502901616, 1e-12));
    CHECK(rel_close(efi::incomplete_gamma(49.0, 40.0), 0.0924688386001903, 1e-11));
    CHECK(rel_close(efi::incomplete_gamma(245.5, 250.0), 0.6204676538222427, 1e-11));
    CHECK(efi::incomplete_gamma(3.0, 0.0) == 0.0);
}

TEST_CASE("cdf and quantile invert each other") {
    for (double p : {0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99}) {
        CHECK(rel_close(efi::norm_cdf(efi::norm_ppf(p)), p, 1e-9));
        CHECK(rel_close(efi::t_cdf(efi::t_ppf(p, 5), 5), p, 1e-9));
        CHECK(rel_close(efi::t_cdf(efi::t_ppf(p, 200), 200), p, 1e-9));
        CHECK(rel_close(efi::chi2_cdf(efi::chi2_ppf(p, 7), 7), p, 1e-9));
        CHECK(rel_close(efi::chi2_cdf(efi::chi2_ppf(p, 98), 98), p, 1e-9));
    }
}

TEST_CASE("distribution symmetries hold") {
    for (double x : {0.1, 0.7, 1.9, 3.3}) {
        CHECK(rel_close(efi::norm_cdf(x) + efi::norm_cdf(-x), 1.0, 1e-13));
        CHECK(rel_close(efi::t_cdf(x, 9) + efi::t_cdf(-x, 9), 1.0, 1e-12));
    }
    // I_x(a,b) + I_{1-x}(b,a) = 1.
    CHECK(rel_close(efi::incomplete_beta(2.5, 4.0, 0.3) +
                        efi::incomplete_beta(4.0, 2.5, 0.7),
                    1.0, 1e-12));
}

TEST_CASE("cdfs are monotone") {
    double prev = -1.0;
    for (double x = -4.0; x <= 4.0; x += 0.25) {
        const double c = efi::norm_cdf(x);
        CHECK(c > prev);
        prev = c;
    }
    prev = -1.0;
    for (double x = 0.1; x <= 30.0; x += 0.7) {
        const double c = efi::chi2_cdf(x, 6);
        CHECK(c >= prev);
        prev = c;
    }
}
