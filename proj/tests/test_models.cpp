#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "efi/baselines.hpp"
#include "efi/models.hpp"
#include "efi/rng.hpp"
#include "test_util.hpp"

using efi::CounterRng;
using efi::Dataset;
using efi::Matrix;
using efi::ModelFamily;
using efi::Vector;
using efi_test::rel_err;

namespace {

struct Fixture {
    std::string label;
    std::unique_ptr<ModelFamily> family;
    std::uint64_t seed;
};

std::vector<Fixture> fixtures() {
    std::vector<Fixture> out;
    out.push_back({"linear_known", efi::make_linear_known_sigma(3, 0.8), 101});
    out.push_back({"linear_unknown", efi::make_linear_unknown_sigma(3), 102});
    out.push_back({"gauss2", efi::make_gauss2(2.5), 103});
    out.push_back({"logistic", efi::make_logistic_binary(3), 104});
    out.push_back({"multiclass", efi::make_logistic_multiclass(3, 3), 105});
    out.push_back({"ssl", efi::make_ssl_logistic(3, 0.02, 0.6), 106});
    out.push_back({"normal_group", efi::make_normal_group(), 107});
    out.push_back({"behrens_fisher", efi::make_behrens_fisher(), 108});
    out.push_back({"bivariate", efi::make_bivariate_normal(), 109});
    out.push_back({"mediation", efi::make_mediation(), 110});
    return out;
}

// A generic plausible truth: positive (via exp) on log-scale coordinates,
// moderate values elsewhere.  The curve family gets curve-shaped values
// instead -- a mild positive decay rate and bumps inside the x range --
// because a sign-flipped decay turns exp(-b1 x) into an overflow machine.
Vector generic_truth(const ModelFamily& family, CounterRng& rng) {
    if (family.name() == "gauss2") {
        Vector theta(8);
        theta << 2.0, 0.08, 1.5, 8.0, 3.0, 0.8, 18.0, 4.0;
        for (int j = 0; j < 8; ++j) theta[j] *= std::exp(0.05 * rng.normal());
        return theta;
    }
    const auto logs = family.log_scale();
    Vector theta(family.theta_dim());
    for (int j = 0; j < family.theta_dim(); ++j) {
        theta[j] = logs[static_cast<std::size_t>(j)]
                       ? std::exp(0.3 * rng.normal())
                       : 0.5 + rng.normal();
    }
    return theta;
}

const double* x_ptr(const Dataset& data, int row) {
    return data.X.cols() > 0 ? data.X.row(row).data() : nullptr;
}

// Worst relative error between discrepancy_grad and central finite
// differences at a randomized state; one deterministic re-draw per attempt
// keeps hinge kinks from producing false alarms.
double grad_fd_worst(const ModelFamily& family, const Dataset& data,
                     const Vector& truth, std::uint64_t seed) {
    CounterRng rng(seed, 9);
    const auto logs = family.log_scale();
    double worst = 0.0;
    for (int row = 0; row < std::min(6, data.n()); ++row) {
        const int zd = family.z_dim(data, row);
        std::vector<double> z(static_cast<std::size_t>(zd));
        for (double& v : z) v = data.z_truth(row, 0) * 0.2 + 0.7 * rng.normal();
        Vector theta = truth;
        for (int j = 0; j < theta.size(); ++j) {
            theta[j] *= logs[static_cast<std::size_t>(j)]
                            ? std::exp(0.2 * rng.normal())
                            : 1.0;
            if (!logs[static_cast<std::size_t>(j)]) theta[j] += 0.3 * rng.normal();
        }

        Vector dtheta = Vector::Zero(theta.size());
        std::vector<double> dz(static_cast<std::size_t>(zd), 0.0);
        family.discrepancy_grad(data, row, z.data(), theta, dtheta, dz.data());

        const double h = 1e-6;
        for (int j = 0; j < theta.size(); ++j) {
            const double fd = efi_test::central_diff(theta[j], h, [&] {
                return family.discrepancy(data, row, z.data(), theta);
            });
            worst = std::max(worst, rel_err(dtheta[j], fd));
        }
        for (int j = 0; j < zd; ++j) {
            const double fd = efi_test::central_diff(z[static_cast<std::size_t>(j)],
                                                     h, [&] {
                return family.discrepancy(data, row, z.data(), theta);
            });
            worst = std::max(worst, rel_err(dz[static_cast<std::size_t>(j)], fd));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("family metadata is internally consistent") {
    for (const auto& fx : fixtures()) {
        INFO("family ", fx.label);
        const ModelFamily& fam = *fx.family;
        CHECK(fam.theta_dim() >= 1);
        CHECK(fam.param_names().size() == static_cast<std::size_t>(fam.theta_dim()));
        CHECK(fam.log_scale().size() == static_cast<std::size_t>(fam.theta_dim()));
        CHECK(fam.y_dim() >= 1);

        CounterRng rng(fx.seed, 0);
        const Vector truth = generic_truth(fam, rng);
        Vector derived(static_cast<Eigen::Index>(fam.derived_names().size()));
        if (!fam.derived_names().empty()) {
            fam.derived_values(truth, derived);
            CHECK(derived.allFinite());
        }
    }
}

TEST_CASE("simulation, forward model, and discrepancy agree at the truth") {
    for (const auto& fx : fixtures()) {
        INFO("family ", fx.label);
        const ModelFamily& fam = *fx.family;
        CounterRng rng(fx.seed, 0);
        const Vector truth = generic_truth(fam, rng);
        CounterRng sim_rng(fx.seed, 1);
        const Dataset data = fam.simulate(truth, 25, sim_rng);

        CHECK(data.n() >= 25);
        CHECK(data.Y.cols() == fam.y_dim());
        CHECK(data.z_truth.rows() == data.n());
        CHECK((data.theta_truth - truth).cwiseAbs().maxCoeff() == 0.0);

        if (fam.paired_groups()) continue;  // scored per group, tested below

        Vector ybuf(fam.y_dim());
        for (int i = 0; i < data.n(); ++i) {
            // Hidden semi-supervised labels are blanked in Y by design.
            if (!data.is_labeled(i)) continue;
            fam.forward_model(x_ptr(data, i), data.z_truth.row(i).data(), truth,
                              ybuf.data());
            for (int c = 0; c < fam.y_dim(); ++c) {
                CHECK(data.Y(i, c) == doctest::Approx(ybuf[c]).epsilon(1e-12));
            }
        }
        for (int i = 0; i < data.n(); ++i) {
            const double d =
                fam.discrepancy(data, i, data.z_truth.row(i).data(), truth);
            CHECK(d >= 0.0);
            CHECK(d <= 1e-16);
        }
    }
}

TEST_CASE("discrepancy gradients match finite differences for every family") {
    for (const auto& fx : fixtures()) {
        if (fx.family->paired_groups()) continue;
        INFO("family ", fx.label);
        const ModelFamily& fam = *fx.family;
        CounterRng rng(fx.seed, 0);
        const Vector truth = generic_truth(fam, rng);
        CounterRng sim_rng(fx.seed, 1);
        const Dataset data = fam.simulate(truth, 12, sim_rng);

        double best = 1e9;
        for (std::uint64_t attempt = 0; attempt < 3 && best > 1e-5; ++attempt) {
            best = std::min(best,
                            grad_fd_worst(fam, data, truth, fx.seed + 31 * attempt));
        }
        INFO("best worst-case rel err ", best);
        CHECK(best < 1e-5);
    }
}

TEST_CASE("discrepancy gradients accumulate instead of overwriting") {
    auto fam = efi::make_linear_known_sigma(2, 1.0);
    CounterRng rng(5, 0);
    Vector truth(2);
    truth << 1.0, -0.5;
    Dataset data = fam->simulate(truth, 4, rng);

    Vector dtheta = Vector::Zero(2);
    double dz = 0.0;
    double z0 = 0.37;
    fam->discrepancy_grad(data, 0, &z0, truth, dtheta, &dz);
    Vector once = dtheta;
    const double dz_once = dz;
    fam->discrepancy_grad(data, 0, &z0, truth, dtheta, &dz);
    CHECK((dtheta - 2.0 * once).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(dz == doctest::Approx(2.0 * dz_once).epsilon(1e-13));
}

TEST_CASE("linear simulation fixes the intercept column and gaussian errors") {
    auto fam = efi::make_linear_known_sigma(4, 1.0);
    CounterRng rng(21, 0);
    Vector truth(4);
    truth << 1.0, 2.0, 0.0, -1.0;
    Dataset data = fam->simulate(truth, 4000, rng);

    for (int i = 0; i < data.n(); ++i) CHECK(data.X(i, 0) == 1.0);
    const double zmean = data.z_truth.col(0).mean();
    const double zvar = data.z_truth.col(0).squaredNorm() / data.n() - zmean * zmean;
    CHECK(std::abs(zmean) < 0.06);
    CHECK(std::abs(zvar - 1.0) < 0.1);
}

TEST_CASE("logistic simulation produces labels consistent with the latent sign") {
    auto fam = efi::make_logistic_binary(3);
    CounterRng rng(22, 0);
    Vector truth(3);
    truth << 0.5, 1.0, -1.0;
    Dataset data = fam->simulate(truth, 300, rng);
    for (int i = 0; i < data.n(); ++i) {
        const double s = data.X.row(i).head(3).dot(truth);
        const double want = s > data.z_truth(i, 0) ? 1.0 : 0.0;
        CHECK(data.Y(i, 0) == want);
    }
}

TEST_CASE("multiclass labels stay in range and the truth has zero energy") {
    auto fam = efi::make_logistic_multiclass(3, 3);
    CHECK(fam->theta_dim() == 9);
    CounterRng rng(23, 0);
    Vector truth = generic_truth(*fam, rng);
    Dataset data = fam->simulate(truth, 200, rng);
    for (int i = 0; i < data.n(); ++i) {
        CHECK(data.Y(i, 0) >= 0.0);
        CHECK(data.Y(i, 0) <= 2.0);
        CHECK(data.Y(i, 0) == std::floor(data.Y(i, 0)));
    }
}

TEST_CASE("semi-supervised simulation blanks hidden labels but keeps the mask") {
    auto fam = efi::make_ssl_logistic(3, 0.02, 0.6);
    CounterRng rng(24, 0);
    Vector truth(3);
    truth << 1.0, -1.0, 0.5;
    Dataset data = fam->simulate(truth, 500, rng);
    REQUIRE(data.labeled.size() == 500);
    int labeled = 0;
    for (int i = 0; i < data.n(); ++i) {
        if (data.is_labeled(i)) {
            ++labeled;
            CHECK((data.Y(i, 0) == 0.0 || data.Y(i, 0) == 1.0));
        } else {
            CHECK(data.Y(i, 0) == 0.0);
            CHECK(fam->z_dim(data, i) == 2);
        }
    }
    CHECK(labeled > 200);
    CHECK(labeled < 400);
}

TEST_CASE("two-group data splits cleanly into per-group datasets") {
    auto fam = efi::make_behrens_fisher();
    CHECK(fam->paired_groups());
    CounterRng rng(25, 0);
    Vector truth(4);
    truth << 1.0, 0.5, 0.0, 1.0;  // mu1, sigma1, mu2, sigma2
    Dataset data = fam->simulate(truth, 20, rng);
    CHECK(data.n() == 40);

    auto groups = efi::split_groups(data);
    CHECK(groups.first.n() + groups.second.n() == data.n());
    CHECK(groups.first.n() == 20);
    CHECK(groups.first.theta_truth.size() == 2);
    CHECK(groups.first.theta_truth[0] == 1.0);
    CHECK(groups.first.theta_truth[1] == 0.5);
    CHECK(groups.second.theta_truth[0] == 0.0);
    CHECK(groups.second.theta_truth[1] == 1.0);

    // Group one rows are y = mu1 + sigma1 * z with the stored z.
    for (int i = 0; i < groups.first.n(); ++i) {
        CHECK(groups.first.Y(i, 0) ==
              doctest::Approx(1.0 + 0.5 * groups.first.z_truth(i, 0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fam->discrepancy(data, 0, nullptr, truth), std::logic_error);
}

TEST_CASE("bivariate derived functionals recover the implied correlation") {
    auto fam = efi::make_bivariate_normal();
    Vector theta(5);
    theta << 1.0, 0.0, 1.0, 0.5, std::sqrt(3.0) / 2.0;  // mu1 mu2 l1 l2 l3
    Vector derived(static_cast<Eigen::Index>(fam->derived_names().size()));
    fam->derived_values(theta, derived);
    REQUIRE(derived.size() == 3);
    CHECK(derived[0] == doctest::Approx(1.0).epsilon(1e-12));          // sigma1
    CHECK(derived[1] == doctest::Approx(1.0).epsilon(1e-12));          // sigma2
    CHECK(derived[2] == doctest::Approx(0.5).epsilon(1e-12));          // rho
}

TEST_CASE("mediation derived functional is the product of the two paths") {
    auto fam = efi::make_mediation();
    Vector theta(9);
    theta << 1.0, 0.3, 0.2, 0.4, std::sqrt(2.0), 0.7, 0.4, 0.6, 1.0;
    Vector derived(static_cast<Eigen::Index>(fam->derived_names().size()));
    fam->derived_values(theta, derived);
    REQUIRE(derived.size() >= 1);
    CHECK(derived[0] == doctest::Approx(0.3 * 0.7).epsilon(1e-12));
}

TEST_CASE("the analytic linear inverse is the least squares fit of y - sigma z") {
    CounterRng rng(26, 0);
    const int n = 30, p = 4;
    Matrix X(n, p);
    Vector y(n), z(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int j = 1; j < p; ++j) X(i, j) = rng.normal();
        z[i] = rng.normal();
        y[i] = rng.normal() * 2.0;
    }
    const double sigma = 0.7;
    Vector theta = efi::analytic_inverse_linear(y, X, z, sigma);
    Vector adjusted = y - sigma * z;
    Vector direct = efi::ols_fit(adjusted, X).beta;
    CHECK((theta - direct).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("dataset csv files round-trip exactly") {
    for (const auto& fx : fixtures()) {
        if (fx.label != "linear_unknown" && fx.label != "ssl" &&
            fx.label != "bivariate") {
            continue;
        }
        INFO("family ", fx.label);
        CounterRng rng(fx.seed, 0);
        const Vector truth = generic_truth(*fx.family, rng);
        CounterRng sim_rng(fx.seed, 1);
        Dataset data = fx.family->simulate(truth, 17, sim_rng);

        const std::string path = "roundtrip_" + fx.label + ".csv";
        efi::write_dataset_csv(data, path);
        Dataset back = efi::read_dataset_csv(path);
        std::remove(path.c_str());

        REQUIRE(back.n() == data.n());
        REQUIRE(back.Y.cols() == data.Y.cols());
        REQUIRE(back.X.cols() == data.X.cols());
        CHECK((back.Y - data.Y).cwiseAbs().maxCoeff() == 0.0);
        if (data.X.cols() > 0) {
            CHECK((back.X - data.X).cwiseAbs().maxCoeff() == 0.0);
        }
        CHECK(back.labeled == data.labeled);
    }
    CHECK_THROWS(efi::read_dataset_csv("no_such_file_anywhere.csv"));
}

TEST_CASE("family constructors validate their knobs") {
    CHECK_THROWS_AS(efi::make_linear_known_sigma(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(efi::make_logistic_binary(0), std::invalid_argument);
    CHECK_THROWS_AS(efi::make_logistic_multiclass(3, 1), std::invalid_argument);
    CHECK_THROWS_AS(efi::make_ssl_logistic(3, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("splitting needs a group indicator and enough rows") {
    Dataset bad;
    bad.Y.resize(3, 1);
    bad.Y << 1.0, 2.0, 3.0;
    bad.X.resize(3, 0);
    CHECK_THROWS_AS(efi::split_groups(bad), std::invalid_argument);
}
