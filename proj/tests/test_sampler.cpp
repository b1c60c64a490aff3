#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "efi/energy.hpp"
#include "efi/models.hpp"
#include "efi/network.hpp"
#include "efi/prior.hpp"
#include "efi/rng.hpp"
#include "efi/sampler.hpp"
#include "test_util.hpp"

using efi::Activation;
using efi::CounterRng;
using efi::Dataset;
using efi::DenseNet;
using efi::EnergyConfig;
using efi::EnergyModel;
using efi::ErrorKind;
using efi::FiducialSamples;
using efi::Matrix;
using efi::MixturePrior;
using efi::RunSettings;
using efi::SamplerKind;
using efi::Schedule;
using efi::SchedulePiece;
using efi::TemperingPlan;
using efi::Vector;

TEST_CASE("step-size schedules evaluate the decay formulas") {
    // Typical large-run constants.
    Schedule s(50000.0, 10000.0, 13.0 / 14.0, 5000.0, 1e5, 4.0 / 7.0);
    CHECK(s.lr_at(10000) ==
          doctest::Approx(3.293921631452158).epsilon(1e-12));
    CHECK(s.step_at(10000) ==
          doctest::Approx(0.049903651134092425).epsilon(1e-12));

    // Unit constants with linear decay: 1 / (1 + 1) at the first iteration.
    Schedule unit(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
    CHECK(unit.lr_at(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(unit.step_at(1) == doctest::Approx(0.5).epsilon(1e-15));

    // Decreasing in k.
    CHECK(s.lr_at(2000) > s.lr_at(20000));
    CHECK(s.step_at(2000) > s.step_at(20000));
}

TEST_CASE("schedules reject malformed pieces") {
    using Catch = std::invalid_argument;
    CHECK_THROWS_WITH_AS(Schedule(0.0, 1.0, 0.5, 1.0, 1.0, 0.5),
                         "schedule constants must be positive", Catch);
    CHECK_THROWS_WITH_AS(Schedule(1.0, -2.0, 0.5, 1.0, 1.0, 0.5),
                         "schedule constants must be positive", Catch);
    CHECK_THROWS_WITH_AS(Schedule(1.0, 1.0, 1.2, 1.0, 1.0, 0.5),
                         "schedule exponents must lie in (0, 1]", Catch);
    CHECK_THROWS_WITH_AS(Schedule(1.0, 1.0, 0.5, 1.0, 1.0, 0.0),
                         "schedule exponents must lie in (0, 1]", Catch);
    // alpha must not exceed 2 * beta ...
    CHECK_THROWS_WITH_AS(
        Schedule(1.0, 1.0, 0.9, 1.0, 1.0, 0.3),
        "schedule exponents must satisfy beta <= alpha <= min(1, 2*beta)",
        Catch);
    // ... and beta must not exceed alpha.
    CHECK_THROWS_WITH_AS(
        Schedule(1.0, 1.0, 0.6, 1.0, 1.0, 0.8),
        "schedule exponents must satisfy beta <= alpha <= min(1, 2*beta)",
        Catch);

    CHECK_THROWS_WITH_AS(Schedule(std::vector<SchedulePiece>{}),
                         "schedule needs >= 1 piece", Catch);
    SchedulePiece late;
    late.start = 2;
    CHECK_THROWS_WITH_AS(Schedule({late}),
                         "first schedule piece must start at k = 1", Catch);
    SchedulePiece first, dup;
    dup.start = 1;
    CHECK_THROWS_WITH_AS(Schedule({first, dup}),
                         "schedule piece starts must increase", Catch);

    Schedule ok(1.0, 1.0, 0.5, 1.0, 1.0, 0.5);
    CHECK_THROWS_WITH_AS(ok.lr_at(0), "schedule iteration must be >= 1",
                         Catch);
}

TEST_CASE("piecewise schedules switch constants but keep the global clock") {
    SchedulePiece warm;  // defaults start at k = 1
    warm.C_eps = 1.0;
    warm.c_eps = 1e7;
    warm.alpha = 1.0;
    warm.C_gamma = 1.0;
    warm.c_gamma = 100.0;
    warm.beta = 1.0;
    SchedulePiece main;
    main.start = 100;
    main.C_eps = 1000.0;
    main.c_eps = 1e5;
    main.alpha = 4.0 / 7.0;
    main.C_gamma = 10.0;
    main.c_gamma = 1e4;
    main.beta = 4.0 / 7.0;
    Schedule two({warm, main});

    CHECK(two.lr_at(99) ==
          doctest::Approx(1.0 / (1e7 + 99.0)).epsilon(1e-13));
    // The second span sees the global iteration 100, not a restarted count.
    CHECK(two.lr_at(100) ==
          doctest::Approx(1000.0 / (1e5 + std::pow(100.0, 4.0 / 7.0)))
              .epsilon(1e-13));
    CHECK(two.step_at(100) ==
          doctest::Approx(10.0 / (1e4 + std::pow(100.0, 4.0 / 7.0)))
              .epsilon(1e-13));
}

TEST_CASE("tempering plans expose constant and geometric temperatures") {
    const TemperingPlan flat = TemperingPlan::constant(0.7);
    CHECK(flat.tau_at(0) == 0.7);
    CHECK(flat.tau_at(123456) == 0.7);

    const TemperingPlan geo = TemperingPlan::geometric_decay(100.0, 0.999, 1.0);
    CHECK(geo.tau_at(0) == doctest::Approx(100.0).epsilon(1e-15));
    CHECK(geo.tau_at(1) == doctest::Approx(99.9).epsilon(1e-12));
    CHECK(geo.tau_at(2) == doctest::Approx(100.0 * 0.999 * 0.999).epsilon(1e-12));
    CHECK(geo.tau_at(100000) == 1.0);  // clamped at the floor
    for (long long k = 0; k < 50; ++k) {
        CHECK(geo.tau_at(k + 1) <= geo.tau_at(k));
    }
}

TEST_CASE("the inverse-temperature ramp interpolates toward its target") {
    TemperingPlan plan;
    CHECK(plan.lambda_at(0, 50.0) == 50.0);  // ramp disabled by default

    plan.lambda_start = 0.0;
    plan.lambda_ramp = 1000;
    CHECK(plan.lambda_at(0, 50.0) == doctest::Approx(0.0));
    CHECK(plan.lambda_at(500, 50.0) == doctest::Approx(25.0).epsilon(1e-13));
    CHECK(plan.lambda_at(1000, 50.0) == 50.0);
    CHECK(plan.lambda_at(90000, 50.0) == 50.0);

    plan.lambda_start = 10.0;
    CHECK(plan.lambda_at(250, 50.0) == doctest::Approx(20.0).epsilon(1e-13));
}

TEST_CASE("sampler kinds round-trip through their names") {
    CHECK(efi::sampler_kind_from_string("sgld") == SamplerKind::kSgld);
    CHECK(efi::sampler_kind_from_string("sghmc") == SamplerKind::kSghmc);
    CHECK(efi::to_string(SamplerKind::kSgld) == "sgld");
    CHECK(efi::to_string(SamplerKind::kSghmc) == "sghmc");
    CHECK_THROWS_AS(efi::sampler_kind_from_string("hmc"),
                    std::invalid_argument);
}

TEST_CASE("error scores implement the standard-law derivatives") {
    Vector z(5);
    z << -2.0, -0.5, 0.0, 1.0, 3.0;
    Vector score;
    efi::error_score(ErrorKind::kGaussian, z, score);
    CHECK((score + z).cwiseAbs().maxCoeff() == 0.0);

    efi::error_score(ErrorKind::kLogistic, z, score);
    // 1 - 2*sigmoid(z) == -tanh(z/2).
    for (int j = 0; j < z.size(); ++j) {
        CHECK(score[j] ==
              doctest::Approx(-std::tanh(z[j] / 2.0)).epsilon(1e-15));
    }
    Vector extreme(2);
    extreme << 800.0, -800.0;
    efi::error_score(ErrorKind::kLogistic, extreme, score);
    CHECK(score[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(score[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(score.allFinite());
}

TEST_CASE("the Langevin step holds a standard normal stationary") {
    const int dim = 20;
    const double eps = 0.05;
    CounterRng rng(2024, 0);
    Vector z = Vector::Zero(dim);
    Vector drift(dim);

    double sum = 0.0, sumsq = 0.0;
    long long count = 0;
    const int burn = 2000, keep = 10000;
    for (int k = 0; k < burn + keep; ++k) {
        drift = -z;  // score of N(0, I); no energy term
        efi::sgld_step(z, drift, eps, 1.0, rng);
        if (k >= burn) {
            sum += z.sum();
            sumsq += z.squaredNorm();
            count += dim;
        }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = sumsq / static_cast<double>(count) - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(var > 0.9);
    CHECK(var < 1.1);
}

TEST_CASE("the momentum step holds a standard normal stationary") {
    const int dim = 20;
    const double eps = 0.05, zeta = 0.3;
    CounterRng rng(2025, 0);
    Vector z = Vector::Zero(dim);
    Vector v = Vector::Zero(dim);
    Vector drift(dim);

    double sum = 0.0, sumsq = 0.0;
    long long count = 0;
    const int burn = 4000, keep = 20000;
    for (int k = 0; k < burn + keep; ++k) {
        drift = -z;
        efi::sghmc_step(z, v, drift, eps, 1.0, zeta, rng);
        if (k >= burn) {
            sum += z.sum();
            sumsq += z.squaredNorm();
            count += dim;
        }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = sumsq / static_cast<double>(count) - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(var > 0.85);
    CHECK(var < 1.15);
}

TEST_CASE("full momentum reproduces the Langevin step draw for draw") {
    const int dim = 7;
    CounterRng rng_a(77, 0), rng_b(77, 0);
    CounterRng init(78, 0);
    Vector za(dim), drift(dim);
    for (int j = 0; j < dim; ++j) za[j] = init.normal();
    Vector zb = za;
    Vector v = Vector::Zero(dim);

    for (int k = 0; k < 100; ++k) {
        drift = -za;
        efi::sgld_step(za, drift, 0.03, 0.9, rng_a);
        drift = -zb;
        efi::sghmc_step(zb, v, drift, 0.03, 0.9, 1.0, rng_b);
        // With zeta = 1 the momentum never carries over, so the two chains
        // must stay bitwise identical.
        CHECK((za - zb).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("the plain weight step is gradient ascent") {
    Vector w(3), g(3);
    w << 1.0, -2.0, 0.5;
    g << 0.1, 0.2, -0.3;
    efi::sgd_w_step(w, g, 2.0);
    CHECK(w[0] == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(-1.6).epsilon(1e-15));
    CHECK(w[2] == doctest::Approx(-0.1).epsilon(1e-15));
}

namespace {

// A small linear-model chain setup shared by the run_chain tests.
struct ChainRig {
    std::unique_ptr<efi::ModelFamily> family;
    Dataset data;
    DenseNet net;
    MixturePrior prior;
    Schedule schedule;
    TemperingPlan tempering;

    ChainRig()
        : family(efi::make_linear_known_sigma(3, 0.8)),
          net({1, 1}, Activation::kTanh),
          schedule(1.0, 1.0, 13.0 / 14.0, 0.05, 1.0, 4.0 / 7.0),
          tempering(TemperingPlan::constant(1.0)) {
        // The flat prior and small weight steps keep these short structural
        // runs far away from the divergence guard.
        prior.flat = true;
        Vector truth(3);
        truth << 1.0, -0.5, 0.25;
        CounterRng rng(510, 0);
        data = family->simulate(truth, 12, rng);
        net = DenseNet({family->net_input_dim(data), 6, family->theta_dim()},
                       Activation::kTanh);
    }

    FiducialSamples run(const RunSettings& settings, double lambda = 1.0) {
        EnergyConfig cfg;
        cfg.eta = 1.0;
        cfg.lambda = lambda;
        EnergyModel model(*family, data, net, cfg);
        return efi::run_chain(model, prior, schedule, tempering, settings);
    }
};

}  // namespace

TEST_CASE("a run with no collection phase returns metadata and zero rows") {
    ChainRig rig;
    RunSettings settings;
    settings.burn_in = 5;
    settings.iters = 0;
    settings.seed = 42;
    const FiducialSamples out = rig.run(settings);
    CHECK(out.draws.rows() == 0);
    CHECK(out.draws.cols() == 3);
    CHECK(out.names == rig.family->param_names());
    CHECK(out.iterations == 5);
    CHECK(out.z_final.size() == 12);
    CHECK(out.w_final.size() == rig.net.num_weights());
    CHECK(out.z_mean.cwiseAbs().maxCoeff() == 0.0);  // nothing collected
    CHECK(std::isfinite(out.final_energy));
    // trace_every = 1 records every iteration.
    CHECK(out.trace.size() == 5);
    CHECK(out.trace.front().iteration == 1);
    CHECK(out.trace.back().iteration == 5);
}

TEST_CASE("collection counts follow burn-in and thinning") {
    ChainRig rig;
    RunSettings settings;
    settings.burn_in = 4;
    settings.iters = 10;
    settings.thin = 3;
    settings.seed = 43;
    const FiducialSamples out = rig.run(settings);
    CHECK(out.draws.rows() == 3);  // floor(10 / 3)
    CHECK(out.iterations == 14);
    CHECK(out.draws.allFinite());
    CHECK(out.z_mean.allFinite());
    CHECK(out.z_mean.cwiseAbs().maxCoeff() > 0.0);

    // iters == thin collects exactly one row.
    settings.iters = 3;
    const FiducialSamples one = rig.run(settings);
    CHECK(one.draws.rows() == 1);
}

TEST_CASE("chains are deterministic in their seed") {
    ChainRig rig;
    RunSettings settings;
    settings.burn_in = 10;
    settings.iters = 20;
    settings.thin = 2;
    settings.seed = 99;
    const FiducialSamples a = rig.run(settings);
    const FiducialSamples b = rig.run(settings);
    CHECK((a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.w_final - b.w_final).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.z_final - b.z_final).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.final_energy == b.final_energy);

    settings.seed = 100;
    const FiducialSamples c = rig.run(settings);
    CHECK((a.draws - c.draws).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("a batch the size of the dataset is the full-batch path") {
    ChainRig rig;
    RunSettings settings;
    settings.burn_in = 8;
    settings.iters = 12;
    settings.thin = 2;
    settings.seed = 7;
    settings.batch_size = 0;
    const FiducialSamples full = rig.run(settings);
    settings.batch_size = rig.data.n();
    const FiducialSamples sized = rig.run(settings);
    CHECK((full.draws - sized.draws).cwiseAbs().maxCoeff() == 0.0);
    CHECK((full.w_final - sized.w_final).cwiseAbs().maxCoeff() == 0.0);

    // A genuine minibatch takes a different trajectory.
    settings.batch_size = 3;
    const FiducialSamples mini = rig.run(settings);
    CHECK((full.w_final - mini.w_final).cwiseAbs().maxCoeff() > 0.0);
    CHECK(mini.draws.allFinite());
}

TEST_CASE("the energy trace honors its cadence") {
    ChainRig rig;
    RunSettings settings;
    settings.burn_in = 6;
    settings.iters = 14;
    settings.seed = 11;
    settings.trace_every = 7;
    const FiducialSamples out = rig.run(settings);
    // Rows at k = 1, 7, 14, and the final k = 20.
    REQUIRE(out.trace.size() == 4);
    CHECK(out.trace[0].iteration == 1);
    CHECK(out.trace[1].iteration == 7);
    CHECK(out.trace[2].iteration == 14);
    CHECK(out.trace[3].iteration == 20);
    for (const auto& row : out.trace) {
        CHECK(row.energy ==
              doctest::Approx(row.penalty + row.discrepancy).epsilon(1e-12));
    }

    settings.trace_every = 0;
    CHECK(rig.run(settings).trace.empty());
}

TEST_CASE("an energy ceiling turns into a divergence error") {
    ChainRig rig;
    RunSettings settings;
    settings.burn_in = 0;
    settings.iters = 10;
    settings.seed = 13;
    settings.divergence_energy = 1e-12;
    try {
        rig.run(settings);
        FAIL("expected a divergence error");
    } catch (const efi::DivergenceError& err) {
        CHECK(err.iteration == 1);
        CHECK(err.last_energy == 0.0);  // no finite energy seen yet
        CHECK(std::string(err.what()).find("chain diverged at iteration 1") !=
              std::string::npos);
    }
}

TEST_CASE("run settings are validated before any work") {
    ChainRig rig;
    RunSettings settings;
    settings.iters = 4;
    settings.thin = 0;
    CHECK_THROWS_AS(rig.run(settings), std::invalid_argument);
    settings.thin = 1;
    settings.burn_in = -1;
    CHECK_THROWS_AS(rig.run(settings), std::invalid_argument);
    settings.burn_in = 0;
    rig.tempering.zeta = 0.0;
    CHECK_THROWS_AS(rig.run(settings), std::invalid_argument);
    rig.tempering.zeta = 1.5;
    CHECK_THROWS_AS(rig.run(settings), std::invalid_argument);
}

TEST_CASE("the inverse-temperature ramp drives the model's lambda") {
    ChainRig rig;
    rig.tempering.lambda_start = 0.0;
    RunSettings settings;
    settings.burn_in = 0;
    settings.iters = 10;
    settings.seed = 17;

    EnergyConfig cfg;
    cfg.lambda = 8.0;
    rig.tempering.lambda_ramp = 20;  // twice the run length
    EnergyModel model(*rig.family, rig.data, rig.net, cfg);
    efi::run_chain(model, rig.prior, rig.schedule, rig.tempering, settings);
    // The last applied value is the ramp at k = 10 of 20: halfway to 8.
    CHECK(model.config().lambda == doctest::Approx(4.0).epsilon(1e-13));

    rig.tempering.lambda_ramp = 5;  // finishes inside the run
    EnergyModel model2(*rig.family, rig.data, rig.net, cfg);
    efi::run_chain(model2, rig.prior, rig.schedule, rig.tempering, settings);
    CHECK(model2.config().lambda == 8.0);
}

TEST_CASE("paired-group runs stitch two per-group chains together") {
    auto family = efi::make_behrens_fisher();
    Vector truth(4);
    truth << 1.0, 0.5, 0.0, 1.0;
    CounterRng rng(600, 0);
    const Dataset data = family->simulate(truth, 20, rng);
    REQUIRE(data.n() == 40);

    DenseNet net({2, 6, 2}, Activation::kTanh);
    MixturePrior prior;
    prior.flat = true;
    Schedule schedule(1.0, 1.0, 13.0 / 14.0, 0.05, 1.0, 4.0 / 7.0);
    const TemperingPlan tempering = TemperingPlan::constant(1.0);
    EnergyConfig cfg;
    RunSettings settings;
    settings.burn_in = 6;
    settings.iters = 12;
    settings.thin = 2;
    settings.seed = 21;

    const FiducialSamples out = efi::run_paired_groups(
        *family, data, net, cfg, prior, schedule, tempering, settings);
    CHECK(out.draws.rows() == 6);
    CHECK(out.draws.cols() == 4);
    CHECK(out.names ==
          std::vector<std::string>{"mu1", "sigma1", "mu2", "sigma2"});
    // Scale coordinates stay positive on the natural scale.
    CHECK((out.draws.col(1).array() > 0.0).all());
    CHECK((out.draws.col(3).array() > 0.0).all());
    CHECK(out.iterations == 2 * 18);
    CHECK(out.z_mean.size() == 40);
    CHECK(out.z_final.size() == 40);

    const FiducialSamples again = efi::run_paired_groups(
        *family, data, net, cfg, prior, schedule, tempering, settings);
    CHECK((out.draws - again.draws).cwiseAbs().maxCoeff() == 0.0);

    auto linear = efi::make_linear_known_sigma(3, 1.0);
    CounterRng rng2(601, 0);
    Vector beta(3);
    beta << 1.0, 0.0, 0.0;
    const Dataset lin_data = linear->simulate(beta, 10, rng2);
    DenseNet lin_net({linear->net_input_dim(lin_data), 6, 3},
                     Activation::kTanh);
    CHECK_THROWS_AS(
        efi::run_paired_groups(*linear, lin_data, lin_net, cfg, prior,
                               schedule, tempering, settings),
        std::invalid_argument);
}

TEST_CASE("the exact-inverse linear sampler recovers the closed form") {
    const int n = 60, p = 3;
    CounterRng rng(700, 0);
    Matrix X(n, p);
    Vector beta(p);
    beta << 1.0, -0.7, 0.4;
    const double sigma = 0.8;
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int j = 1; j < p; ++j) X(i, j) = rng.normal();
        y[i] = X.row(i).dot(beta) + sigma * rng.normal();
    }

    const Matrix draws = efi::run_exact_inverse_linear(
        y, X, sigma, 20.0, 0.005, 1.0, 2000, 40000, 10, 701);
    REQUIRE(draws.rows() == 4000);
    REQUIRE(draws.cols() == p);

    const Matrix xtx = X.transpose() * X;
    const Vector beta_hat = xtx.ldlt().solve(X.transpose() * y);
    const Matrix cov = sigma * sigma * xtx.inverse();
    for (int j = 0; j < p; ++j) {
        const double sd = std::sqrt(cov(j, j));
        const double mean = draws.col(j).mean();
        const double var =
            (draws.col(j).array() - mean).square().sum() /
            static_cast<double>(draws.rows() - 1);
        CHECK(std::abs(mean - beta_hat[j]) < 0.25 * sd);
        CHECK(var / cov(j, j) > 0.7);
        CHECK(var / cov(j, j) < 1.3);
    }

    Vector y_bad(n + 1);
    y_bad.setZero();
    CHECK_THROWS_AS(efi::run_exact_inverse_linear(y_bad, X, sigma, 1.0, 0.01,
                                                  1.0, 10, 10, 1, 1),
                    std::invalid_argument);
}
