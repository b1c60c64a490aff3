#include "efi/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace efi {

namespace {

void validate_piece(const SchedulePiece& p) {
    if (!(p.C_eps > 0.0) || !(p.c_eps > 0.0) || !(p.C_gamma > 0.0) ||
        !(p.c_gamma > 0.0)) {
        throw std::invalid_argument("schedule constants must be positive");
    }
    if (!(p.alpha > 0.0) || p.alpha > 1.0 || !(p.beta > 0.0) || p.beta > 1.0) {
        throw std::invalid_argument("schedule exponents must lie in (0, 1]");
    }
    if (!(p.beta <= p.alpha && p.alpha <= std::min(1.0, 2.0 * p.beta))) {
        throw std::invalid_argument(
            "schedule exponents must satisfy beta <= alpha <= min(1, 2*beta)");
    }
}

}  // namespace

Schedule::Schedule(double C_eps, double c_eps, double alpha, double C_gamma,
                   double c_gamma, double beta)
    : Schedule(std::vector<SchedulePiece>{
          {1, C_eps, c_eps, alpha, C_gamma, c_gamma, beta}}) {}

Schedule::Schedule(std::vector<SchedulePiece> pieces)
    : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw std::invalid_argument("schedule needs >= 1 piece");
    if (pieces_.front().start != 1) {
        throw std::invalid_argument("first schedule piece must start at k = 1");
    }
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        validate_piece(pieces_[i]);
        if (i > 0 && pieces_[i].start <= pieces_[i - 1].start) {
            throw std::invalid_argument("schedule piece starts must increase");
        }
    }
}

const SchedulePiece& Schedule::piece_at(long long k) const {
    if (k < 1) throw std::invalid_argument("schedule iteration must be >= 1");
    std::size_t idx = 0;
    while (idx + 1 < pieces_.size() && pieces_[idx + 1].start <= k) ++idx;
    return pieces_[idx];
}

double Schedule::lr_at(long long k) const {
    const SchedulePiece& p = piece_at(k);
    return p.C_eps / (p.c_eps + std::pow(static_cast<double>(k), p.alpha));
}

double Schedule::step_at(long long k) const {
    const SchedulePiece& p = piece_at(k);
    return p.C_gamma / (p.c_gamma + std::pow(static_cast<double>(k), p.beta));
}

double TemperingPlan::tau_at(long long k) const {
    if (!geometric) return tau;
    return std::max(tau0 * std::pow(decay, static_cast<double>(k)), floor);
}

double TemperingPlan::lambda_at(long long k, double lambda_target) const {
    if (lambda_start < 0.0 || lambda_ramp <= 0) return lambda_target;
    if (k >= lambda_ramp) return lambda_target;
    const double frac = static_cast<double>(k) / static_cast<double>(lambda_ramp);
    return lambda_start + (lambda_target - lambda_start) * frac;
}

TemperingPlan TemperingPlan::constant(double tau_value) {
    TemperingPlan plan;
    plan.geometric = false;
    plan.tau = tau_value;
    return plan;
}

TemperingPlan TemperingPlan::geometric_decay(double tau0, double decay,
                                             double floor) {
    TemperingPlan plan;
    plan.geometric = true;
    plan.tau0 = tau0;
    plan.decay = decay;
    plan.floor = floor;
    return plan;
}

SamplerKind sampler_kind_from_string(const std::string& name) {
    if (name == "sgld") return SamplerKind::kSgld;
    if (name == "sghmc") return SamplerKind::kSghmc;
    throw std::invalid_argument("unknown sampler '" + name + "'");
}

std::string to_string(SamplerKind kind) {
    return kind == SamplerKind::kSgld ? "sgld" : "sghmc";
}

DivergenceError::DivergenceError(long long iteration_, double last_energy_)
    : std::runtime_error("chain diverged at iteration " +
                         std::to_string(iteration_) + " (last finite energy " +
                         std::to_string(last_energy_) + ")"),
      iteration(iteration_), last_energy(last_energy_) {}

void error_score(ErrorKind kind, const Vector& z, Vector& score) {
    score.resize(z.size());
    if (kind == ErrorKind::kGaussian) {
        score = -z;
        return;
    }
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double v = z[j];
        const double sig = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                    : std::exp(v) / (1.0 + std::exp(v));
        score[j] = 1.0 - 2.0 * sig;
    }
}

namespace {

// Both samplers build their increment from this one expression so that at
// zeta = 1 (no momentum carry-over) they stay bitwise identical no matter
// how the compiler contracts the arithmetic.
inline double langevin_kick(double grad, double eps, double scale,
                            CounterRng& rng) {
    return eps * grad + scale * rng.normal();
}

}  // namespace

void sgld_step(Vector& z, const Vector& grad_logpi, double eps, double tau,
               CounterRng& rng) {
    const double scale = std::sqrt(2.0 * tau * eps);
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        z[j] += langevin_kick(grad_logpi[j], eps, scale, rng);
    }
}

void sghmc_step(Vector& z, Vector& v, const Vector& grad_logpi, double eps,
                double tau, double zeta, CounterRng& rng) {
    const double scale = std::sqrt(2.0 * zeta * tau * eps);
    const double keep = 1.0 - zeta;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        double kick = langevin_kick(grad_logpi[j], eps, scale, rng);
        if (keep != 0.0) kick += keep * v[j];
        v[j] = kick;
        z[j] += kick;
    }
}

void sgd_w_step(Vector& w, const Vector& grad, double gamma) {
    w += gamma * grad;
}

FiducialSamples run_chain(EnergyModel& model, const MixturePrior& prior,
                          const Schedule& schedule,
                          const TemperingPlan& tempering,
                          const RunSettings& run) {
    if (run.thin < 1) throw std::invalid_argument("thinning factor must be >= 1");
    if (run.burn_in < 0 || run.iters < 0) {
        throw std::invalid_argument("iteration counts must be nonnegative");
    }
    if (!(tempering.zeta > 0.0) || tempering.zeta > 1.0) {
        throw std::invalid_argument("momentum parameter must lie in (0, 1]");
    }

    const ModelFamily& family = model.family();
    const int n = model.n();
    const int zdim = model.z_total();
    const double lambda_target = model.config().lambda;
    const bool ramp = tempering.lambda_start >= 0.0 && tempering.lambda_ramp > 0;

    CounterRng z_noise(run.seed, 0);
    CounterRng batch_rng(run.seed, 1);
    CounterRng z_init(run.seed, 2);
    CounterRng w_init(run.seed, 3);

    // Initialize latents from the error law and weights from the usual
    // fan-in-scaled Gaussians.
    Vector z(zdim);
    const ErrorKind kind = family.error_kind();
    for (int j = 0; j < zdim; ++j) {
        z[j] = kind == ErrorKind::kGaussian ? z_init.normal() : z_init.logistic();
    }
    Vector w;
    model.net().init_weights(w, w_init);

    Vector v;  // SGHMC momentum
    if (run.kind == SamplerKind::kSghmc) v = Vector::Zero(zdim);

    Vector gz(zdim), score(zdim), drift(zdim), gw(model.net().num_weights());

    const bool minibatch = run.batch_size > 0 && run.batch_size < n;
    std::vector<int> batch;
    std::vector<int> perm;
    if (minibatch) {
        batch.resize(static_cast<std::size_t>(run.batch_size));
        perm.resize(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
    }

    const long long total = run.burn_in + run.iters;
    const long long rows = run.thin > 0 ? run.iters / run.thin : 0;

    FiducialSamples out;
    out.names = family.param_names();
    out.draws.resize(rows, family.theta_dim());
    out.z_mean = Vector::Zero(zdim);
    out.iterations = total;
    if (run.trace_every > 0) {
        out.trace.reserve(static_cast<std::size_t>(total / run.trace_every + 2));
    }

    double last_energy = 0.0;
    long long next_row = 0;
    for (long long k = 1; k <= total; ++k) {
        const double tau_k = tempering.tau_at(k);
        const double lambda_k =
            ramp ? tempering.lambda_at(k, lambda_target) : lambda_target;
        if (ramp) model.set_lambda(lambda_k);

        // Latent update on per-observation averaged gradients.
        const double eps_k = schedule.lr_at(k) / n;
        model.grad_z(w, z, gz);
        error_score(kind, z, score);
        drift = score - lambda_k * gz;
        if (run.max_z_step > 0.0) {
            const double limit = run.max_z_step / eps_k;
            drift = drift.cwiseMax(-limit).cwiseMin(limit);
        }
        if (run.kind == SamplerKind::kSgld) {
            sgld_step(z, drift, eps_k, tau_k, z_noise);
        } else {
            sghmc_step(z, v, drift, eps_k, tau_k, tempering.zeta, z_noise);
        }
        if (!z.allFinite()) throw DivergenceError(k, last_energy);

        // Weight update.
        const double gamma_k = schedule.step_at(k) / n;
        if (minibatch) {
            for (int j = 0; j < run.batch_size; ++j) {
                const int swap = j + static_cast<int>(batch_rng.uniform_below(
                                         static_cast<std::uint64_t>(n - j)));
                std::swap(perm[static_cast<std::size_t>(j)],
                          perm[static_cast<std::size_t>(swap)]);
                batch[static_cast<std::size_t>(j)] = perm[static_cast<std::size_t>(j)];
            }
        }
        model.grad_w_loglik(w, z, batch, gw);
        prior.add_grad(w, gw);
        sgd_w_step(w, gw, gamma_k);
        if (!w.allFinite()) throw DivergenceError(k, last_energy);

        const EnergyBreakdown& parts = model.last_breakdown();
        const double energy = parts.total();
        if (!std::isfinite(energy) || energy > run.divergence_energy) {
            throw DivergenceError(k, last_energy);
        }
        last_energy = energy;
        if (run.trace_every > 0 &&
            (k % run.trace_every == 0 || k == 1 || k == total)) {
            out.trace.push_back({k, energy, parts.penalty, parts.discrepancy});
        }

        // Fiducial sample collection.
        if (k > run.burn_in && (k - run.burn_in) % run.thin == 0 &&
            next_row < rows) {
            out.draws.row(next_row) = model.theta_bar(w, z).transpose();
            out.z_mean += z;
            ++next_row;
        }
    }

    if (next_row > 0) out.z_mean /= static_cast<double>(next_row);
    out.z_final = z;
    out.w_final = w;
    out.final_energy = last_energy;
    return out;
}

FiducialSamples run_paired_groups(const ModelFamily& family,
                                  const Dataset& data, const DenseNet& net,
                                  const EnergyConfig& ecfg,
                                  const MixturePrior& prior,
                                  const Schedule& schedule,
                                  const TemperingPlan& tempering,
                                  const RunSettings& run) {
    if (!family.paired_groups()) {
        throw std::invalid_argument("family does not run as paired groups");
    }
    auto groups = split_groups(data);
    auto sub_family = make_normal_group();

    FiducialSamples parts[2];
    const Dataset* subs[2] = {&groups.first, &groups.second};
    for (int g = 0; g < 2; ++g) {
        EnergyModel sub_model(*sub_family, *subs[g], net, ecfg);
        RunSettings sub_run = run;
        sub_run.seed = CounterRng::derive_seed(run.seed,
                                               static_cast<std::uint64_t>(g + 1));
        parts[g] = run_chain(sub_model, prior, schedule, tempering, sub_run);
    }

    FiducialSamples out;
    out.names = family.param_names();
    const Eigen::Index rows =
        std::min(parts[0].draws.rows(), parts[1].draws.rows());
    out.draws.resize(rows, 4);
    out.draws.block(0, 0, rows, 2) = parts[0].draws.topRows(rows);
    out.draws.block(0, 2, rows, 2) = parts[1].draws.topRows(rows);
    out.trace = parts[0].trace;
    out.trace.insert(out.trace.end(), parts[1].trace.begin(),
                     parts[1].trace.end());
    out.iterations = parts[0].iterations + parts[1].iterations;
    out.final_energy = parts[0].final_energy + parts[1].final_energy;

    // Map per-group latent summaries back to the original row order.
    out.z_mean.resize(data.n());
    out.z_final.resize(data.n());
    int at[2] = {0, 0};
    for (int i = 0; i < data.n(); ++i) {
        const int g = data.X(i, 0) < 0.5 ? 0 : 1;
        out.z_mean[i] = parts[g].z_mean[at[g]];
        out.z_final[i] = parts[g].z_final[at[g]];
        ++at[g];
    }
    out.w_final.resize(parts[0].w_final.size() + parts[1].w_final.size());
    out.w_final << parts[0].w_final, parts[1].w_final;
    return out;
}

Matrix run_exact_inverse_linear(const Vector& y, const Matrix& X, double sigma,
                                double lambda, double eps, double tau,
                                long long burn_in, long long iters, int thin,
                                std::uint64_t seed) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (y.size() != n) throw std::invalid_argument("response length mismatch");
    if (thin < 1) throw std::invalid_argument("thinning factor must be >= 1");

    const Eigen::MatrixXd Xd = X;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Xd);
    const Eigen::MatrixXd Q =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, p);

    CounterRng noise(seed, 0);
    CounterRng init(seed, 2);
    Vector z(n);
    for (int i = 0; i < n; ++i) z[i] = init.normal();

    const long long total = burn_in + iters;
    const long long rows = iters / thin;
    Matrix draws(rows, p);
    long long next_row = 0;

    Vector r(n), grad(n);
    const double scale = std::sqrt(2.0 * tau * eps);
    for (long long k = 1; k <= total; ++k) {
        r = y - sigma * z;
        // (I - H) r with H the hat matrix of X, via the thin Q factor.
        r -= Q * (Q.transpose() * r);
        grad = -z + 2.0 * lambda * sigma * r;
        for (int i = 0; i < n; ++i) {
            z[i] += eps * grad[i] + scale * noise.normal();
        }
        if (!z.allFinite()) throw DivergenceError(k, 0.0);
        if (k > burn_in && (k - burn_in) % thin == 0 && next_row < rows) {
            draws.row(next_row++) = qr.solve(y - sigma * z).transpose();
        }
    }
    return draws;
}

}  // namespace efi
