#ifndef EFI_SAMPLER_HPP
#define EFI_SAMPLER_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "efi/energy.hpp"
#include "efi/models.hpp"
#include "efi/network.hpp"
#include "efi/prior.hpp"
#include "efi/rng.hpp"

namespace efi {

// One span of the polynomially decaying step sizes
//   eps_k = C_eps / (c_eps + k^alpha),  gamma_k = C_gamma / (c_gamma + k^beta),
// governing iterations k >= start (k stays global across spans).
struct SchedulePiece {
    long long start = 1;
    double C_eps = 1.0, c_eps = 1.0, alpha = 13.0 / 14.0;
    double C_gamma = 1.0, c_gamma = 1.0, beta = 4.0 / 7.0;
};

// Validated at construction: positive constants, alpha/beta in (0,1], and the
// coupling condition beta <= alpha <= min(1, 2*beta) for every piece.
class Schedule {
public:
    Schedule(double C_eps, double c_eps, double alpha, double C_gamma,
             double c_gamma, double beta);
    explicit Schedule(std::vector<SchedulePiece> pieces);

    double lr_at(long long k) const;    // eps_k (latent update)
    double step_at(long long k) const;  // gamma_k (weight update)
    const std::vector<SchedulePiece>& pieces() const { return pieces_; }

private:
    std::vector<SchedulePiece> pieces_;
    const SchedulePiece& piece_at(long long k) const;
};

// Temperature sequence, SGHMC momentum, and the optional ramp of the inverse
// temperature lambda up to its target value.
struct TemperingPlan {
    bool geometric = false;
    double tau = 1.0;    // constant temperature when geometric == false
    double tau0 = 100.0; // initial temperature of the geometric decay
    double decay = 0.9999;
    double floor = 1.0;
    double zeta = 1.0;   // SGHMC momentum parameter in (0, 1]
    double lambda_start = -1.0;    // < 0 disables the ramp
    long long lambda_ramp = 0;     // iterations to reach the target

    double tau_at(long long k) const;
    double lambda_at(long long k, double lambda_target) const;

    static TemperingPlan constant(double tau_value);
    static TemperingPlan geometric_decay(double tau0, double decay, double floor);
};

enum class SamplerKind { kSgld, kSghmc };
SamplerKind sampler_kind_from_string(const std::string& name);
std::string to_string(SamplerKind kind);

struct RunSettings {
    SamplerKind kind = SamplerKind::kSgld;
    long long burn_in = 0;  // iterations discarded before collection
    long long iters = 0;    // collection-phase iterations
    int thin = 1;           // keep every thin-th pooled estimate
    int batch_size = 0;     // weight-update minibatch size; 0 = full batch
    std::uint64_t seed = 0;
    int trace_every = 1;    // energy trace cadence; <= 0 disables the trace
    double divergence_energy = 1e12;
    // Per-coordinate caps on one update's displacement (drift only; the
    // injected noise is never clipped).  Freshly initialized networks see
    // energy gradients orders of magnitude above their equilibrium scale, and
    // the mixture prior's gradient spikes near w = 0; both would need step
    // sizes far below the reference values to survive unclipped.  The caps
    // sit well above healthy equilibrium steps, so they only shape the early
    // transient.  <= 0 disables a cap.
    double max_z_step = 2.0;
    double max_w_step = 0.5;
};

struct TraceRow {
    long long iteration = 0;
    double energy = 0.0;
    double penalty = 0.0;
    double discrepancy = 0.0;
};

struct FiducialSamples {
    Matrix draws;  // one collected pooled estimate per row, natural scale
    std::vector<std::string> names;
    std::vector<TraceRow> trace;
    Vector z_mean;   // latent vector averaged over collection points
    Vector z_final;
    Vector w_final;
    long long iterations = 0;
    double final_energy = 0.0;
};

// Thrown when the chain state stops being finite (or the energy exceeds the
// configured ceiling); carries the iteration and the last finite energy seen.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(long long iteration, double last_energy);
    long long iteration;
    double last_energy;
};

// Score of the standard error law, written into `score`:
// gaussian -> -z; logistic -> 1 - 2*sigmoid(z), component-wise.
void error_score(ErrorKind kind, const Vector& z, Vector& score);

// z <- z + eps * grad + sqrt(2 * tau * eps) * e,  e ~ N(0, I).
void sgld_step(Vector& z, const Vector& grad_logpi, double eps, double tau,
               CounterRng& rng);

// v <- (1 - zeta) * v + eps * grad + sqrt(2 * zeta * tau * eps) * e;  z <- z + v.
// zeta = 1 with v = 0 reproduces one sgld_step exactly (same draw order).
void sghmc_step(Vector& z, Vector& v, const Vector& grad_logpi, double eps,
                double tau, double zeta, CounterRng& rng);

// w <- w + gamma * grad  (ascent on the log-posterior of the weights).
void sgd_w_step(Vector& w, const Vector& grad, double gamma);

// The full alternating run: latent SGLD/SGHMC updates against the tempered
// energy, SGD weight updates against the minibatch log-likelihood plus prior,
// then pooled-estimate collection after burn-in (floor(iters/thin) rows).
// Step sizes from the schedule are divided by the number of observations, so
// both updates work on per-observation averaged gradients.
FiducialSamples run_chain(EnergyModel& model, const MixturePrior& prior,
                          const Schedule& schedule,
                          const TemperingPlan& tempering,
                          const RunSettings& run);

// Two-group driver for families with paired_groups(): splits the dataset on
// the indicator column, runs one single-group chain per group with seeds
// derived from run.seed, and pairs the two draw streams by index.
FiducialSamples run_paired_groups(const ModelFamily& family,
                                  const Dataset& data, const DenseNet& net,
                                  const EnergyConfig& ecfg,
                                  const MixturePrior& prior,
                                  const Schedule& schedule,
                                  const TemperingPlan& tempering,
                                  const RunSettings& run);

// Validation sampler for the linear model with the exact inverse function in
// place of the network: theta(Z) = (X'X)^{-1} X'(y - sigma Z) and latent law
//   pi(Z) propto exp(-|Z|^2/2 - lambda * |(I-H)(y - sigma Z)|^2),
// run with a constant step size.  Returns floor(iters/thin) rows of theta(Z);
// under this target theta(Z) is exactly Gaussian around the least-squares
// estimate for any lambda.
Matrix run_exact_inverse_linear(const Vector& y, const Matrix& X, double sigma,
                                double lambda, double eps, double tau,
                                long long burn_in, long long iters, int thin,
                                std::uint64_t seed);

}  // namespace efi

#endif  // EFI_SAMPLER_HPP
