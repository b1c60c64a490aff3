#ifndef EFI_ENERGY_HPP
#define EFI_ENERGY_HPP

#include <string>
#include <vector>

#include "efi/models.hpp"
#include "efi/network.hpp"

namespace efi {

// How the discrepancy term is parameterized:
//  - kPerSample ("efi_a"): each observation is scored at its own inverse
//    estimate theta_hat_i, so the penalty alone ties the rows together.
//  - kPooled ("efi_default"): every observation is scored at the pooled
//    estimate theta_bar, the row-mean of the raw network outputs.
enum class EnergyVariant { kPerSample, kPooled };

// Whether gradients treat the pooled mean as a function of the rows (exact
// chain rule) or as a constant snapshot.  Only the pooled variant's
// discrepancy term distinguishes the two; the penalty term is unaffected
// because its mean-coupling cancels exactly when summed over all rows.
enum class MeanCoupling { kExact, kFrozenMean };

EnergyVariant energy_variant_from_string(const std::string& name);
std::string to_string(EnergyVariant variant);

struct EnergyConfig {
    EnergyVariant variant = EnergyVariant::kPooled;
    MeanCoupling coupling = MeanCoupling::kExact;
    double eta = 1.0;     // penalty weight
    double lambda = 1.0;  // inverse temperature on the energy
};

struct EnergyBreakdown {
    double penalty = 0.0;
    double discrepancy = 0.0;
    double total() const { return penalty + discrepancy; }
};

// Gradient seeds dP/d(raw_i) of the penalty P = eta * sum_i ||raw_i - mean||^2.
// The two-argument form differentiates exactly (mean = column mean of raw,
// which collapses to 2*eta*(raw_i - mean) because the coupling terms cancel);
// the frozen form uses the supplied constant mean instead.
void penalty_seeds(double eta, const Matrix& raw, Matrix& seeds);
void penalty_seeds(double eta, const Matrix& raw,
                   const Eigen::RowVectorXd& frozen_mean, Matrix& seeds);

// Binds a model family, a dataset, and a network into the energy
//   U(w, z) = eta * sum_i ||raw_i - raw_bar||^2 + sum_i d_i(theta)
// where raw_i = g_w(input_i(z_i)) and theta is per-row or pooled depending on
// the variant.  Raw outputs live in an unconstrained space; coordinates the
// family marks log-scale are exponentiated before entering the discrepancy.
// All evaluation methods share one preallocated workspace, so an instance is
// not thread-safe; parallel replicates each build their own.
class EnergyModel {
public:
    EnergyModel(const ModelFamily& family, const Dataset& data,
                const DenseNet& net, EnergyConfig cfg);

    int n() const { return data_.n(); }
    int theta_dim() const { return family_.theta_dim(); }
    int z_total() const { return z_off_.back(); }
    const std::vector<int>& z_offsets() const { return z_off_; }
    const EnergyConfig& config() const { return cfg_; }
    const ModelFamily& family() const { return family_; }
    const Dataset& data() const { return data_; }
    const DenseNet& net() const { return net_; }

    // Supports ramping the inverse temperature along the run.
    void set_lambda(double lambda) { cfg_.lambda = lambda; }

    EnergyBreakdown energy(const Vector& w, const Vector& z);

    // Breakdown computed from the most recent forward pass (any evaluation
    // method refreshes it), letting the chain trace energy at no extra cost.
    const EnergyBreakdown& last_breakdown() const { return last_; }

    // dU/dz for the full energy (penalty chain through the network plus the
    // discrepancy's direct and chained z-dependence).  Overwrites gz.
    void grad_z(const Vector& w, const Vector& z, Vector& gz);

    // (n/m) * d/dw of sum over the batch of log pi(y_i | x_i, z_i, w), where
    // each term is -lambda times that observation's energy share.  An empty
    // batch means all rows.  When the pooled variant runs on a proper
    // minibatch the pooled estimate is held frozen, so only the penalty term
    // survives differentiation.  Overwrites gw.
    void grad_w_loglik(const Vector& w, const Vector& z,
                       const std::vector<int>& batch, Vector& gw);

    // Pooled parameter estimate (natural scale) at the current state.
    Vector theta_bar(const Vector& w, const Vector& z);
    // Per-row inverse estimates (natural scale), one row per observation.
    Matrix theta_rows(const Vector& w, const Vector& z);

private:
    const ModelFamily& family_;
    const Dataset& data_;
    const DenseNet& net_;
    EnergyConfig cfg_;
    std::vector<int> z_off_;
    std::vector<bool> log_scale_;
    NetWorkspace ws_;
    Matrix seeds_;      // n x theta_dim backprop seeds
    Matrix dinput_;     // n x input_dim
    Vector dtheta_;     // scratch natural-scale gradient
    Vector dz_scratch_; // scratch per-row latent gradient
    EnergyBreakdown last_;

    void forward(const Vector& w, const Vector& z);
    EnergyBreakdown breakdown_from_forward(const Vector& z);
    void natural_from_raw(const double* raw, Vector& theta) const;
    // Adds chain * d(natural)/d(raw) evaluated at raw into seed.
    void add_raw_chain(const Vector& chain, const double* raw,
                       Eigen::Ref<Eigen::RowVectorXd> seed) const;
};

}  // namespace efi

#endif  // EFI_ENERGY_HPP
