#ifndef EFI_MODELS_HPP
#define EFI_MODELS_HPP

#include <memory>
#include <string>
#include <vector>

#include "efi/network.hpp"
#include "efi/rng.hpp"

namespace efi {

enum class ErrorKind { kGaussian, kLogistic };

// Observed data plus, for simulated datasets, the generating truth.  Y and X
// row counts always agree; `labeled` is used only by the semi-supervised
// family (1 = label observed, 0 = missing).  z_truth has one column per
// latent slot of the widest row.
struct Dataset {
    Matrix Y;                  // n x y_dim
    Matrix X;                  // n x d (d may be 0)
    std::vector<int> labeled;  // semi-supervised mask; empty otherwise
    Vector theta_truth;        // natural parameters; empty when unknown
    Matrix z_truth;            // realized latent errors; empty when unknown

    int n() const { return static_cast<int>(Y.rows()); }
    bool is_labeled(int row) const {
        return labeled.empty() || labeled[static_cast<std::size_t>(row)] != 0;
    }
};

// A model family bundles the data-generating equation, its simulator, the
// fitting discrepancy d(y, x, z, theta) with exact partial derivatives, and
// the layout glue the chain needs: how latents map into network inputs and
// which network outputs are log-scale.
//
// All discrepancy evaluations take theta in the *natural* parameterization;
// the energy layer owns the raw (network output) <-> natural transform.
class ModelFamily {
public:
    virtual ~ModelFamily() = default;

    virtual std::string name() const = 0;
    virtual int theta_dim() const = 0;
    virtual std::vector<std::string> param_names() const = 0;

    // Per-component flag: network output carried as log of the natural value.
    virtual std::vector<bool> log_scale() const {
        return std::vector<bool>(static_cast<std::size_t>(theta_dim()), false);
    }

    virtual ErrorKind error_kind() const { return ErrorKind::kGaussian; }
    virtual int y_dim() const { return 1; }
    virtual int net_input_dim(const Dataset& data) const = 0;

    // Latent slots for one observation (mediation/bivariate use 2; the
    // semi-supervised family uses 1 for labeled rows and 2 for unlabeled).
    virtual int z_dim(const Dataset& data, int row) const {
        (void)data; (void)row;
        return 1;
    }

    // Writes the network input row for observation `row` given its latents.
    virtual void fill_net_input(const Dataset& data, int row, const double* z,
                                double* input) const = 0;

    // Chain rule from a gradient with respect to the network input row back
    // to the row's latent slots; accumulates into dz.
    virtual void add_z_input_grad(const Dataset& data, int row, const double* z,
                                  const double* dinput, double* dz) const = 0;

    virtual double discrepancy(const Dataset& data, int row, const double* z,
                               const Vector& theta) const = 0;

    // Accumulates the discrepancy partials into dtheta (natural space) and
    // dz (the row's latent slots).  Either destination may be shared across
    // rows by the caller, hence accumulation rather than assignment.
    virtual void discrepancy_grad(const Dataset& data, int row, const double* z,
                                  const Vector& theta, Vector& dtheta,
                                  double* dz) const = 0;

    // Evaluates the structural equation y = f(x, z, theta) for one
    // observation (all y components for multi-response families).
    virtual void forward_model(const double* x, const double* z,
                               const Vector& theta, double* y) const = 0;

    virtual Dataset simulate(const Vector& theta, int n, CounterRng& rng) const = 0;

    // Functionals of theta reported alongside the raw parameters
    // (e.g. the bivariate correlation, the mediation product).
    virtual std::vector<std::string> derived_names() const { return {}; }
    virtual void derived_values(const Vector& theta, Vector& out) const {
        (void)theta; (void)out;
    }

    // True for the two-group family whose chain is a pair of per-group runs.
    virtual bool paired_groups() const { return false; }

    // --- layout helpers shared by the energy layer and the chain ---

    int total_z_dim(const Dataset& data) const;
    std::vector<int> z_offsets(const Dataset& data) const;
};

// Families (constructor arguments are the design knobs the experiments vary):
std::unique_ptr<ModelFamily> make_linear_known_sigma(int p, double sigma);
std::unique_ptr<ModelFamily> make_linear_unknown_sigma(int p);
std::unique_ptr<ModelFamily> make_gauss2(double sigma = 2.5);
std::unique_ptr<ModelFamily> make_logistic_binary(int p);
std::unique_ptr<ModelFamily> make_logistic_multiclass(int p, int classes);
std::unique_ptr<ModelFamily> make_ssl_logistic(int p, double tau = 0.02,
                                               double labeled_fraction = 0.1);
std::unique_ptr<ModelFamily> make_normal_group();
std::unique_ptr<ModelFamily> make_behrens_fisher();
std::unique_ptr<ModelFamily> make_bivariate_normal();
std::unique_ptr<ModelFamily> make_mediation();

// Splits a two-group dataset (group indicator in column 0 of X) into
// per-group single-response datasets for the paired-chain run.
std::pair<Dataset, Dataset> split_groups(const Dataset& data);

// Closed-form inverse of the linear structural equation:
// theta = (X'X)^{-1} X'(y - sigma z).  Oracle for the network-free sampler
// and for tests.
Vector analytic_inverse_linear(const Vector& y, const Matrix& X,
                               const Vector& z, double sigma);

// CSV round trip.  Layout: `y[,y2],x1..xd` with one row per observation; the
// semi-supervised family instead uses `x1..xd,label` with an empty label
// field marking a missing label.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

}  // namespace efi

#endif  // EFI_MODELS_HPP
