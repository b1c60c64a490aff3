#ifndef EFI_CONFIG_HPP
#define EFI_CONFIG_HPP

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "efi/baselines.hpp"
#include "efi/energy.hpp"
#include "efi/inference.hpp"
#include "efi/models.hpp"
#include "efi/prior.hpp"
#include "efi/sampler.hpp"

namespace efi {

// Raised for malformed or inconsistent configuration input.  Messages carry a
// "<source>:<line>:" prefix when the problem is tied to a specific input line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Which model family an experiment uses plus its constructor knobs; only the
// knobs relevant to the chosen family are consulted.  outlier_count > 0
// shifts the latent errors of the last `outlier_count` simulated rows by
// outlier_shift before regenerating their responses (a contaminated sample).
struct FamilySpec {
    std::string name = "linear_known_sigma";
    int p = 10;                     // covariate count (linear/logistic/ssl)
    double sigma = 1.0;             // known noise scale (linear known / gauss2)
    int classes = 3;                // multiclass label count
    double tau = 0.02;              // soft-label temperature (ssl)
    double labeled_fraction = 0.5;  // ssl: probability a row keeps its label
    int outlier_count = 0;
    double outlier_shift = 0.0;
};

// Hidden layer widths only; input and output widths always come from the
// family, so a config cannot describe an inconsistent network.
struct NetSpec {
    std::vector<int> hidden = {300, 100};
    std::string activation = "relu";
};

// One- or two-phase step-size schedule.  `first.start` is pinned to 1; the
// second phase (when enabled) takes over from `second.start` onward with k
// staying global across the switch.
struct ScheduleSpec {
    SchedulePiece first{1, 50000.0, 10000.0, 13.0 / 14.0,
                        5000.0, 100000.0, 4.0 / 7.0};
    bool two_phase = false;
    SchedulePiece second;
};

struct SamplerSpec {
    SamplerKind kind = SamplerKind::kSgld;
    double zeta = 1.0;  // SGHMC momentum parameter in (0, 1]
    double tau = 1.0;   // constant temperature
    bool geometric_tempering = false;
    double tau0 = 100.0;
    double tau_decay = 0.9999;
    double tau_floor = 1.0;
    double lambda_start = -1.0;  // < 0 disables the lambda ramp
    long long lambda_ramp = 0;
};

struct RunSpec {
    long long burn_in = 1000;
    long long iters = 100000;
    int thin = 10;
    int batch = 0;         // weight-update minibatch size; 0 = full batch
    int trace_every = 100; // energy trace cadence; 0 disables the trace
    double divergence_energy = 1e12;
};

struct GfiSpec {
    double eps = 6.0;
    GfiNorm norm = GfiNorm::kL2;
    long long proposals = 100000;
};

// Complete description of one experiment: the generating model and truth,
// the sample and replication sizes, the methods to run, and every chain
// setting.  Field defaults match the reference linear-regression setup.
struct ExperimentConfig {
    std::string preset_name;  // last preset applied; empty when none
    FamilySpec family;
    std::vector<double> truth = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    int n = 500;
    int replicates = 100;
    std::uint64_t seed = 20270819;
    double level = 0.95;   // confidence level of every reported interval
    int mc_draws = 10000;  // draw count for Monte Carlo baselines
    std::vector<std::string> methods = {"efi"};
    NetSpec net;
    EnergyConfig energy;
    ScheduleSpec schedule;
    SamplerSpec sampler;
    MixturePrior prior;
    RunSpec run;
    GfiSpec gfi;
};

// --- config text format ----------------------------------------------------
//
// One `dotted.key = value` assignment per line; `#` starts a comment; blank
// lines are ignored.  Keys are applied in file order, so later assignments
// win.  The special key `preset = <name>` replaces the whole config with the
// named preset, after which subsequent lines override individual fields.
// Parsing is total: any unknown key or malformed value raises ConfigError
// with the offending source line.

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source);
ExperimentConfig load_config_file(const std::string& path);

// Applies one key/value pair; throws ConfigError (without location prefix).
void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value);

// Semantic checks beyond per-key syntax (ranges, truth length, schedule
// coupling condition, method/family compatibility).
void validate_config(const ExperimentConfig& cfg);

// Canonical serialization.  parse_config_text(config_to_text(c)) reproduces
// c exactly, and re-serializing yields the identical string.
std::string config_to_text(const ExperimentConfig& cfg);

// --- presets ---------------------------------------------------------------

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

// --- experiment drivers ----------------------------------------------------

std::unique_ptr<ModelFamily> build_family(const ExperimentConfig& cfg);
Vector truth_vector(const ExperimentConfig& cfg, const ModelFamily& family);
DenseNet build_net(const ExperimentConfig& cfg, const ModelFamily& family,
                   const Dataset& data);
Schedule build_schedule(const ExperimentConfig& cfg);
TemperingPlan build_tempering(const ExperimentConfig& cfg);
RunSettings build_run_settings(const ExperimentConfig& cfg, int n_rows,
                               std::uint64_t seed);
Dataset simulate_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

// Rejects data whose shape cannot belong to the configured family (response
// and covariate widths, the label column for the semi-supervised family)
// before any chain work starts.
void check_data_schema(const ExperimentConfig& cfg, const ModelFamily& family,
                       const Dataset& data);

// Runs the configured chain on one dataset (paired per-group chains for the
// two-group family) and returns the collected fiducial draws.
FiducialSamples fit_dataset(const ExperimentConfig& cfg, const Dataset& data,
                            std::uint64_t seed);

// Interval checks of one method on one dataset.  For testing methods
// (sobel, maxp, and the mediation decision under "efi") the check encodes a
// rejection indicator: truth = 1 and lo = hi = reject, so the aggregated
// "coverage" column is the rejection rate.
std::vector<QuantityCheck> evaluate_method(const ExperimentConfig& cfg,
                                           const std::string& method,
                                           const Dataset& data,
                                           std::uint64_t seed);

struct MethodReport {
    std::string method;
    CoverageReport report;
};

// Replicated run of one method: per-replicate seeds derive from cfg.seed, the
// dataset of replicate r is identical across methods, and results do not
// depend on the thread count.
MethodReport replicate_method(const ExperimentConfig& cfg,
                              const std::string& method, int threads);
std::vector<MethodReport> run_replicates(const ExperimentConfig& cfg,
                                         int threads);

}  // namespace efi

#endif  // EFI_CONFIG_HPP
