#ifndef EFI_INFERENCE_HPP
#define EFI_INFERENCE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "efi/models.hpp"
#include "efi/sampler.hpp"

namespace efi {

// Empirical quantile with linear interpolation between order statistics
// (the convention is stated in output metadata as "type 7").
double quantile(std::vector<double> values, double p);
double quantile_sorted(const std::vector<double>& sorted, double p);

// Equal-tailed percentile interval at the given confidence level.
std::pair<double, double> percentile_ci(const Vector& draws, double level);
std::pair<double, double> percentile_ci(const Matrix& draws, int column,
                                        double level);

// Column means of the kept draws.
Vector point_estimate(const Matrix& draws);

// Applies the family's derived functionals row by row (e.g. mu1 - mu2,
// beta*gamma, or rho from (l2, l3)); CIs of derived quantities are computed
// on these transformed draws, never by transforming interval endpoints.
Matrix derived_draws(const ModelFamily& family, const Matrix& draws);

// Rejects H0: beta*gamma = 0 when the percentile CI of the per-draw product
// excludes zero.
bool mediation_decision(const Matrix& draws, int beta_col, int gamma_col,
                        double level);

// ---------------------------------------------------------------------------
// Replicated-experiment harness.

// One tracked quantity of one replicate: its interval, the truth it should
// cover, and the aggregation group it reports under ("signal", "noise",
// "mu_diff", ...).
struct QuantityCheck {
    std::string group;
    double truth = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool covered() const { return lo <= truth && truth <= hi; }
    double width() const { return hi - lo; }
};

struct CoverageRow {
    std::string group;
    double coverage = 0.0;
    double width_mean = 0.0;
    double width_std = 0.0;  // across replicates (of per-replicate means)
    int quantities = 0;      // total checks aggregated into this row
};

struct CoverageReport {
    std::vector<CoverageRow> rows;
    int replicates = 0;
    int failures = 0;
    std::vector<std::string> errors;  // one message per failed replicate

    const CoverageRow* find(const std::string& group) const;
};

// Evaluates one replicate: simulate a dataset from the replicate seed, run
// the method under test, and return one check per tracked quantity.
using ReplicateEval =
    std::function<std::vector<QuantityCheck>(int replicate, std::uint64_t seed)>;

// Runs `replicates` evaluations with per-replicate seeds derived from
// master_seed, optionally across a thread pool.  Results are aggregated in
// replicate order, so the report is identical for any thread count.  A
// replicate that throws is recorded as a failure, not silently dropped.
CoverageReport coverage_harness(int replicates, std::uint64_t master_seed,
                                int threads, const ReplicateEval& eval);

// ---------------------------------------------------------------------------
// Diagnostics plot data.

struct DiagnosticsBundle {
    std::vector<std::string> z_scatter_cols;  // {"z_true", "z_hat"} when truth known
    Matrix z_scatter;
    std::vector<std::string> qq_cols;  // {"theoretical", "z_hat_sorted"}
    Matrix qq;
    std::vector<std::string> residual_cols;  // {"noise_hat", "residual"}
    Matrix residual;
    std::vector<std::string> ci_cols;  // {"param", "estimate", "lo", "hi"}
    std::vector<std::string> ci_names;
    Matrix ci;
};

DiagnosticsBundle diagnostics(const FiducialSamples& samples,
                              const ModelFamily& family, const Dataset& data,
                              double level);

// CSV helper shared by the command-line tools: writes a header row of column
// names followed by the matrix, one row per line, at full precision.
void write_matrix_csv(const std::string& path,
                      const std::vector<std::string>& columns,
                      const Matrix& values);

}  // namespace efi

#endif  // EFI_INFERENCE_HPP
