#include "efi/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "efi/special.hpp"

namespace efi {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double h = p * (static_cast<double>(sorted.size()) - 1.0);
    const auto i = static_cast<std::size_t>(h);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, p);
}

std::pair<double, double> percentile_ci(const Vector& draws, double level) {
    if (draws.size() < 2) throw std::invalid_argument("need >= 2 draws");
    if (!(level > 0.0) || !(level < 1.0)) {
        throw std::invalid_argument("level must lie in (0, 1)");
    }
    std::vector<double> v(draws.data(), draws.data() + draws.size());
    std::sort(v.begin(), v.end());
    return {quantile_sorted(v, 0.5 * (1.0 - level)),
            quantile_sorted(v, 0.5 * (1.0 + level))};
}

std::pair<double, double> percentile_ci(const Matrix& draws, int column,
                                        double level) {
    if (column < 0 || column >= draws.cols()) {
        throw std::out_of_range("column out of range");
    }
    return percentile_ci(Vector(draws.col(column)), level);
}

Vector point_estimate(const Matrix& draws) {
    if (draws.rows() == 0) throw std::invalid_argument("empty sample matrix");
    return draws.colwise().mean().transpose();
}

Matrix derived_draws(const ModelFamily& family, const Matrix& draws) {
    const auto names = family.derived_names();
    const int d = static_cast<int>(names.size());
    Matrix out(draws.rows(), d);
    if (d == 0) return out;
    Vector theta(family.theta_dim()), value(d);
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        theta = draws.row(i).transpose();
        family.derived_values(theta, value);
        out.row(i) = value.transpose();
    }
    return out;
}

bool mediation_decision(const Matrix& draws, int beta_col, int gamma_col,
                        double level) {
    if (beta_col < 0 || beta_col >= draws.cols() || gamma_col < 0 ||
        gamma_col >= draws.cols()) {
        throw std::out_of_range("product columns out of range");
    }
    Vector product = draws.col(beta_col).cwiseProduct(draws.col(gamma_col));
    const auto ci = percentile_ci(product, level);
    return ci.first > 0.0 || ci.second < 0.0;
}

const CoverageRow* CoverageReport::find(const std::string& group) const {
    for (const auto& row : rows) {
        if (row.group == group) return &row;
    }
    return nullptr;
}

CoverageReport coverage_harness(int replicates, std::uint64_t master_seed,
                                int threads, const ReplicateEval& eval) {
    if (replicates < 1) throw std::invalid_argument("need >= 1 replicate");
    if (threads < 1) threads = 1;
    threads = std::min(threads, replicates);

    struct ReplicateResult {
        bool failed = false;
        std::string error;
        std::vector<QuantityCheck> checks;
    };
    std::vector<ReplicateResult> results(static_cast<std::size_t>(replicates));

    auto run_one = [&](int rep) {
        ReplicateResult& res = results[static_cast<std::size_t>(rep)];
        try {
            res.checks = eval(rep, CounterRng::derive_seed(
                                       master_seed,
                                       static_cast<std::uint64_t>(rep)));
        } catch (const std::exception& ex) {
            res.failed = true;
            res.error = "replicate " + std::to_string(rep) + ": " + ex.what();
        }
    };

    if (threads == 1) {
        for (int rep = 0; rep < replicates; ++rep) run_one(rep);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (int rep = next.fetch_add(1); rep < replicates;
                     rep = next.fetch_add(1)) {
                    run_one(rep);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    // Aggregate in replicate order so the report is thread-count invariant.
    struct GroupAccum {
        long long covered = 0;
        long long total = 0;
        double width_sum = 0.0;
        std::vector<double> replicate_width_means;
    };
    std::vector<std::string> group_order;
    std::vector<GroupAccum> accums;
    auto accum_for = [&](const std::string& group) -> GroupAccum& {
        for (std::size_t g = 0; g < group_order.size(); ++g) {
            if (group_order[g] == group) return accums[g];
        }
        group_order.push_back(group);
        accums.emplace_back();
        return accums.back();
    };

    CoverageReport report;
    report.replicates = replicates;
    for (const auto& res : results) {
        if (res.failed) {
            ++report.failures;
            report.errors.push_back(res.error);
            continue;
        }
        // Per-replicate group means feed the width_std column.
        std::vector<std::string> seen;
        std::vector<double> sums;
        std::vector<int> counts;
        for (const auto& check : res.checks) {
            GroupAccum& acc = accum_for(check.group);
            acc.covered += check.covered() ? 1 : 0;
            acc.total += 1;
            acc.width_sum += check.width();
            std::size_t s = 0;
            while (s < seen.size() && seen[s] != check.group) ++s;
            if (s == seen.size()) {
                seen.push_back(check.group);
                sums.push_back(0.0);
                counts.push_back(0);
            }
            sums[s] += check.width();
            counts[s] += 1;
        }
        for (std::size_t s = 0; s < seen.size(); ++s) {
            accum_for(seen[s]).replicate_width_means.push_back(sums[s] /
                                                               counts[s]);
        }
    }

    for (std::size_t g = 0; g < group_order.size(); ++g) {
        const GroupAccum& acc = accums[g];
        CoverageRow row;
        row.group = group_order[g];
        row.quantities = static_cast<int>(acc.total);
        row.coverage = acc.total > 0
                           ? static_cast<double>(acc.covered) /
                                 static_cast<double>(acc.total)
                           : 0.0;
        row.width_mean = acc.total > 0 ? acc.width_sum /
                                             static_cast<double>(acc.total)
                                       : 0.0;
        const auto& means = acc.replicate_width_means;
        if (means.size() > 1) {
            double m = 0.0;
            for (double v : means) m += v;
            m /= static_cast<double>(means.size());
            double ss = 0.0;
            for (double v : means) ss += (v - m) * (v - m);
            row.width_std =
                std::sqrt(ss / (static_cast<double>(means.size()) - 1.0));
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

DiagnosticsBundle diagnostics(const FiducialSamples& samples,
                              const ModelFamily& family, const Dataset& data,
                              double level) {
    DiagnosticsBundle bundle;
    const Eigen::Index zdim = samples.z_mean.size();
    const bool have_truth =
        data.z_truth.size() > 0 && data.z_truth.size() == zdim;

    // Imputed-versus-true latent scatter, flattened over slots.
    bundle.z_scatter_cols = {"z_true", "z_hat"};
    if (have_truth) {
        bundle.z_scatter.resize(zdim, 2);
        const auto offsets = family.z_offsets(data);
        Eigen::Index at = 0;
        for (int i = 0; i < data.n(); ++i) {
            for (int s = 0; s < family.z_dim(data, i); ++s, ++at) {
                bundle.z_scatter(at, 0) = data.z_truth(i, s);
                bundle.z_scatter(at, 1) = samples.z_mean[offsets[i] + s];
            }
        }
    } else {
        bundle.z_scatter.resize(0, 2);
    }

    // Q-Q of the imputed latents against the error law.
    bundle.qq_cols = {"theoretical", "z_hat_sorted"};
    bundle.qq.resize(zdim, 2);
    {
        std::vector<double> sorted(samples.z_mean.data(),
                                   samples.z_mean.data() + zdim);
        std::sort(sorted.begin(), sorted.end());
        const bool logistic = family.error_kind() == ErrorKind::kLogistic;
        for (Eigen::Index i = 0; i < zdim; ++i) {
            const double p = (static_cast<double>(i) + 0.5) /
                             static_cast<double>(zdim);
            bundle.qq(i, 0) =
                logistic ? std::log(p / (1.0 - p)) : norm_ppf(p);
            bundle.qq(i, 1) = sorted[static_cast<std::size_t>(i)];
        }
    }

    // Residual pairs: the systematic residual y - f(x, 0, theta_point)
    // against the first imputed noise coordinate of each observation.
    bundle.residual_cols = {"noise_hat", "residual"};
    if (samples.draws.rows() > 0) {
        const Vector theta = point_estimate(samples.draws);
        const auto offsets = family.z_offsets(data);
        bundle.residual.resize(data.n(), 2);
        std::vector<double> zero(8, 0.0);
        std::vector<double> y(static_cast<std::size_t>(family.y_dim()));
        for (int i = 0; i < data.n(); ++i) {
            family.forward_model(data.X.row(i).data(), zero.data(), theta,
                                 y.data());
            bundle.residual(i, 0) = samples.z_mean[offsets[i]];
            bundle.residual(i, 1) = data.Y(i, 0) - y[0];
        }
    } else {
        bundle.residual.resize(0, 2);
    }

    // Per-parameter point estimates and percentile intervals.
    bundle.ci_cols = {"param", "estimate", "lo", "hi"};
    bundle.ci_names = samples.names;
    const auto derived_names = family.derived_names();
    bundle.ci_names.insert(bundle.ci_names.end(), derived_names.begin(),
                           derived_names.end());
    if (samples.draws.rows() >= 2) {
        const Matrix extra = derived_draws(family, samples.draws);
        const int total = static_cast<int>(bundle.ci_names.size());
        bundle.ci.resize(total, 3);
        for (int j = 0; j < total; ++j) {
            const bool base = j < samples.draws.cols();
            const Matrix& source = base ? samples.draws : extra;
            const int col = base ? j : j - static_cast<int>(samples.draws.cols());
            const auto ci = percentile_ci(source, col, level);
            bundle.ci(j, 0) = source.col(col).mean();
            bundle.ci(j, 1) = ci.first;
            bundle.ci(j, 2) = ci.second;
        }
    } else {
        bundle.ci.resize(0, 3);
    }
    return bundle;
}

void write_matrix_csv(const std::string& path,
                      const std::vector<std::string>& columns,
                      const Matrix& values) {
    if (columns.size() != static_cast<std::size_t>(values.cols())) {
        throw std::invalid_argument("column name count mismatch");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    std::string line;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (j > 0) line += ",";
        line += columns[j];
    }
    out << line << "\n";
    char buf[32];
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j > 0) line += ",";
            std::snprintf(buf, sizeof(buf), "%.17g", values(i, j));
            line += buf;
        }
        out << line << "\n";
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

}  // namespace efi
