#include "efi/prior.hpp"

#include <cmath>
#include <numbers>

namespace efi {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2

}  // namespace

double MixturePrior::log_density_scalar(double w) const {
    if (flat) return 0.0;
    const double l1 = std::log(rho) - 0.5 * (w / sigma1) * (w / sigma1) - std::log(sigma1);
    const double l0 = std::log1p(-rho) - 0.5 * (w / sigma0) * (w / sigma0) - std::log(sigma0);
    const double m = std::max(l1, l0);
    return m + std::log(std::exp(l1 - m) + std::exp(l0 - m)) - kHalfLog2Pi;
}

double MixturePrior::grad_scalar(double w) const {
    if (flat) return 0.0;
    const double l1 = std::log(rho) - 0.5 * (w / sigma1) * (w / sigma1) - std::log(sigma1);
    const double l0 = std::log1p(-rho) - 0.5 * (w / sigma0) * (w / sigma0) - std::log(sigma0);
    // Responsibility of the slab component; logistic of the gap is stable
    // for either sign.
    const double r1 = 1.0 / (1.0 + std::exp(l0 - l1));
    return -w * (r1 / (sigma1 * sigma1) + (1.0 - r1) / (sigma0 * sigma0));
}

double MixturePrior::log_density(const Vector& w) const {
    if (flat) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) total += log_density_scalar(w[i]);
    return total;
}

void MixturePrior::add_grad(const Vector& w, Vector& grad) const {
    if (flat) return;
    for (Eigen::Index i = 0; i < w.size(); ++i) grad[i] += grad_scalar(w[i]);
}

}  // namespace efi
