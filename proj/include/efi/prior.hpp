#ifndef EFI_PRIOR_HPP
#define EFI_PRIOR_HPP

#include "efi/network.hpp"

namespace efi {

// Two-component Gaussian mixture prior on each network weight,
//   pi(w_i) = rho * N(0, sigma1^2) + (1 - rho) * N(0, sigma0^2),
// with a narrow spike (sigma0) that keeps unused weights near zero and a
// wide slab (sigma1) for the active ones.  Densities are evaluated in log
// space throughout; the spike/slab responsibilities that appear in the
// gradient are formed with a logistic of the log-density gap, so neither
// component can underflow the other.
//
// Setting flat = true switches to an improper flat prior (log density 0,
// zero gradient), useful for isolating the likelihood part of an update.
struct MixturePrior {
    double rho = 1e-2;
    double sigma0 = 1e-5;
    double sigma1 = 0.02;
    bool flat = false;

    double log_density_scalar(double w) const;
    double grad_scalar(double w) const;

    double log_density(const Vector& w) const;
    // Accumulates d log pi / d w into grad (does not overwrite).
    void add_grad(const Vector& w, Vector& grad) const;
};

}  // namespace efi

#endif  // EFI_PRIOR_HPP
