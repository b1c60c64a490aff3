#include "efi/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace efi {

EnergyVariant energy_variant_from_string(const std::string& name) {
    if (name == "efi_a") return EnergyVariant::kPerSample;
    if (name == "efi_default") return EnergyVariant::kPooled;
    throw std::invalid_argument("unknown energy variant '" + name + "'");
}

std::string to_string(EnergyVariant variant) {
    return variant == EnergyVariant::kPerSample ? "efi_a" : "efi_default";
}

void penalty_seeds(double eta, const Matrix& raw, Matrix& seeds) {
    const Eigen::RowVectorXd mean = raw.colwise().mean();
    penalty_seeds(eta, raw, mean, seeds);
}

void penalty_seeds(double eta, const Matrix& raw,
                   const Eigen::RowVectorXd& frozen_mean, Matrix& seeds) {
    seeds = 2.0 * eta * (raw.rowwise() - frozen_mean);
}

EnergyModel::EnergyModel(const ModelFamily& family, const Dataset& data,
                         const DenseNet& net, EnergyConfig cfg)
    : family_(family), data_(data), net_(net), cfg_(cfg),
      z_off_(family.z_offsets(data)), log_scale_(family.log_scale()) {
    if (net.output_dim() != family.theta_dim()) {
        throw std::invalid_argument("network output dimension " +
                                    std::to_string(net.output_dim()) +
                                    " does not match parameter dimension " +
                                    std::to_string(family.theta_dim()));
    }
    if (net.input_dim() != family.net_input_dim(data)) {
        throw std::invalid_argument("network input dimension " +
                                    std::to_string(net.input_dim()) +
                                    " does not match model input dimension " +
                                    std::to_string(family.net_input_dim(data)));
    }
    ws_.resize(net, data.n());
    seeds_.resize(data.n(), family.theta_dim());
    dinput_.resize(data.n(), net.input_dim());
    dtheta_.resize(family.theta_dim());
    int max_z = 1;
    for (int i = 0; i < data.n(); ++i) max_z = std::max(max_z, family.z_dim(data, i));
    dz_scratch_.resize(max_z);
}

void EnergyModel::forward(const Vector& w, const Vector& z) {
    if (z.size() != z_total()) {
        throw std::invalid_argument("latent vector has wrong length");
    }
    for (int i = 0; i < data_.n(); ++i) {
        family_.fill_net_input(data_, i, z.data() + z_off_[i],
                               ws_.act[0].row(i).data());
    }
    net_.forward(w, ws_);
}

void EnergyModel::natural_from_raw(const double* raw, Vector& theta) const {
    for (int j = 0; j < family_.theta_dim(); ++j) {
        theta[j] = log_scale_[static_cast<std::size_t>(j)] ? std::exp(raw[j])
                                                           : raw[j];
    }
}

void EnergyModel::add_raw_chain(const Vector& chain, const double* raw,
                                Eigen::Ref<Eigen::RowVectorXd> seed) const {
    for (int j = 0; j < family_.theta_dim(); ++j) {
        const double jac = log_scale_[static_cast<std::size_t>(j)]
                               ? std::exp(raw[j])
                               : 1.0;
        seed[j] += chain[j] * jac;
    }
}

EnergyBreakdown EnergyModel::breakdown_from_forward(const Vector& z) {
    const Matrix& raw = ws_.act.back();
    const Eigen::RowVectorXd raw_bar = raw.colwise().mean();

    EnergyBreakdown parts;
    parts.penalty = cfg_.eta * (raw.rowwise() - raw_bar).squaredNorm();

    Vector theta(family_.theta_dim());
    if (cfg_.variant == EnergyVariant::kPooled) {
        natural_from_raw(raw_bar.data(), theta);
        for (int i = 0; i < data_.n(); ++i) {
            parts.discrepancy +=
                family_.discrepancy(data_, i, z.data() + z_off_[i], theta);
        }
    } else {
        for (int i = 0; i < data_.n(); ++i) {
            natural_from_raw(raw.row(i).data(), theta);
            parts.discrepancy +=
                family_.discrepancy(data_, i, z.data() + z_off_[i], theta);
        }
    }
    last_ = parts;
    return parts;
}

EnergyBreakdown EnergyModel::energy(const Vector& w, const Vector& z) {
    forward(w, z);
    return breakdown_from_forward(z);
}

void EnergyModel::grad_z(const Vector& w, const Vector& z, Vector& gz) {
    forward(w, z);
    const Matrix& raw = ws_.act.back();
    const Eigen::RowVectorXd raw_bar = raw.colwise().mean();

    gz.setZero(z_total());
    penalty_seeds(cfg_.eta, raw, raw_bar, seeds_);

    Vector theta(family_.theta_dim());
    if (cfg_.variant == EnergyVariant::kPooled) {
        natural_from_raw(raw_bar.data(), theta);
        Vector dtheta_sum = Vector::Zero(family_.theta_dim());
        for (int i = 0; i < data_.n(); ++i) {
            family_.discrepancy_grad(data_, i, z.data() + z_off_[i], theta,
                                     dtheta_sum, gz.data() + z_off_[i]);
        }
        if (cfg_.coupling == MeanCoupling::kExact) {
            Eigen::RowVectorXd shared =
                Eigen::RowVectorXd::Zero(family_.theta_dim());
            add_raw_chain(dtheta_sum / data_.n(), raw_bar.data(), shared);
            seeds_.rowwise() += shared;
        }
    } else {
        for (int i = 0; i < data_.n(); ++i) {
            natural_from_raw(raw.row(i).data(), theta);
            dtheta_.setZero();
            family_.discrepancy_grad(data_, i, z.data() + z_off_[i], theta,
                                     dtheta_, gz.data() + z_off_[i]);
            add_raw_chain(dtheta_, raw.row(i).data(), seeds_.row(i));
        }
    }

    ws_.delta.back() = seeds_;
    net_.backprop_deltas(w, ws_);
    net_.input_grad(w, ws_, dinput_);
    for (int i = 0; i < data_.n(); ++i) {
        family_.add_z_input_grad(data_, i, z.data() + z_off_[i],
                                 dinput_.row(i).data(), gz.data() + z_off_[i]);
    }
}

void EnergyModel::grad_w_loglik(const Vector& w, const Vector& z,
                                const std::vector<int>& batch, Vector& gw) {
    forward(w, z);
    const Matrix& raw = ws_.act.back();
    const Eigen::RowVectorXd raw_bar = raw.colwise().mean();
    const bool full_batch = batch.empty() || static_cast<int>(batch.size()) == data_.n();

    seeds_.setZero();
    Vector theta(family_.theta_dim());

    auto per_sample_seed = [&](int i) {
        seeds_.row(i) = 2.0 * cfg_.eta * (raw.row(i) - raw_bar);
        if (cfg_.variant == EnergyVariant::kPerSample) {
            natural_from_raw(raw.row(i).data(), theta);
            dtheta_.setZero();
            dz_scratch_.setZero();
            family_.discrepancy_grad(data_, i, z.data() + z_off_[i], theta,
                                     dtheta_, dz_scratch_.data());
            add_raw_chain(dtheta_, raw.row(i).data(), seeds_.row(i));
        }
    };

    int m = data_.n();
    if (full_batch) {
        for (int i = 0; i < data_.n(); ++i) per_sample_seed(i);
        if (cfg_.variant == EnergyVariant::kPooled &&
            cfg_.coupling == MeanCoupling::kExact) {
            natural_from_raw(raw_bar.data(), theta);
            Vector dtheta_sum = Vector::Zero(family_.theta_dim());
            for (int i = 0; i < data_.n(); ++i) {
                dz_scratch_.setZero();
                family_.discrepancy_grad(data_, i, z.data() + z_off_[i], theta,
                                         dtheta_sum, dz_scratch_.data());
            }
            Eigen::RowVectorXd shared =
                Eigen::RowVectorXd::Zero(family_.theta_dim());
            add_raw_chain(dtheta_sum / data_.n(), raw_bar.data(), shared);
            seeds_.rowwise() += shared;
        }
    } else {
        // Minibatch: the pooled estimate is a frozen snapshot, so only the
        // per-sample terms of the selected rows carry gradient.
        m = static_cast<int>(batch.size());
        for (int i : batch) {
            if (i < 0 || i >= data_.n()) {
                throw std::out_of_range("minibatch index out of range");
            }
            per_sample_seed(i);
        }
    }

    ws_.delta.back() = seeds_;
    net_.backprop_deltas(w, ws_);
    gw.resize(net_.num_weights());
    net_.weight_grad(ws_, gw);
    gw *= -cfg_.lambda * static_cast<double>(data_.n()) / static_cast<double>(m);
    breakdown_from_forward(z);
}

Vector EnergyModel::theta_bar(const Vector& w, const Vector& z) {
    forward(w, z);
    const Eigen::RowVectorXd raw_bar = ws_.act.back().colwise().mean();
    Vector theta(family_.theta_dim());
    natural_from_raw(raw_bar.data(), theta);
    return theta;
}

Matrix EnergyModel::theta_rows(const Vector& w, const Vector& z) {
    forward(w, z);
    const Matrix& raw = ws_.act.back();
    Matrix out(data_.n(), family_.theta_dim());
    Vector theta(family_.theta_dim());
    for (int i = 0; i < data_.n(); ++i) {
        natural_from_raw(raw.row(i).data(), theta);
        out.row(i) = theta.transpose();
    }
    return out;
}

}  // namespace efi
