#include "efi/models.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace efi {

namespace {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
}

double dot_row(const Matrix& X, int row, const Vector& beta, int off, int len) {
    double s = 0.0;
    for (int j = 0; j < len; ++j) s += X(row, j) * beta[off + j];
    return s;
}

// ---------------------------------------------------------------------------
// Linear regression, y = x'beta + sigma * z.

class LinearFamily : public ModelFamily {
public:
    LinearFamily(int p, double sigma, bool sigma_known)
        : p_(p), sigma_(sigma), sigma_known_(sigma_known) {
        if (p < 1) throw std::invalid_argument("linear family needs p >= 1");
    }

    std::string name() const override {
        return sigma_known_ ? "linear_known_sigma" : "linear_unknown_sigma";
    }
    int theta_dim() const override { return sigma_known_ ? p_ : p_ + 1; }
    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (int j = 1; j <= p_; ++j) names.push_back("beta" + std::to_string(j));
        if (!sigma_known_) names.push_back("sigma");
        return names;
    }
    std::vector<bool> log_scale() const override {
        std::vector<bool> f(static_cast<std::size_t>(theta_dim()), false);
        if (!sigma_known_) f.back() = true;
        return f;
    }
    int net_input_dim(const Dataset&) const override { return 1 + p_ + 1; }

    void fill_net_input(const Dataset& data, int row, const double* z,
                        double* input) const override {
        input[0] = data.Y(row, 0);
        for (int j = 0; j < p_; ++j) input[1 + j] = data.X(row, j);
        input[1 + p_] = z[0];
    }
    void add_z_input_grad(const Dataset&, int, const double*,
                          const double* dinput, double* dz) const override {
        dz[0] += dinput[1 + p_];
    }

    double discrepancy(const Dataset& data, int row, const double* z,
                       const Vector& theta) const override {
        const double r = residual(data, row, z, theta);
        return r * r;
    }
    void discrepancy_grad(const Dataset& data, int row, const double* z,
                          const Vector& theta, Vector& dtheta,
                          double* dz) const override {
        const double sigma = sigma_known_ ? sigma_ : theta[p_];
        const double r = residual(data, row, z, theta);
        for (int j = 0; j < p_; ++j) dtheta[j] -= 2.0 * r * data.X(row, j);
        if (!sigma_known_) dtheta[p_] -= 2.0 * r * z[0];
        dz[0] -= 2.0 * r * sigma;
    }

    void forward_model(const double* x, const double* z, const Vector& theta,
                       double* y) const override {
        const double sigma = sigma_known_ ? sigma_ : theta[p_];
        double s = 0.0;
        for (int j = 0; j < p_; ++j) s += x[j] * theta[j];
        y[0] = s + sigma * z[0];
    }

    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(n, p_);
        data.Y.resize(n, 1);
        data.z_truth.resize(n, 1);
        for (int i = 0; i < n; ++i) {
            data.X(i, 0) = 1.0;  // intercept
            for (int j = 1; j < p_; ++j) data.X(i, j) = rng.normal();
        }
        for (int i = 0; i < n; ++i) data.z_truth(i, 0) = rng.normal();
        for (int i = 0; i < n; ++i) {
            forward_model(data.X.row(i).data(), data.z_truth.row(i).data(),
                          theta, &data.Y(i, 0));
        }
        data.theta_truth = theta;
        return data;
    }

    std::vector<std::string> derived_names() const override {
        if (sigma_known_) return {};
        return {"sigma_sq"};
    }
    void derived_values(const Vector& theta, Vector& out) const override {
        if (!sigma_known_) out[0] = theta[p_] * theta[p_];
    }

private:
    int p_;
    double sigma_;
    bool sigma_known_;

    double residual(const Dataset& data, int row, const double* z,
                    const Vector& theta) const {
        const double sigma = sigma_known_ ? sigma_ : theta[p_];
        return data.Y(row, 0) - dot_row(data.X, row, theta, 0, p_) - sigma * z[0];
    }
};

// ---------------------------------------------------------------------------
// Two slightly blended Gaussian bumps plus an exponential decay background:
// y = b1*exp(-b2*x) + b3*exp(-(x-b4)^2/b5^2) + b6*exp(-(x-b7)^2/b8^2) + sigma*z
// with known sigma.  A zero width (b5 or b8 = 0) switches its bump off.

class Gauss2Family : public ModelFamily {
public:
    explicit Gauss2Family(double sigma) : sigma_(sigma) {}

    std::string name() const override { return "gauss2"; }
    int theta_dim() const override { return 8; }
    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (int j = 1; j <= 8; ++j) names.push_back("beta" + std::to_string(j));
        return names;
    }
    int net_input_dim(const Dataset&) const override { return 3; }

    void fill_net_input(const Dataset& data, int row, const double* z,
                        double* input) const override {
        input[0] = data.Y(row, 0);
        input[1] = data.X(row, 0);
        input[2] = z[0];
    }
    void add_z_input_grad(const Dataset&, int, const double*,
                          const double* dinput, double* dz) const override {
        dz[0] += dinput[2];
    }

    double discrepancy(const Dataset& data, int row, const double* z,
                       const Vector& theta) const override {
        const double r = data.Y(row, 0) - mean_at(data.X(row, 0), theta) -
                         sigma_ * z[0];
        return r * r;
    }
    void discrepancy_grad(const Dataset& data, int row, const double* z,
                          const Vector& theta, Vector& dtheta,
                          double* dz) const override {
        const double x = data.X(row, 0);
        double g[8];
        const double m = mean_grad(x, theta, g);
        const double r = data.Y(row, 0) - m - sigma_ * z[0];
        for (int j = 0; j < 8; ++j) dtheta[j] -= 2.0 * r * g[j];
        dz[0] -= 2.0 * r * sigma_;
    }

    void forward_model(const double* x, const double* z, const Vector& theta,
                       double* y) const override {
        y[0] = mean_at(x[0], theta) + sigma_ * z[0];
    }

    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(n, 1);
        data.Y.resize(n, 1);
        data.z_truth.resize(n, 1);
        for (int i = 0; i < n; ++i) data.X(i, 0) = static_cast<double>(i + 1);
        for (int i = 0; i < n; ++i) data.z_truth(i, 0) = rng.normal();
        for (int i = 0; i < n; ++i) {
            data.Y(i, 0) = mean_at(data.X(i, 0), theta) +
                           sigma_ * data.z_truth(i, 0);
        }
        data.theta_truth = theta;
        return data;
    }

private:
    double sigma_;

    static double bump(double x, double c, double width) {
        if (width == 0.0) return 0.0;
        const double u = (x - c) / width;
        return std::exp(-u * u);
    }

    static double mean_at(double x, const Vector& b) {
        return b[0] * std::exp(-b[1] * x) + b[2] * bump(x, b[3], b[4]) +
               b[5] * bump(x, b[6], b[7]);
    }

    // Fills g with d(mean)/d(b_j); returns the mean.
    static double mean_grad(double x, const Vector& b, double* g) {
        const double e1 = std::exp(-b[1] * x);
        g[0] = e1;
        g[1] = -b[0] * x * e1;
        double total = b[0] * e1;
        for (int t = 0; t < 2; ++t) {
            const int o = 2 + 3 * t;  // (amplitude, center, width) block
            const double e = bump(x, b[o + 1], b[o + 2]);
            g[o] = e;
            if (b[o + 2] == 0.0) {
                g[o + 1] = 0.0;
                g[o + 2] = 0.0;
            } else {
                const double dx = x - b[o + 1];
                const double w2 = b[o + 2] * b[o + 2];
                g[o + 1] = b[o] * e * 2.0 * dx / w2;
                g[o + 2] = b[o] * e * 2.0 * dx * dx / (w2 * b[o + 2]);
            }
            total += b[o] * e;
        }
        return total;
    }
};

// ---------------------------------------------------------------------------
// Binary logistic classification through the latent-threshold equation
// y = 1{x'theta > z}, z ~ logistic(0,1), with the hinge discrepancy
// relu((z - x'theta)(2y - 1)).

class LogisticBinaryFamily : public ModelFamily {
public:
    explicit LogisticBinaryFamily(int p) : p_(p) {
        if (p < 1) throw std::invalid_argument("logistic family needs p >= 1");
    }

    std::string name() const override { return "logistic_binary"; }
    int theta_dim() const override { return p_; }
    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (int j = 1; j <= p_; ++j) names.push_back("theta" + std::to_string(j));
        return names;
    }
    ErrorKind error_kind() const override { return ErrorKind::kLogistic; }
    int net_input_dim(const Dataset&) const override { return 1 + p_ + 1; }

    void fill_net_input(const Dataset& data, int row, const double* z,
                        double* input) const override {
        input[0] = data.Y(row, 0);
        for (int j = 0; j < p_; ++j) input[1 + j] = data.X(row, j);
        input[1 + p_] = z[0];
    }
    void add_z_input_grad(const Dataset&, int, const double*,
                          const double* dinput, double* dz) const override {
        dz[0] += dinput[1 + p_];
    }

    double discrepancy(const Dataset& data, int row, const double* z,
                       const Vector& theta) const override {
        const double sign = 2.0 * data.Y(row, 0) - 1.0;
        const double s = dot_row(data.X, row, theta, 0, p_);
        return relu((z[0] - s) * sign);
    }
    void discrepancy_grad(const Dataset& data, int row, const double* z,
                          const Vector& theta, Vector& dtheta,
                          double* dz) const override {
        const double sign = 2.0 * data.Y(row, 0) - 1.0;
        const double s = dot_row(data.X, row, theta, 0, p_);
        if ((z[0] - s) * sign > 0.0) {
            for (int j = 0; j < p_; ++j) dtheta[j] -= sign * data.X(row, j);
            dz[0] += sign;
        }
    }

    void forward_model(const double* x, const double* z, const Vector& theta,
                       double* y) const override {
        double s = 0.0;
        for (int j = 0; j < p_; ++j) s += x[j] * theta[j];
        y[0] = s > z[0] ? 1.0 : 0.0;
    }

    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(n, p_);
        data.Y.resize(n, 1);
        data.z_truth.resize(n, 1);
        for (int i = 0; i < n; ++i) {
            data.X(i, 0) = 1.0;
            for (int j = 1; j < p_; ++j) data.X(i, j) = rng.normal();
        }
        for (int i = 0; i < n; ++i) data.z_truth(i, 0) = rng.logistic();
        for (int i = 0; i < n; ++i) {
            forward_model(data.X.row(i).data(), data.z_truth.row(i).data(),
                          theta, &data.Y(i, 0));
        }
        data.theta_truth = theta;
        return data;
    }

private:
    int p_;
};

// ---------------------------------------------------------------------------
// Multiclass extension: per-class score vectors theta_j, true class must
// dominate every other class and exceed the latent threshold.  The simulator
// assigns y = argmax_j x'theta_j and draws z from the logistic law truncated
// to (-inf, x'theta_y], so the stored truth lies on the zero-energy set.

class LogisticMulticlassFamily : public ModelFamily {
public:
    LogisticMulticlassFamily(int p, int classes) : p_(p), classes_(classes) {
        if (p < 1 || classes < 2) {
            throw std::invalid_argument("multiclass family needs p >= 1, classes >= 2");
        }
    }

    std::string name() const override { return "logistic_multiclass"; }
    int theta_dim() const override { return p_ * classes_; }
    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (int c = 1; c <= classes_; ++c) {
            for (int j = 1; j <= p_; ++j) {
                names.push_back("c" + std::to_string(c) + "theta" + std::to_string(j));
            }
        }
        return names;
    }
    ErrorKind error_kind() const override { return ErrorKind::kLogistic; }
    int net_input_dim(const Dataset&) const override { return 1 + p_ + 1; }

    void fill_net_input(const Dataset& data, int row, const double* z,
                        double* input) const override {
        input[0] = data.Y(row, 0);  // class index as a scalar feature
        for (int j = 0; j < p_; ++j) input[1 + j] = data.X(row, j);
        input[1 + p_] = z[0];
    }
    void add_z_input_grad(const Dataset&, int, const double*,
                          const double* dinput, double* dz) const override {
        dz[0] += dinput[1 + p_];
    }

    double discrepancy(const Dataset& data, int row, const double* z,
                       const Vector& theta) const override {
        const int m = label_at(data, row);
        const double sm = dot_row(data.X, row, theta, m * p_, p_);
        double d = relu(z[0] - sm);
        for (int c = 0; c < classes_; ++c) {
            if (c == m) continue;
            d += relu(dot_row(data.X, row, theta, c * p_, p_) - sm);
        }
        return d;
    }
    void discrepancy_grad(const Dataset& data, int row, const double* z,
                          const Vector& theta, Vector& dtheta,
                          double* dz) const override {
        const int m = label_at(data, row);
        const double sm = dot_row(data.X, row, theta, m * p_, p_);
        for (int c = 0; c < classes_; ++c) {
            if (c == m) continue;
            if (dot_row(data.X, row, theta, c * p_, p_) - sm > 0.0) {
                for (int j = 0; j < p_; ++j) {
                    dtheta[c * p_ + j] += data.X(row, j);
                    dtheta[m * p_ + j] -= data.X(row, j);
                }
            }
        }
        if (z[0] - sm > 0.0) {
            for (int j = 0; j < p_; ++j) dtheta[m * p_ + j] -= data.X(row, j);
            dz[0] += 1.0;
        }
    }

    void forward_model(const double* x, const double*, const Vector& theta,
                       double* y) const override {
        y[0] = static_cast<double>(argmax_class(x, theta));
    }

    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(n, p_);
        data.Y.resize(n, 1);
        data.z_truth.resize(n, 1);
        for (int i = 0; i < n; ++i) {
            data.X(i, 0) = 1.0;
            for (int j = 1; j < p_; ++j) data.X(i, j) = rng.normal();
        }
        for (int i = 0; i < n; ++i) {
            const int m = argmax_class(data.X.row(i).data(), theta);
            data.Y(i, 0) = static_cast<double>(m);
            const double sm = dot_row(data.X, i, theta, m * p_, p_);
            // Inverse-CDF draw from logistic truncated to (-inf, sm].
            const double u = rng.uniform_open();
            const double cap = sigmoid(sm);
            const double q = u * cap;
            data.z_truth(i, 0) = std::log(q / (1.0 - q));
        }
        data.theta_truth = theta;
        return data;
    }

private:
    int p_;
    int classes_;

    int label_at(const Dataset& data, int row) const {
        const int m = static_cast<int>(data.Y(row, 0));
        if (m < 0 || m >= classes_) {
            throw std::out_of_range("class label out of range at row " +
                                    std::to_string(row));
        }
        return m;
    }
    int argmax_class(const double* x, const Vector& theta) const {
        int best = 0;
        double best_s = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < classes_; ++c) {
            double s = 0.0;
            for (int j = 0; j < p_; ++j) s += x[j] * theta[c * p_ + j];
            if (s > best_s) { best_s = s; best = c; }
        }
        return best;
    }
};

// ---------------------------------------------------------------------------
// Semi-supervised binary classification.  Labeled rows behave like the binary
// family with latent u; unlabeled rows carry (u, v) where tanh(v/tau) is a
// soft label in (-1, 1) that both feeds the network and weights the hinge.

class SslLogisticFamily : public ModelFamily {
public:
    SslLogisticFamily(int p, double tau, double labeled_fraction)
        : p_(p), tau_(tau), labeled_fraction_(labeled_fraction) {
        if (p < 1) throw std::invalid_argument("ssl family needs p >= 1");
        if (tau <= 0.0) throw std::invalid_argument("ssl tau must be positive");
    }

    std::string name() const override { return "ssl_logistic"; }
    int theta_dim() const override { return p_; }
    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (int j = 1; j <= p_; ++j) names.push_back("theta" + std::to_string(j));
        return names;
    }
    ErrorKind error_kind() const override { return ErrorKind::kLogistic; }
    int net_input_dim(const Dataset&) const override { return p_ + 2; }
    int z_dim(const Dataset& data, int row) const override {
        return data.is_labeled(row) ? 1 : 2;
    }

    void fill_net_input(const Dataset& data, int row, const double* z,
                        double* input) const override {
        for (int j = 0; j < p_; ++j) input[j] = data.X(row, j);
        input[p_] = z[0];  // u
        input[p_ + 1] = data.is_labeled(row) ? 2.0 * data.Y(row, 0) - 1.0
                                             : std::tanh(z[1] / tau_);
    }
    void add_z_input_grad(const Dataset& data, int row, const double* z,
                          const double* dinput, double* dz) const override {
        dz[0] += dinput[p_];
        if (!data.is_labeled(row)) {
            const double t = std::tanh(z[1] / tau_);
            dz[1] += dinput[p_ + 1] * (1.0 - t * t) / tau_;
        }
    }

    double discrepancy(const Dataset& data, int row, const double* z,
                       const Vector& theta) const override {
        const double s = dot_row(data.X, row, theta, 0, p_);
        const double soft = data.is_labeled(row) ? 2.0 * data.Y(row, 0) - 1.0
                                                 : std::tanh(z[1] / tau_);
        return relu((z[0] - s) * soft);
    }
    void discrepancy_grad(const Dataset& data, int row, const double* z,
                          const Vector& theta, Vector& dtheta,
                          double* dz) const override {
        const double s = dot_row(data.X, row, theta, 0, p_);
        const bool lab = data.is_labeled(row);
        const double soft = lab ? 2.0 * data.Y(row, 0) - 1.0
                                : std::tanh(z[1] / tau_);
        if ((z[0] - s) * soft > 0.0) {
            for (int j = 0; j < p_; ++j) dtheta[j] -= soft * data.X(row, j);
            dz[0] += soft;
            if (!lab) dz[1] += (z[0] - s) * (1.0 - soft * soft) / tau_;
        }
    }

    void forward_model(const double* x, const double* z, const Vector& theta,
                       double* y) const override {
        double s = 0.0;
        for (int j = 0; j < p_; ++j) s += x[j] * theta[j];
        y[0] = s > z[0] ? 1.0 : 0.0;
    }

    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(n, p_);
        data.Y.resize(n, 1);
        data.z_truth.resize(n, 2);
        data.labeled.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            data.X(i, 0) = 1.0;
            for (int j = 1; j < p_; ++j) data.X(i, j) = rng.normal();
        }
        for (int i = 0; i < n; ++i) {
            const double u = rng.logistic();
            double ylab;
            forward_model(data.X.row(i).data(), &u, theta, &ylab);
            const bool lab = rng.uniform01() < labeled_fraction_;
            data.labeled[static_cast<std::size_t>(i)] = lab ? 1 : 0;
            data.Y(i, 0) = lab ? ylab : 0.0;
            data.z_truth(i, 0) = u;
            // Hard soft-label for hidden rows: tanh((2y-1)/tau) = +-1 exactly.
            data.z_truth(i, 1) = lab ? 0.0 : 2.0 * ylab - 1.0;
        }
        data.theta_truth = theta;
        return data;
    }

private:
    int p_;
    double tau_;
    double labeled_fraction_;
};

// ---------------------------------------------------------------------------
// One Gaussian group, y = mu + sigma * z.  Building block for the two-group
// (Behrens-Fisher) analysis, which runs one chain per group.

class NormalGroupFamily : public ModelFamily {
public:
    std::string name() const override { return "normal_group"; }
    int theta_dim() const override { return 2; }
    std::vector<std::string> param_names() const override {
        return {"mu", "sigma"};
    }
    std::vector<bool> log_scale() const override { return {false, true}; }
    int net_input_dim(const Dataset&) const override { return 2; }

    void fill_net_input(const Dataset& data, int row, const double* z,
                        double* input) const override {
        input[0] = data.Y(row, 0);
        input[1] = z[0];
    }
    void add_z_input_grad(const Dataset&, int, const double*,
                          const double* dinput, double* dz) const override {
        dz[0] += dinput[1];
    }

    double discrepancy(const Dataset& data, int row, const double* z,
                       const Vector& theta) const override {
        const double r = data.Y(row, 0) - theta[0] - theta[1] * z[0];
        return r * r;
    }
    void discrepancy_grad(const Dataset& data, int row, const double* z,
                          const Vector& theta, Vector& dtheta,
                          double* dz) const override {
        const double r = data.Y(row, 0) - theta[0] - theta[1] * z[0];
        dtheta[0] -= 2.0 * r;
        dtheta[1] -= 2.0 * r * z[0];
        dz[0] -= 2.0 * r * theta[1];
    }

    void forward_model(const double*, const double* z, const Vector& theta,
                       double* y) const override {
        y[0] = theta[0] + theta[1] * z[0];
    }

    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(n, 0);
        data.Y.resize(n, 1);
        data.z_truth.resize(n, 1);
        for (int i = 0; i < n; ++i) data.z_truth(i, 0) = rng.normal();
        for (int i = 0; i < n; ++i) {
            data.Y(i, 0) = theta[0] + theta[1] * data.z_truth(i, 0);
        }
        data.theta_truth = theta;
        return data;
    }
};

// ---------------------------------------------------------------------------
// Two independent Gaussian groups with unequal variances.  The chain for this
// family is a pair of normal_group runs (see split_groups); this class owns
// simulation, naming, and derived functionals for the combined draws.

class BehrensFisherFamily : public ModelFamily {
public:
    std::string name() const override { return "behrens_fisher"; }
    int theta_dim() const override { return 4; }
    std::vector<std::string> param_names() const override {
        return {"mu1", "sigma1", "mu2", "sigma2"};
    }
    std::vector<bool> log_scale() const override {
        return {false, true, false, true};
    }
    int net_input_dim(const Dataset&) const override { return 2; }
    bool paired_groups() const override { return true; }

    void fill_net_input(const Dataset&, int, const double*, double*) const override {
        throw std::logic_error("behrens_fisher runs as paired per-group chains");
    }
    void add_z_input_grad(const Dataset&, int, const double*, const double*,
                          double*) const override {
        throw std::logic_error("behrens_fisher runs as paired per-group chains");
    }
    double discrepancy(const Dataset&, int, const double*,
                       const Vector&) const override {
        throw std::logic_error("behrens_fisher runs as paired per-group chains");
    }
    void discrepancy_grad(const Dataset&, int, const double*, const Vector&,
                          Vector&, double*) const override {
        throw std::logic_error("behrens_fisher runs as paired per-group chains");
    }

    void forward_model(const double* x, const double* z, const Vector& theta,
                       double* y) const override {
        const int g = x[0] < 0.5 ? 0 : 1;
        y[0] = theta[2 * g] + theta[2 * g + 1] * z[0];
    }

    // n observations per group, 2n rows; column x1 is the group indicator.
    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(2 * n, 1);
        data.Y.resize(2 * n, 1);
        data.z_truth.resize(2 * n, 1);
        for (int i = 0; i < 2 * n; ++i) {
            data.X(i, 0) = i < n ? 0.0 : 1.0;
            data.z_truth(i, 0) = rng.normal();
            forward_model(data.X.row(i).data(), data.z_truth.row(i).data(),
                          theta, &data.Y(i, 0));
        }
        data.theta_truth = theta;
        return data;
    }

    std::vector<std::string> derived_names() const override {
        return {"mu_diff"};
    }
    void derived_values(const Vector& theta, Vector& out) const override {
        out[0] = theta[0] - theta[2];
    }
};

// ---------------------------------------------------------------------------
// Bivariate normal through the triangular decomposition
//   y1 = mu1 + l1 z1,  y2 = mu2 + l2 z1 + l3 z2,
// so sigma1 = l1, sigma2 = sqrt(l2^2 + l3^2), rho = l2 / sigma2.

class BivariateNormalFamily : public ModelFamily {
public:
    std::string name() const override { return "bivariate_normal"; }
    int theta_dim() const override { return 5; }
    std::vector<std::string> param_names() const override {
        return {"mu1", "mu2", "l1", "l2", "l3"};
    }
    std::vector<bool> log_scale() const override {
        return {false, false, true, false, true};
    }
    int y_dim() const override { return 2; }
    int net_input_dim(const Dataset&) const override { return 4; }
    int z_dim(const Dataset&, int) const override { return 2; }

    void fill_net_input(const Dataset& data, int row, const double* z,
                        double* input) const override {
        input[0] = data.Y(row, 0);
        input[1] = data.Y(row, 1);
        input[2] = z[0];
        input[3] = z[1];
    }
    void add_z_input_grad(const Dataset&, int, const double*,
                          const double* dinput, double* dz) const override {
        dz[0] += dinput[2];
        dz[1] += dinput[3];
    }

    double discrepancy(const Dataset& data, int row, const double* z,
                       const Vector& t) const override {
        const double r1 = data.Y(row, 0) - t[0] - t[2] * z[0];
        const double r2 = data.Y(row, 1) - t[1] - t[3] * z[0] - t[4] * z[1];
        return r1 * r1 + r2 * r2;
    }
    void discrepancy_grad(const Dataset& data, int row, const double* z,
                          const Vector& t, Vector& dtheta,
                          double* dz) const override {
        const double r1 = data.Y(row, 0) - t[0] - t[2] * z[0];
        const double r2 = data.Y(row, 1) - t[1] - t[3] * z[0] - t[4] * z[1];
        dtheta[0] -= 2.0 * r1;
        dtheta[1] -= 2.0 * r2;
        dtheta[2] -= 2.0 * r1 * z[0];
        dtheta[3] -= 2.0 * r2 * z[0];
        dtheta[4] -= 2.0 * r2 * z[1];
        dz[0] -= 2.0 * (r1 * t[2] + r2 * t[3]);
        dz[1] -= 2.0 * r2 * t[4];
    }

    void forward_model(const double*, const double* z, const Vector& t,
                       double* y) const override {
        y[0] = t[0] + t[2] * z[0];
        y[1] = t[1] + t[3] * z[0] + t[4] * z[1];
    }

    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(n, 0);
        data.Y.resize(n, 2);
        data.z_truth.resize(n, 2);
        for (int i = 0; i < n; ++i) {
            data.z_truth(i, 0) = rng.normal();
            data.z_truth(i, 1) = rng.normal();
            forward_model(nullptr, data.z_truth.row(i).data(), theta,
                          data.Y.row(i).data());
        }
        data.theta_truth = theta;
        return data;
    }

    std::vector<std::string> derived_names() const override {
        return {"sigma1", "sigma2", "rho"};
    }
    void derived_values(const Vector& t, Vector& out) const override {
        const double s2 = std::sqrt(t[3] * t[3] + t[4] * t[4]);
        out[0] = t[2];
        out[1] = s2;
        out[2] = s2 > 0.0 ? t[3] / s2 : 0.0;
    }
};

// ---------------------------------------------------------------------------
// Mediation model with treatment t, two covariates, and mediator m:
//   m = gamma t + gamma_x' x + sigma_M z_M
//   y = beta_T t + beta m + beta_x' x + sigma_Y z_Y
// Parameter order: (beta_T, beta, beta_x1, beta_x2, sigma_Y,
//                   gamma, gamma_x1, gamma_x2, sigma_M).

class MediationFamily : public ModelFamily {
public:
    std::string name() const override { return "mediation"; }
    int theta_dim() const override { return 9; }
    std::vector<std::string> param_names() const override {
        return {"beta_t", "beta", "beta_x1", "beta_x2", "sigma_y",
                "gamma", "gamma_x1", "gamma_x2", "sigma_m"};
    }
    std::vector<bool> log_scale() const override {
        return {false, false, false, false, true,
                false, false, false, true};
    }
    int y_dim() const override { return 2; }
    int net_input_dim(const Dataset&) const override { return 7; }
    int z_dim(const Dataset&, int) const override { return 2; }

    void fill_net_input(const Dataset& data, int row, const double* z,
                        double* input) const override {
        input[0] = data.Y(row, 0);  // y
        input[1] = data.Y(row, 1);  // m
        input[2] = data.X(row, 0);  // t
        input[3] = data.X(row, 1);
        input[4] = data.X(row, 2);
        input[5] = z[0];  // z_Y
        input[6] = z[1];  // z_M
    }
    void add_z_input_grad(const Dataset&, int, const double*,
                          const double* dinput, double* dz) const override {
        dz[0] += dinput[5];
        dz[1] += dinput[6];
    }

    double discrepancy(const Dataset& data, int row, const double* z,
                       const Vector& t) const override {
        double ry, rm;
        residuals(data, row, z, t, ry, rm);
        return ry * ry + rm * rm;
    }
    void discrepancy_grad(const Dataset& data, int row, const double* z,
                          const Vector& t, Vector& dtheta,
                          double* dz) const override {
        double ry, rm;
        residuals(data, row, z, t, ry, rm);
        const double tt = data.X(row, 0);
        const double x1 = data.X(row, 1);
        const double x2 = data.X(row, 2);
        dtheta[0] -= 2.0 * ry * tt;
        dtheta[1] -= 2.0 * ry * data.Y(row, 1);
        dtheta[2] -= 2.0 * ry * x1;
        dtheta[3] -= 2.0 * ry * x2;
        dtheta[4] -= 2.0 * ry * z[0];
        dtheta[5] -= 2.0 * rm * tt;
        dtheta[6] -= 2.0 * rm * x1;
        dtheta[7] -= 2.0 * rm * x2;
        dtheta[8] -= 2.0 * rm * z[1];
        dz[0] -= 2.0 * ry * t[4];
        dz[1] -= 2.0 * rm * t[8];
    }

    void forward_model(const double* x, const double* z, const Vector& t,
                       double* y) const override {
        const double m = t[5] * x[0] + t[6] * x[1] + t[7] * x[2] + t[8] * z[1];
        y[1] = m;
        y[0] = t[0] * x[0] + t[1] * m + t[2] * x[1] + t[3] * x[2] + t[4] * z[0];
    }

    Dataset simulate(const Vector& theta, int n, CounterRng& rng) const override {
        Dataset data;
        data.X.resize(n, 3);
        data.Y.resize(n, 2);
        data.z_truth.resize(n, 2);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j) data.X(i, j) = rng.normal();
            data.z_truth(i, 0) = rng.normal();
            data.z_truth(i, 1) = rng.normal();
            forward_model(data.X.row(i).data(), data.z_truth.row(i).data(),
                          theta, data.Y.row(i).data());
        }
        data.theta_truth = theta;
        return data;
    }

    std::vector<std::string> derived_names() const override {
        return {"beta_gamma"};
    }
    void derived_values(const Vector& t, Vector& out) const override {
        out[0] = t[1] * t[5];
    }

private:
    void residuals(const Dataset& data, int row, const double* z,
                   const Vector& t, double& ry, double& rm) const {
        const double tt = data.X(row, 0);
        const double x1 = data.X(row, 1);
        const double x2 = data.X(row, 2);
        const double m = data.Y(row, 1);
        ry = data.Y(row, 0) - t[0] * tt - t[1] * m - t[2] * x1 - t[3] * x2 -
             t[4] * z[0];
        rm = m - t[5] * tt - t[6] * x1 - t[7] * x2 - t[8] * z[1];
    }
};

}  // namespace

int ModelFamily::total_z_dim(const Dataset& data) const {
    int total = 0;
    for (int i = 0; i < data.n(); ++i) total += z_dim(data, i);
    return total;
}

std::vector<int> ModelFamily::z_offsets(const Dataset& data) const {
    std::vector<int> off(static_cast<std::size_t>(data.n()) + 1);
    off[0] = 0;
    for (int i = 0; i < data.n(); ++i) off[i + 1] = off[i] + z_dim(data, i);
    return off;
}

std::unique_ptr<ModelFamily> make_linear_known_sigma(int p, double sigma) {
    return std::make_unique<LinearFamily>(p, sigma, true);
}
std::unique_ptr<ModelFamily> make_linear_unknown_sigma(int p) {
    return std::make_unique<LinearFamily>(p, 0.0, false);
}
std::unique_ptr<ModelFamily> make_gauss2(double sigma) {
    return std::make_unique<Gauss2Family>(sigma);
}
std::unique_ptr<ModelFamily> make_logistic_binary(int p) {
    return std::make_unique<LogisticBinaryFamily>(p);
}
std::unique_ptr<ModelFamily> make_logistic_multiclass(int p, int classes) {
    return std::make_unique<LogisticMulticlassFamily>(p, classes);
}
std::unique_ptr<ModelFamily> make_ssl_logistic(int p, double tau,
                                               double labeled_fraction) {
    return std::make_unique<SslLogisticFamily>(p, tau, labeled_fraction);
}
std::unique_ptr<ModelFamily> make_normal_group() {
    return std::make_unique<NormalGroupFamily>();
}
std::unique_ptr<ModelFamily> make_behrens_fisher() {
    return std::make_unique<BehrensFisherFamily>();
}
std::unique_ptr<ModelFamily> make_bivariate_normal() {
    return std::make_unique<BivariateNormalFamily>();
}
std::unique_ptr<ModelFamily> make_mediation() {
    return std::make_unique<MediationFamily>();
}

std::pair<Dataset, Dataset> split_groups(const Dataset& data) {
    if (data.X.cols() < 1) {
        throw std::invalid_argument("two-group split needs a group column");
    }
    std::vector<int> rows[2];
    for (int i = 0; i < data.n(); ++i) {
        rows[data.X(i, 0) < 0.5 ? 0 : 1].push_back(i);
    }
    std::pair<Dataset, Dataset> out;
    Dataset* parts[2] = {&out.first, &out.second};
    for (int g = 0; g < 2; ++g) {
        const int ng = static_cast<int>(rows[g].size());
        if (ng < 2) throw std::invalid_argument("each group needs >= 2 rows");
        Dataset& d = *parts[g];
        d.Y.resize(ng, 1);
        d.X.resize(ng, 0);
        const bool has_truth = data.z_truth.size() > 0;
        if (has_truth) d.z_truth.resize(ng, 1);
        for (int i = 0; i < ng; ++i) {
            d.Y(i, 0) = data.Y(rows[g][static_cast<std::size_t>(i)], 0);
            if (has_truth) {
                d.z_truth(i, 0) = data.z_truth(rows[g][static_cast<std::size_t>(i)], 0);
            }
        }
        if (data.theta_truth.size() == 4) {
            d.theta_truth = data.theta_truth.segment(2 * g, 2);
        }
    }
    return out;
}

Vector analytic_inverse_linear(const Vector& y, const Matrix& X,
                               const Vector& z, double sigma) {
    const Eigen::MatrixXd Xd = X;
    const Vector rhs = Xd.transpose() * (y - sigma * z);
    Eigen::LDLT<Eigen::MatrixXd> solver(Xd.transpose() * Xd);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("analytic inverse: singular design matrix");
    }
    return solver.solve(rhs);
}

namespace {

void format_cell(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

}  // namespace

void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    const bool ssl = !data.labeled.empty();
    const int yd = static_cast<int>(data.Y.cols());
    const int d = static_cast<int>(data.X.cols());
    std::string line;
    if (!ssl) {
        line = "y";
        if (yd > 1) line += ",y2";
    }
    for (int j = 1; j <= d; ++j) {
        if (!line.empty()) line += ",";
        line += "x" + std::to_string(j);
    }
    if (ssl) line += ",label";
    out << line << "\n";
    for (int i = 0; i < data.n(); ++i) {
        line.clear();
        if (!ssl) {
            for (int c = 0; c < yd; ++c) {
                if (c > 0) line += ",";
                format_cell(line, data.Y(i, c));
            }
        }
        for (int j = 0; j < d; ++j) {
            if (!line.empty()) line += ",";
            format_cell(line, data.X(i, j));
        }
        if (ssl) {
            line += ",";
            if (data.is_labeled(i)) format_cell(line, data.Y(i, 0));
        }
        out << line << "\n";
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string header;
    if (!std::getline(in, header)) {
        throw std::runtime_error(path + ": missing header row");
    }
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
    }
    const bool ssl = !cols.empty() && cols.back() == "label";
    int yd = 0;
    if (!ssl) {
        if (cols.empty() || cols[0] != "y") {
            throw std::runtime_error(path + ": header must start with 'y'");
        }
        yd = (cols.size() > 1 && cols[1] == "y2") ? 2 : 1;
    }
    const int d = static_cast<int>(cols.size()) - (ssl ? 1 : yd);
    if (d < 0) throw std::runtime_error(path + ": malformed header");

    std::vector<std::vector<std::string>> raw;
    std::string rowline;
    int lineno = 1;
    while (std::getline(in, rowline)) {
        ++lineno;
        if (rowline.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(rowline);
        std::string tok;
        while (std::getline(ss, tok, ',')) cells.push_back(tok);
        if (rowline.back() == ',') cells.push_back("");
        if (cells.size() != cols.size()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(cols.size()) +
                                     " fields, got " + std::to_string(cells.size()));
        }
        raw.push_back(std::move(cells));
    }

    const int n = static_cast<int>(raw.size());
    Dataset data;
    data.Y.resize(n, ssl ? 1 : yd);
    data.X.resize(n, d);
    if (ssl) data.labeled.resize(static_cast<std::size_t>(n));
    auto parse = [&](const std::string& cell, int line, int col) {
        try {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            if (used != cell.size()) throw std::invalid_argument(cell);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line) +
                                     ": bad numeric field '" + cell +
                                     "' in column " + cols[static_cast<std::size_t>(col)]);
        }
    };
    for (int i = 0; i < n; ++i) {
        const auto& cells = raw[static_cast<std::size_t>(i)];
        const int line = i + 2;
        int c = 0;
        if (!ssl) {
            for (int k = 0; k < yd; ++k, ++c) data.Y(i, k) = parse(cells[c], line, c);
        }
        for (int j = 0; j < d; ++j, ++c) data.X(i, j) = parse(cells[c], line, c);
        if (ssl) {
            const std::string& lab = cells[c];
            if (lab.empty()) {
                data.labeled[static_cast<std::size_t>(i)] = 0;
                data.Y(i, 0) = 0.0;
            } else {
                data.labeled[static_cast<std::size_t>(i)] = 1;
                data.Y(i, 0) = parse(lab, line, c);
            }
        }
    }
    return data;
}

}  // namespace efi
