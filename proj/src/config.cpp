#include "efi/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "efi/special.hpp"

namespace efi {
namespace {

// --- small string utilities -------------------------------------------------

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
    throw ConfigError("invalid value '" + value + "' for key '" + key +
                      "' (expected " + expected + ")");
}

double parse_double(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        bad_value(key, value, "a finite number");
    return v;
}

long long parse_ll(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0') bad_value(key, value, "an integer");
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    const long long v = parse_ll(key, value);
    if (v < -2147483647LL || v > 2147483647LL)
        bad_value(key, value, "a 32-bit integer");
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0' || value.find('-') != std::string::npos)
        bad_value(key, value, "a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    bad_value(key, value, "true or false");
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& value) {
    std::vector<double> out;
    for (const std::string& item : split_list(value))
        out.push_back(parse_double(key, item));
    return out;
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
    std::vector<int> out;
    for (const std::string& item : split_list(value))
        out.push_back(parse_int(key, item));
    return out;
}

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

// --- vocabulary -------------------------------------------------------------

const std::vector<std::string>& family_names() {
    static const std::vector<std::string> names = {
        "linear_known_sigma", "linear_unknown_sigma", "gauss2",
        "logistic",           "logistic_multiclass",  "ssl_logistic",
        "normal_group",       "behrens_fisher",       "bivariate_normal",
        "mediation"};
    return names;
}

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {
        "efi",  "ols",  "efd",  "gfi_ar",
        "welch", "hsu_scheffe", "behrens_fisher_mc",
        "sobel", "maxp", "bivariate_fiducial"};
    return names;
}

bool contains(const std::vector<std::string>& names, const std::string& s) {
    return std::find(names.begin(), names.end(), s) != names.end();
}

MeanCoupling coupling_from_string(const std::string& key,
                                  const std::string& value) {
    if (value == "exact") return MeanCoupling::kExact;
    if (value == "frozen_mean") return MeanCoupling::kFrozenMean;
    bad_value(key, value, "exact or frozen_mean");
}

std::string to_string(MeanCoupling c) {
    return c == MeanCoupling::kExact ? "exact" : "frozen_mean";
}

GfiNorm gfi_norm_from_string(const std::string& key, const std::string& value) {
    if (value == "l2") return GfiNorm::kL2;
    if (value == "linf") return GfiNorm::kLinf;
    bad_value(key, value, "l2 or linf");
}

std::string to_string(GfiNorm norm) {
    return norm == GfiNorm::kL2 ? "l2" : "linf";
}

}  // namespace

// --- key application ---------------------------------------------------------

void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
    if (key.empty()) throw ConfigError("empty key");
    if (value.empty()) throw ConfigError("empty value for key '" + key + "'");

    if (key == "preset") {
        cfg = preset_config(value);  // later lines override preset fields
        return;
    }

    if (key == "family.name") {
        if (!contains(family_names(), value))
            bad_value(key, value, "one of " + join(family_names()));
        cfg.family.name = value;
    } else if (key == "family.p") {
        cfg.family.p = parse_int(key, value);
    } else if (key == "family.sigma") {
        cfg.family.sigma = parse_double(key, value);
    } else if (key == "family.classes") {
        cfg.family.classes = parse_int(key, value);
    } else if (key == "family.tau") {
        cfg.family.tau = parse_double(key, value);
    } else if (key == "family.labeled_fraction") {
        cfg.family.labeled_fraction = parse_double(key, value);
    } else if (key == "family.outlier_count") {
        cfg.family.outlier_count = parse_int(key, value);
    } else if (key == "family.outlier_shift") {
        cfg.family.outlier_shift = parse_double(key, value);
    } else if (key == "truth") {
        cfg.truth = parse_double_list(key, value);
    } else if (key == "n") {
        cfg.n = parse_int(key, value);
    } else if (key == "replicates") {
        cfg.replicates = parse_int(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_u64(key, value);
    } else if (key == "level") {
        cfg.level = parse_double(key, value);
    } else if (key == "mc_draws") {
        cfg.mc_draws = parse_int(key, value);
    } else if (key == "methods") {
        std::vector<std::string> methods = split_list(value);
        for (const std::string& m : methods)
            if (!contains(method_names(), m))
                bad_value(key, m, "one of " + join(method_names()));
        cfg.methods = std::move(methods);
    } else if (key == "net.hidden") {
        cfg.net.hidden = parse_int_list(key, value);
    } else if (key == "net.activation") {
        if (value != "relu" && value != "tanh" && value != "sigmoid" &&
            value != "softplus")
            bad_value(key, value, "relu, tanh, sigmoid, or softplus");
        cfg.net.activation = value;
    } else if (key == "energy.variant") {
        try {
            cfg.energy.variant = energy_variant_from_string(value);
        } catch (const std::exception&) {
            bad_value(key, value, "efi_default or efi_a");
        }
    } else if (key == "energy.coupling") {
        cfg.energy.coupling = coupling_from_string(key, value);
    } else if (key == "energy.eta") {
        cfg.energy.eta = parse_double(key, value);
    } else if (key == "energy.lambda") {
        cfg.energy.lambda = parse_double(key, value);
    } else if (key == "schedule.C_eps") {
        cfg.schedule.first.C_eps = parse_double(key, value);
    } else if (key == "schedule.c_eps") {
        cfg.schedule.first.c_eps = parse_double(key, value);
    } else if (key == "schedule.alpha") {
        cfg.schedule.first.alpha = parse_double(key, value);
    } else if (key == "schedule.C_gamma") {
        cfg.schedule.first.C_gamma = parse_double(key, value);
    } else if (key == "schedule.c_gamma") {
        cfg.schedule.first.c_gamma = parse_double(key, value);
    } else if (key == "schedule.beta") {
        cfg.schedule.first.beta = parse_double(key, value);
    } else if (key == "schedule.phase2.start") {
        cfg.schedule.two_phase = true;
        cfg.schedule.second.start = parse_ll(key, value);
    } else if (key == "schedule.phase2.C_eps") {
        cfg.schedule.two_phase = true;
        cfg.schedule.second.C_eps = parse_double(key, value);
    } else if (key == "schedule.phase2.c_eps") {
        cfg.schedule.two_phase = true;
        cfg.schedule.second.c_eps = parse_double(key, value);
    } else if (key == "schedule.phase2.alpha") {
        cfg.schedule.two_phase = true;
        cfg.schedule.second.alpha = parse_double(key, value);
    } else if (key == "schedule.phase2.C_gamma") {
        cfg.schedule.two_phase = true;
        cfg.schedule.second.C_gamma = parse_double(key, value);
    } else if (key == "schedule.phase2.c_gamma") {
        cfg.schedule.two_phase = true;
        cfg.schedule.second.c_gamma = parse_double(key, value);
    } else if (key == "schedule.phase2.beta") {
        cfg.schedule.two_phase = true;
        cfg.schedule.second.beta = parse_double(key, value);
    } else if (key == "sampler.kind") {
        try {
            cfg.sampler.kind = sampler_kind_from_string(value);
        } catch (const std::exception&) {
            bad_value(key, value, "sgld or sghmc");
        }
    } else if (key == "sampler.zeta") {
        cfg.sampler.zeta = parse_double(key, value);
    } else if (key == "sampler.tau") {
        cfg.sampler.tau = parse_double(key, value);
    } else if (key == "sampler.tempering") {
        if (value == "constant")
            cfg.sampler.geometric_tempering = false;
        else if (value == "geometric")
            cfg.sampler.geometric_tempering = true;
        else
            bad_value(key, value, "constant or geometric");
    } else if (key == "sampler.tau0") {
        cfg.sampler.tau0 = parse_double(key, value);
    } else if (key == "sampler.tau_decay") {
        cfg.sampler.tau_decay = parse_double(key, value);
    } else if (key == "sampler.tau_floor") {
        cfg.sampler.tau_floor = parse_double(key, value);
    } else if (key == "sampler.lambda_start") {
        cfg.sampler.lambda_start = parse_double(key, value);
    } else if (key == "sampler.lambda_ramp") {
        cfg.sampler.lambda_ramp = parse_ll(key, value);
    } else if (key == "prior.flat") {
        cfg.prior.flat = parse_bool(key, value);
    } else if (key == "prior.rho") {
        cfg.prior.rho = parse_double(key, value);
    } else if (key == "prior.sigma0") {
        cfg.prior.sigma0 = parse_double(key, value);
    } else if (key == "prior.sigma1") {
        cfg.prior.sigma1 = parse_double(key, value);
    } else if (key == "run.burnin") {
        cfg.run.burn_in = parse_ll(key, value);
    } else if (key == "run.iters") {
        cfg.run.iters = parse_ll(key, value);
    } else if (key == "run.thin") {
        cfg.run.thin = parse_int(key, value);
    } else if (key == "run.batch") {
        cfg.run.batch = parse_int(key, value);
    } else if (key == "run.trace_every") {
        cfg.run.trace_every = parse_int(key, value);
    } else if (key == "run.divergence_energy") {
        cfg.run.divergence_energy = parse_double(key, value);
    } else if (key == "gfi.eps") {
        cfg.gfi.eps = parse_double(key, value);
    } else if (key == "gfi.norm") {
        cfg.gfi.norm = gfi_norm_from_string(key, value);
    } else if (key == "gfi.proposals") {
        cfg.gfi.proposals = parse_ll(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

// --- parsing ------------------------------------------------------------------

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_config_key(cfg, key, value);
        } catch (const ConfigError& err) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": " +
                              err.what());
        }
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

// --- validation ----------------------------------------------------------------

void validate_config(const ExperimentConfig& cfg) {
    const FamilySpec& f = cfg.family;
    if (!contains(family_names(), f.name))
        throw ConfigError("unknown family '" + f.name + "'");
    if (f.p < 1) throw ConfigError("family.p must be >= 1");
    if (f.sigma <= 0.0) throw ConfigError("family.sigma must be positive");
    if (f.classes < 2) throw ConfigError("family.classes must be >= 2");
    if (f.tau <= 0.0) throw ConfigError("family.tau must be positive");
    if (f.labeled_fraction < 0.0 || f.labeled_fraction > 1.0)
        throw ConfigError("family.labeled_fraction must lie in [0, 1]");
    if (f.outlier_count < 0)
        throw ConfigError("family.outlier_count must be nonnegative");

    if (cfg.n < 0) throw ConfigError("n must be nonnegative");
    if (f.outlier_count > cfg.n)
        throw ConfigError("family.outlier_count cannot exceed n");
    if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
    if (cfg.level <= 0.0 || cfg.level >= 1.0)
        throw ConfigError("level must lie in (0, 1)");
    if (cfg.mc_draws < 2) throw ConfigError("mc_draws must be >= 2");

    if (cfg.methods.empty()) throw ConfigError("methods must be nonempty");
    for (const std::string& m : cfg.methods) {
        if (!contains(method_names(), m))
            throw ConfigError("unknown method '" + m + "'");
        const bool linear = f.name == "linear_known_sigma" ||
                            f.name == "linear_unknown_sigma";
        if ((m == "ols" || m == "efd") && !linear)
            throw ConfigError("method '" + m + "' needs a linear family");
        if (m == "gfi_ar" && f.name != "linear_known_sigma")
            throw ConfigError("method 'gfi_ar' needs family linear_known_sigma");
        if ((m == "welch" || m == "hsu_scheffe" || m == "behrens_fisher_mc") &&
            f.name != "behrens_fisher")
            throw ConfigError("method '" + m + "' needs family behrens_fisher");
        if (m == "bivariate_fiducial" && f.name != "bivariate_normal")
            throw ConfigError(
                "method 'bivariate_fiducial' needs family bivariate_normal");
        if ((m == "sobel" || m == "maxp") && f.name != "mediation")
            throw ConfigError("method '" + m + "' needs family mediation");
    }

    if (!cfg.truth.empty()) {
        const auto family = build_family(cfg);
        const int want = family->theta_dim();
        if (static_cast<int>(cfg.truth.size()) != want)
            throw ConfigError("truth has " + std::to_string(cfg.truth.size()) +
                              " entries; family " + f.name + " needs " +
                              std::to_string(want));
    }

    if (cfg.net.hidden.empty())
        throw ConfigError("net.hidden must list at least one layer width");
    for (int h : cfg.net.hidden)
        if (h < 1) throw ConfigError("net.hidden widths must be >= 1");

    if (cfg.energy.eta < 0.0) throw ConfigError("energy.eta must be nonnegative");
    if (cfg.energy.lambda < 0.0)
        throw ConfigError("energy.lambda must be nonnegative");

    try {
        build_schedule(cfg);
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("schedule: ") + err.what());
    }

    const SamplerSpec& s = cfg.sampler;
    if (s.zeta <= 0.0 || s.zeta > 1.0)
        throw ConfigError("sampler.zeta must lie in (0, 1]");
    if (s.tau <= 0.0) throw ConfigError("sampler.tau must be positive");
    if (s.tau0 <= 0.0) throw ConfigError("sampler.tau0 must be positive");
    if (s.tau_decay <= 0.0 || s.tau_decay >= 1.0)
        throw ConfigError("sampler.tau_decay must lie in (0, 1)");
    if (s.tau_floor <= 0.0) throw ConfigError("sampler.tau_floor must be positive");
    if (s.lambda_ramp < 0) throw ConfigError("sampler.lambda_ramp must be >= 0");

    const MixturePrior& pr = cfg.prior;
    if (pr.rho < 0.0 || pr.rho > 1.0)
        throw ConfigError("prior.rho must lie in [0, 1]");
    if (pr.sigma0 <= 0.0 || pr.sigma1 <= 0.0)
        throw ConfigError("prior scales must be positive");

    const RunSpec& r = cfg.run;
    if (r.burn_in < 0 || r.iters < 0)
        throw ConfigError("run.burnin and run.iters must be nonnegative");
    if (r.thin < 1) throw ConfigError("run.thin must be >= 1");
    if (r.batch < 0) throw ConfigError("run.batch must be nonnegative");
    if (r.trace_every < 0) throw ConfigError("run.trace_every must be >= 0");
    if (r.divergence_energy <= 0.0)
        throw ConfigError("run.divergence_energy must be positive");

    if (cfg.gfi.eps <= 0.0) throw ConfigError("gfi.eps must be positive");
    if (cfg.gfi.proposals < 1) throw ConfigError("gfi.proposals must be >= 1");
}

// --- serialization ---------------------------------------------------------------

std::string config_to_text(const ExperimentConfig& cfg) {
    std::string out;
    auto emit = [&out](const std::string& key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += "\n";
    };
    if (!cfg.preset_name.empty()) emit("preset", cfg.preset_name);

    emit("family.name", cfg.family.name);
    emit("family.p", std::to_string(cfg.family.p));
    emit("family.sigma", format_double(cfg.family.sigma));
    emit("family.classes", std::to_string(cfg.family.classes));
    emit("family.tau", format_double(cfg.family.tau));
    emit("family.labeled_fraction", format_double(cfg.family.labeled_fraction));
    emit("family.outlier_count", std::to_string(cfg.family.outlier_count));
    emit("family.outlier_shift", format_double(cfg.family.outlier_shift));

    if (!cfg.truth.empty()) {
        std::vector<std::string> items;
        for (double v : cfg.truth) items.push_back(format_double(v));
        emit("truth", join(items));
    }
    emit("n", std::to_string(cfg.n));
    emit("replicates", std::to_string(cfg.replicates));
    emit("seed", std::to_string(cfg.seed));
    emit("level", format_double(cfg.level));
    emit("mc_draws", std::to_string(cfg.mc_draws));
    emit("methods", join(cfg.methods));

    {
        std::vector<std::string> items;
        for (int h : cfg.net.hidden) items.push_back(std::to_string(h));
        emit("net.hidden", join(items));
    }
    emit("net.activation", cfg.net.activation);

    emit("energy.variant", to_string(cfg.energy.variant));
    emit("energy.coupling", to_string(cfg.energy.coupling));
    emit("energy.eta", format_double(cfg.energy.eta));
    emit("energy.lambda", format_double(cfg.energy.lambda));

    const SchedulePiece& p1 = cfg.schedule.first;
    emit("schedule.C_eps", format_double(p1.C_eps));
    emit("schedule.c_eps", format_double(p1.c_eps));
    emit("schedule.alpha", format_double(p1.alpha));
    emit("schedule.C_gamma", format_double(p1.C_gamma));
    emit("schedule.c_gamma", format_double(p1.c_gamma));
    emit("schedule.beta", format_double(p1.beta));
    if (cfg.schedule.two_phase) {
        const SchedulePiece& p2 = cfg.schedule.second;
        emit("schedule.phase2.start", std::to_string(p2.start));
        emit("schedule.phase2.C_eps", format_double(p2.C_eps));
        emit("schedule.phase2.c_eps", format_double(p2.c_eps));
        emit("schedule.phase2.alpha", format_double(p2.alpha));
        emit("schedule.phase2.C_gamma", format_double(p2.C_gamma));
        emit("schedule.phase2.c_gamma", format_double(p2.c_gamma));
        emit("schedule.phase2.beta", format_double(p2.beta));
    }

    const SamplerSpec& s = cfg.sampler;
    emit("sampler.kind", to_string(s.kind));
    emit("sampler.zeta", format_double(s.zeta));
    emit("sampler.tau", format_double(s.tau));
    emit("sampler.tempering", s.geometric_tempering ? "geometric" : "constant");
    emit("sampler.tau0", format_double(s.tau0));
    emit("sampler.tau_decay", format_double(s.tau_decay));
    emit("sampler.tau_floor", format_double(s.tau_floor));
    emit("sampler.lambda_start", format_double(s.lambda_start));
    emit("sampler.lambda_ramp", std::to_string(s.lambda_ramp));

    emit("prior.flat", cfg.prior.flat ? "true" : "false");
    emit("prior.rho", format_double(cfg.prior.rho));
    emit("prior.sigma0", format_double(cfg.prior.sigma0));
    emit("prior.sigma1", format_double(cfg.prior.sigma1));

    emit("run.burnin", std::to_string(cfg.run.burn_in));
    emit("run.iters", std::to_string(cfg.run.iters));
    emit("run.thin", std::to_string(cfg.run.thin));
    emit("run.batch", std::to_string(cfg.run.batch));
    emit("run.trace_every", std::to_string(cfg.run.trace_every));
    emit("run.divergence_energy", format_double(cfg.run.divergence_energy));

    emit("gfi.eps", format_double(cfg.gfi.eps));
    emit("gfi.norm", to_string(cfg.gfi.norm));
    emit("gfi.proposals", std::to_string(cfg.gfi.proposals));
    return out;
}

// --- presets ------------------------------------------------------------------

namespace {

void set_schedule(ExperimentConfig& cfg, double C_eps, double c_eps,
                  double C_gamma, double c_gamma) {
    cfg.schedule.first.C_eps = C_eps;
    cfg.schedule.first.c_eps = c_eps;
    cfg.schedule.first.C_gamma = C_gamma;
    cfg.schedule.first.c_gamma = c_gamma;
}

void set_exponents(ExperimentConfig& cfg, double alpha, double beta) {
    cfg.schedule.first.alpha = alpha;
    cfg.schedule.first.beta = beta;
}

void set_run(ExperimentConfig& cfg, long long burn_in, long long iters,
             int thin) {
    cfg.run.burn_in = burn_in;
    cfg.run.iters = iters;
    cfg.run.thin = thin;
}

void use_sghmc(ExperimentConfig& cfg, double zeta) {
    cfg.sampler.kind = SamplerKind::kSghmc;
    cfg.sampler.zeta = zeta;
}

// Ten-coefficient regression with five active and five null coordinates.
ExperimentConfig linear_known_preset() {
    ExperimentConfig cfg;  // struct defaults carry this reference setup
    cfg.truth = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    cfg.energy.eta = 10.0;
    cfg.energy.lambda = 10.0;
    cfg.methods = {"efi", "ols", "efd"};
    return cfg;
}

// Same regression with the per-sample energy variant.
ExperimentConfig linear_known_a_preset() {
    ExperimentConfig cfg = linear_known_preset();
    cfg.energy.variant = EnergyVariant::kPerSample;
    cfg.energy.eta = 100.0;
    return cfg;
}

ExperimentConfig linear_unknown_preset(double eta, double lambda, double zeta,
                                       double C_eps, double C_gamma,
                                       long long iters, int thin) {
    ExperimentConfig cfg;
    cfg.family.name = "linear_unknown_sigma";
    cfg.truth = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
    cfg.energy.eta = eta;
    cfg.energy.lambda = lambda;
    use_sghmc(cfg, zeta);
    set_exponents(cfg, 4.0 / 7.0, 4.0 / 7.0);
    const double c = (eta == 4.0) ? 80000.0 : 100000.0;
    set_schedule(cfg, C_eps, c, C_gamma, c);
    set_run(cfg, 10000, iters, thin);
    cfg.methods = {"efi", "ols", "efd"};
    return cfg;
}

ExperimentConfig behrens_fisher_preset(double var1, int n, double zeta,
                                       double C_eps, double C_gamma) {
    ExperimentConfig cfg;
    cfg.family.name = "behrens_fisher";
    cfg.truth = {1.0, std::sqrt(var1), 0.0, 1.0};
    cfg.n = n;  // per group
    cfg.net.hidden = {20, 10};
    cfg.energy.eta = 5.0;
    cfg.energy.lambda = 20.0;
    use_sghmc(cfg, zeta);
    set_exponents(cfg, 4.0 / 7.0, 4.0 / 7.0);
    set_schedule(cfg, C_eps, 100000.0, C_gamma, 100000.0);
    if (n == 50)
        set_run(cfg, 10000, 40000, 4);
    else
        set_run(cfg, 10000, 60000, 6);
    cfg.methods = {"efi", "welch", "hsu_scheffe", "behrens_fisher_mc"};
    return cfg;
}

ExperimentConfig bivariate_preset() {
    ExperimentConfig cfg;
    cfg.family.name = "bivariate_normal";
    // (mu1, mu2, l1, l2, l3): unit variances with correlation 1/2.
    cfg.truth = {1.0, 0.0, 1.0, 0.5, std::sqrt(3.0) / 2.0};
    cfg.n = 100;
    cfg.net.hidden = {80, 20};
    cfg.energy.eta = 2.0;
    cfg.energy.lambda = 50.0;
    use_sghmc(cfg, 0.1);
    set_exponents(cfg, 4.0 / 7.0, 4.0 / 7.0);
    set_schedule(cfg, 4500.0, 100000.0, 1100.0, 100000.0);
    set_run(cfg, 10000, 50000, 5);
    cfg.methods = {"efi", "bivariate_fiducial"};
    return cfg;
}

// Contaminated regression: the last tenth of the sample has latent errors
// shifted by +4; the chain anneals the temperature down geometrically.
ExperimentConfig outlier_preset() {
    ExperimentConfig cfg;
    cfg.family.name = "linear_unknown_sigma";
    cfg.truth = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
    cfg.n = 600;
    cfg.family.outlier_count = 60;
    cfg.family.outlier_shift = 4.0;
    cfg.energy.eta = 2.0;
    cfg.energy.lambda = 50.0;
    cfg.sampler.geometric_tempering = true;
    cfg.sampler.tau0 = 100.0;
    cfg.sampler.tau_decay = 0.9999;
    cfg.sampler.tau_floor = 1.0;
    set_schedule(cfg, 5e7, 1e7, 50.0, 10000.0);
    set_run(cfg, 50000, 150000, 15);
    cfg.methods = {"efi"};
    return cfg;
}

// Exponential-plus-two-bumps curve fit on a fixed grid; the step sizes switch
// to a faster second phase halfway through burn-in.
ExperimentConfig gauss2_preset() {
    ExperimentConfig cfg;
    cfg.family.name = "gauss2";
    cfg.family.sigma = 2.5;
    cfg.truth = {99.0183, 0.0110,  101.8802, 107.0310,
                 23.5786, 72.0456, 153.2701, 19.5260};
    cfg.n = 250;
    cfg.net.hidden = {150, 50};
    cfg.energy.eta = 500.0;
    cfg.energy.lambda = 0.2;
    set_schedule(cfg, 1.0, 1e7, 1.0, 100.0);
    cfg.schedule.two_phase = true;
    cfg.schedule.second.start = 50000;
    cfg.schedule.second.C_eps = 1000.0;
    cfg.schedule.second.c_eps = 100000.0;
    cfg.schedule.second.C_gamma = 10.0;
    cfg.schedule.second.c_gamma = 10000.0;
    set_run(cfg, 60000, 150000, 15);
    cfg.methods = {"efi"};
    return cfg;
}

ExperimentConfig logistic_preset() {
    ExperimentConfig cfg;
    cfg.family.name = "logistic";
    cfg.family.p = 5;
    cfg.truth = {1, 1, 1, -1, -1};
    cfg.n = 1000;
    cfg.net.hidden = {90, 30};
    cfg.energy.eta = 2.0;
    cfg.energy.lambda = 1000.0;
    use_sghmc(cfg, 0.01);
    set_exponents(cfg, 2.0 / 7.0, 2.0 / 7.0);
    set_schedule(cfg, 50000.0, 100000.0, 30000.0, 100000.0);
    set_run(cfg, 10000, 50000, 5);
    cfg.methods = {"efi"};
    return cfg;
}

// Semi-supervised binary classification with half the labels removed.  The
// named variants carry the per-dataset tuning; their sizes and feature
// counts match the benchmark tables, with synthetic stand-in truths.
ExperimentConfig ssl_preset(int p, int n, double eta, double lambda,
                            double C_eps, double C_gamma) {
    ExperimentConfig cfg;
    cfg.family.name = "ssl_logistic";
    cfg.family.p = p;
    cfg.family.tau = 0.02;
    cfg.family.labeled_fraction = 0.5;
    cfg.truth.assign(static_cast<std::size_t>(p), 1.0);
    for (int j = 1; j < p; j += 2) cfg.truth[static_cast<std::size_t>(j)] = -1.0;
    cfg.n = n;
    cfg.net.hidden = {90, 30};
    cfg.energy.eta = eta;
    cfg.energy.lambda = lambda;
    use_sghmc(cfg, 0.1);
    set_exponents(cfg, 2.0 / 7.0, 2.0 / 7.0);
    set_schedule(cfg, C_eps, 100000.0, C_gamma, 100000.0);
    set_run(cfg, 10000, 40000, 4);
    cfg.methods = {"efi"};
    return cfg;
}

ExperimentConfig mediation_preset(double beta, double gamma, int n,
                                  double zeta, double C_eps, double C_gamma) {
    ExperimentConfig cfg;
    cfg.family.name = "mediation";
    cfg.truth = {1.0, beta, 0.2, 0.4, std::sqrt(2.0), gamma, 0.4, 0.6, 1.0};
    cfg.n = n;
    cfg.net.hidden = {180, 30};
    cfg.energy.eta = 10.0;
    cfg.energy.lambda = 10.0;
    use_sghmc(cfg, zeta);
    set_exponents(cfg, 4.0 / 7.0, 4.0 / 7.0);
    set_schedule(cfg, C_eps, 100000.0, C_gamma, 100000.0);
    set_run(cfg, 10000, 50000, 5);
    cfg.methods = {"efi", "sobel", "maxp"};
    return cfg;
}

const std::vector<std::pair<std::string, ExperimentConfig>>& preset_table() {
    static const std::vector<std::pair<std::string, ExperimentConfig>> table =
        [] {
            std::vector<std::pair<std::string, ExperimentConfig>> t;
            t.emplace_back("linear_known_sigma", linear_known_preset());
            t.emplace_back("linear_known_sigma_a", linear_known_a_preset());
            t.emplace_back("linear_unknown_eta2_lambda30",
                           linear_unknown_preset(2, 30, 0.025, 6500, 1700,
                                                 50000, 5));
            t.emplace_back("linear_unknown_eta2_lambda40",
                           linear_unknown_preset(2, 40, 0.025, 5600, 1400,
                                                 90000, 9));
            t.emplace_back("linear_unknown_eta2_lambda50",
                           linear_unknown_preset(2, 50, 0.05, 4000, 1000,
                                                 200000, 20));
            t.emplace_back("linear_unknown_eta4_lambda50",
                           linear_unknown_preset(4, 50, 0.005, 1950, 490,
                                                 120000, 12));
            t.emplace_back("bf_unequal_var_n50",
                           behrens_fisher_preset(0.25, 50, 0.01, 2500, 2500));
            t.emplace_back("bf_unequal_var_n500",
                           behrens_fisher_preset(0.25, 500, 0.005, 3000, 3000));
            t.emplace_back("bf_equal_var_n50",
                           behrens_fisher_preset(1.0, 50, 0.05, 2800, 2800));
            t.emplace_back("bf_equal_var_n500",
                           behrens_fisher_preset(1.0, 500, 0.028, 3100, 3100));
            t.emplace_back("bivariate_normal", bivariate_preset());
            t.emplace_back("outlier_tempered", outlier_preset());
            t.emplace_back("gauss2", gauss2_preset());
            t.emplace_back("logistic", logistic_preset());
            t.emplace_back("ssl_default", ssl_preset(5, 200, 5, 200, 1e5, 2000));
            t.emplace_back("ssl_divorce",
                           ssl_preset(54, 170, 10.0 / 3.0, 300, 1e5, 2000));
            t.emplace_back("ssl_diabetes",
                           ssl_preset(16, 520, 2, 500, 2e5, 1000));
            t.emplace_back("ssl_breast_cancer",
                           ssl_preset(9, 699, 5, 200, 1e5, 2000));
            t.emplace_back("ssl_raisin", ssl_preset(7, 900, 2, 500, 1e5, 2000));

            // Null-product cases: (beta, gamma) with at least one zero.
            const double null_cases[3][2] = {{0.2, 0.0}, {0.0, 0.2}, {0.0, 0.0}};
            struct MedRow { int n; int c; double zeta, C_eps, C_gamma; };
            const MedRow rows[] = {
                {500, 1, 0.1, 290000, 4000}, {500, 2, 0.1, 100000, 2000},
                {500, 3, 0.1, 100000, 2000}, {1000, 1, 0.1, 100000, 4000},
                {1000, 2, 1.0, 200000, 4000}, {1000, 3, 0.1, 2000, 1000},
                {2000, 1, 1.0, 200000, 4000}, {2000, 2, 1.0, 200000, 4000},
                {2000, 3, 0.1, 2000, 1000},
            };
            for (const MedRow& r : rows)
                t.emplace_back("mediation_n" + std::to_string(r.n) + "_case" +
                                   std::to_string(r.c),
                               mediation_preset(null_cases[r.c - 1][0],
                                                null_cases[r.c - 1][1], r.n,
                                                r.zeta, r.C_eps, r.C_gamma));

            // Alternative cases share one tuning across sample sizes.
            const double alt_cases[3][2] = {{0.1, 0.4}, {-0.1, 0.4}, {0.2, 0.2}};
            for (int n : {500, 1000, 2000})
                for (int c = 1; c <= 3; ++c)
                    t.emplace_back(
                        "mediation_power_n" + std::to_string(n) + "_case" +
                            std::to_string(c),
                        mediation_preset(alt_cases[c - 1][0], alt_cases[c - 1][1],
                                         n, 0.1, 2000, 1000));
            return t;
        }();
    return table;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& entry : preset_table()) names.push_back(entry.first);
    return names;
}

bool is_preset(const std::string& name) {
    for (const auto& entry : preset_table())
        if (entry.first == name) return true;
    return false;
}

ExperimentConfig preset_config(const std::string& name) {
    for (const auto& entry : preset_table()) {
        if (entry.first == name) {
            ExperimentConfig cfg = entry.second;
            cfg.preset_name = name;
            return cfg;
        }
    }
    throw ConfigError("unknown preset '" + name + "' (see the presets command)");
}

// --- experiment drivers ---------------------------------------------------------

std::unique_ptr<ModelFamily> build_family(const ExperimentConfig& cfg) {
    const FamilySpec& f = cfg.family;
    if (f.name == "linear_known_sigma")
        return make_linear_known_sigma(f.p, f.sigma);
    if (f.name == "linear_unknown_sigma") return make_linear_unknown_sigma(f.p);
    if (f.name == "gauss2") return make_gauss2(f.sigma);
    if (f.name == "logistic") return make_logistic_binary(f.p);
    if (f.name == "logistic_multiclass")
        return make_logistic_multiclass(f.p, f.classes);
    if (f.name == "ssl_logistic")
        return make_ssl_logistic(f.p, f.tau, f.labeled_fraction);
    if (f.name == "normal_group") return make_normal_group();
    if (f.name == "behrens_fisher") return make_behrens_fisher();
    if (f.name == "bivariate_normal") return make_bivariate_normal();
    if (f.name == "mediation") return make_mediation();
    throw ConfigError("unknown family '" + f.name + "'");
}

Vector truth_vector(const ExperimentConfig& cfg, const ModelFamily& family) {
    if (cfg.truth.empty())
        throw ConfigError("family " + family.name() +
                          " needs 'truth' to simulate");
    if (static_cast<int>(cfg.truth.size()) != family.theta_dim())
        throw ConfigError("truth has " + std::to_string(cfg.truth.size()) +
                          " entries; family " + family.name() + " needs " +
                          std::to_string(family.theta_dim()));
    Vector theta(family.theta_dim());
    for (int j = 0; j < theta.size(); ++j)
        theta[j] = cfg.truth[static_cast<std::size_t>(j)];
    return theta;
}

DenseNet build_net(const ExperimentConfig& cfg, const ModelFamily& family,
                   const Dataset& data) {
    std::vector<int> shape;
    shape.push_back(family.net_input_dim(data));
    shape.insert(shape.end(), cfg.net.hidden.begin(), cfg.net.hidden.end());
    // Paired two-group families train one per-group network with half the
    // parameters (mu, sigma) as outputs.
    shape.push_back(family.paired_groups() ? family.theta_dim() / 2
                                           : family.theta_dim());
    return DenseNet(shape, activation_from_string(cfg.net.activation));
}

Schedule build_schedule(const ExperimentConfig& cfg) {
    SchedulePiece first = cfg.schedule.first;
    first.start = 1;
    if (!cfg.schedule.two_phase) return Schedule({first});
    return Schedule({first, cfg.schedule.second});
}

TemperingPlan build_tempering(const ExperimentConfig& cfg) {
    const SamplerSpec& s = cfg.sampler;
    TemperingPlan plan;
    plan.geometric = s.geometric_tempering;
    plan.tau = s.tau;
    plan.tau0 = s.tau0;
    plan.decay = s.tau_decay;
    plan.floor = s.tau_floor;
    plan.zeta = s.zeta;
    plan.lambda_start = s.lambda_start;
    plan.lambda_ramp = s.lambda_ramp;
    return plan;
}

RunSettings build_run_settings(const ExperimentConfig& cfg, int n_rows,
                               std::uint64_t seed) {
    if (cfg.run.batch > n_rows)
        throw ConfigError("run.batch exceeds the number of observations");
    RunSettings run;
    run.kind = cfg.sampler.kind;
    run.burn_in = cfg.run.burn_in;
    run.iters = cfg.run.iters;
    run.thin = cfg.run.thin;
    run.batch_size = cfg.run.batch;
    run.seed = seed;
    run.trace_every = cfg.run.trace_every;
    run.divergence_energy = cfg.run.divergence_energy;
    return run;
}

Dataset simulate_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto family = build_family(cfg);
    const Vector theta = truth_vector(cfg, *family);
    CounterRng rng(seed, 0);
    Dataset data = family->simulate(theta, cfg.n, rng);
    if (cfg.family.outlier_count > 0) {
        const int first = data.n() - cfg.family.outlier_count;
        if (first < 0)
            throw ConfigError("family.outlier_count exceeds the sample size");
        for (int i = first; i < data.n(); ++i) {
            data.z_truth(i, 0) += cfg.family.outlier_shift;
            family->forward_model(&data.X(i, 0), &data.z_truth(i, 0), theta,
                                  &data.Y(i, 0));
        }
    }
    return data;
}

void check_data_schema(const ExperimentConfig& cfg, const ModelFamily& family,
                       const Dataset& data) {
    const std::string& name = cfg.family.name;
    int x_cols = 0;
    if (name == "linear_known_sigma" || name == "linear_unknown_sigma" ||
        name == "logistic" || name == "logistic_multiclass" ||
        name == "ssl_logistic")
        x_cols = cfg.family.p;
    else if (name == "gauss2" || name == "behrens_fisher")
        x_cols = 1;
    else if (name == "mediation")
        x_cols = 3;
    // normal_group and bivariate_normal carry no covariates.

    if (data.Y.cols() != family.y_dim())
        throw std::runtime_error(
            "data has " + std::to_string(data.Y.cols()) +
            " response column(s); family " + name + " needs " +
            std::to_string(family.y_dim()));
    if (data.X.cols() != x_cols)
        throw std::runtime_error("data has " + std::to_string(data.X.cols()) +
                                 " covariate column(s); family " + name +
                                 " needs " + std::to_string(x_cols));
    if (name == "ssl_logistic" &&
        data.labeled.size() != static_cast<std::size_t>(data.n()))
        throw std::runtime_error(
            "family ssl_logistic needs a data file with a label column");
}

FiducialSamples fit_dataset(const ExperimentConfig& cfg, const Dataset& data,
                            std::uint64_t seed) {
    const auto family = build_family(cfg);
    const DenseNet net = build_net(cfg, *family, data);
    const Schedule schedule = build_schedule(cfg);
    const TemperingPlan tempering = build_tempering(cfg);
    const RunSettings run = build_run_settings(cfg, data.n(), seed);
    if (family->paired_groups())
        return run_paired_groups(*family, data, net, cfg.energy, cfg.prior,
                                 schedule, tempering, run);
    EnergyModel model(*family, data, net, cfg.energy);
    return run_chain(model, cfg.prior, schedule, tempering, run);
}

namespace {

QuantityCheck interval_check(std::string group, double truth,
                             std::pair<double, double> ci) {
    QuantityCheck check;
    check.group = std::move(group);
    check.truth = truth;
    check.lo = ci.first;
    check.hi = ci.second;
    return check;
}

// Encodes a test decision so the aggregated "coverage" is the rejection rate.
QuantityCheck reject_check(std::string group, bool reject) {
    QuantityCheck check;
    check.group = std::move(group);
    check.truth = 1.0;
    check.lo = reject ? 1.0 : 0.0;
    check.hi = check.lo;
    return check;
}

std::vector<QuantityCheck> checks_from_draws(const ExperimentConfig& cfg,
                                             const ModelFamily& family,
                                             const Matrix& draws) {
    const double level = cfg.level;
    const std::vector<double>& tr = cfg.truth;
    const std::string& fam = cfg.family.name;
    std::vector<QuantityCheck> out;

    if (fam == "linear_known_sigma" || fam == "linear_unknown_sigma") {
        for (int j = 0; j < cfg.family.p; ++j) {
            const double truth = tr[static_cast<std::size_t>(j)];
            out.push_back(interval_check(truth != 0.0 ? "signal" : "noise",
                                         truth, percentile_ci(draws, j, level)));
        }
        if (fam == "linear_unknown_sigma") {
            const Matrix der = derived_draws(family, draws);
            const double sigma = tr[static_cast<std::size_t>(cfg.family.p)];
            out.push_back(interval_check("sigma_sq", sigma * sigma,
                                         percentile_ci(der, 0, level)));
        }
    } else if (fam == "behrens_fisher") {
        const Matrix der = derived_draws(family, draws);
        out.push_back(interval_check("mu_diff", tr[0] - tr[2],
                                     percentile_ci(der, 0, level)));
    } else if (fam == "bivariate_normal") {
        out.push_back(interval_check("mu1", tr[0], percentile_ci(draws, 0, level)));
        out.push_back(interval_check("mu2", tr[1], percentile_ci(draws, 1, level)));
        // Variance scale: the reported sigma quantities are variances.
        const auto m = draws.rows();
        Vector s1(m), s2(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            s1[r] = draws(r, 2) * draws(r, 2);
            s2[r] = draws(r, 3) * draws(r, 3) + draws(r, 4) * draws(r, 4);
        }
        out.push_back(interval_check("sigma1_sq", tr[2] * tr[2],
                                     percentile_ci(s1, level)));
        const double var2 = tr[3] * tr[3] + tr[4] * tr[4];
        out.push_back(interval_check("sigma2_sq", var2, percentile_ci(s2, level)));
        const Matrix der = derived_draws(family, draws);
        const double rho = var2 > 0.0 ? tr[3] / std::sqrt(var2) : 0.0;
        out.push_back(interval_check("rho", rho, percentile_ci(der, 2, level)));
    } else if (fam == "mediation") {
        const Matrix der = derived_draws(family, draws);
        out.push_back(interval_check("beta_gamma", tr[1] * tr[5],
                                     percentile_ci(der, 0, level)));
        out.push_back(
            reject_check("reject", mediation_decision(draws, 1, 5, level)));
    } else {
        const std::vector<std::string> names = family.param_names();
        for (int j = 0; j < family.theta_dim(); ++j)
            out.push_back(interval_check(names[static_cast<std::size_t>(j)],
                                         tr[static_cast<std::size_t>(j)],
                                         percentile_ci(draws, j, level)));
    }
    return out;
}

}  // namespace

std::vector<QuantityCheck> evaluate_method(const ExperimentConfig& cfg,
                                           const std::string& method,
                                           const Dataset& data,
                                           std::uint64_t seed) {
    if (cfg.truth.empty())
        throw ConfigError("method evaluation needs 'truth' for coverage checks");
    const double level = cfg.level;
    const std::vector<double>& tr = cfg.truth;
    const auto family = build_family(cfg);

    if (method == "efi") {
        const FiducialSamples fit = fit_dataset(cfg, data, seed);
        return checks_from_draws(cfg, *family, fit.draws);
    }

    if (method == "ols" || method == "efd") {
        const Vector y = data.Y.col(0);
        const bool known = cfg.family.name == "linear_known_sigma";
        const int p = cfg.family.p;
        auto group_of = [&tr](int j) {
            return tr[static_cast<std::size_t>(j)] != 0.0 ? "signal" : "noise";
        };
        std::vector<QuantityCheck> out;
        if (method == "ols") {
            const OlsFit fit = ols_fit(y, data.X);
            const double q = 0.5 + level / 2.0;
            if (known) {
                const double z = norm_ppf(q);
                for (int j = 0; j < p; ++j) {
                    const double se =
                        cfg.family.sigma * std::sqrt(fit.cov_unscaled(j, j));
                    out.push_back(interval_check(
                        group_of(j), tr[static_cast<std::size_t>(j)],
                        {fit.beta[j] - z * se, fit.beta[j] + z * se}));
                }
            } else {
                const double df = fit.n - fit.p;
                const double s2 = fit.rss / df;
                const double t = t_ppf(q, df);
                for (int j = 0; j < p; ++j) {
                    const double se = std::sqrt(s2 * fit.cov_unscaled(j, j));
                    out.push_back(interval_check(
                        group_of(j), tr[static_cast<std::size_t>(j)],
                        {fit.beta[j] - t * se, fit.beta[j] + t * se}));
                }
                const double sigma = tr[static_cast<std::size_t>(p)];
                out.push_back(interval_check(
                    "sigma_sq", sigma * sigma,
                    {fit.rss / chi2_ppf(q, df), fit.rss / chi2_ppf(1.0 - q, df)}));
            }
        } else {
            const EfdLinear efd = known
                                      ? efd_linear(y, data.X, cfg.family.sigma)
                                      : efd_linear(y, data.X);
            for (int j = 0; j < p; ++j)
                out.push_back(interval_check(group_of(j),
                                             tr[static_cast<std::size_t>(j)],
                                             efd.beta_ci(j, level)));
            if (!known) {
                const double sigma = tr[static_cast<std::size_t>(p)];
                out.push_back(interval_check("sigma_sq", sigma * sigma,
                                             efd.sigma2_ci(level)));
            }
        }
        return out;
    }

    if (method == "gfi_ar") {
        const Vector y = data.Y.col(0);
        const GfiResult res =
            gfi_accept_reject(y, data.X, cfg.family.sigma, cfg.gfi.eps,
                              cfg.gfi.norm, cfg.gfi.proposals, seed);
        if (res.n_accepted < 2)
            throw std::runtime_error("accept-reject kept " +
                                     std::to_string(res.n_accepted) + " of " +
                                     std::to_string(res.n_proposals) +
                                     " proposals");
        std::vector<QuantityCheck> out;
        for (int j = 0; j < cfg.family.p; ++j) {
            const double truth = tr[static_cast<std::size_t>(j)];
            out.push_back(interval_check(truth != 0.0 ? "signal" : "noise",
                                         truth,
                                         percentile_ci(res.accepted, j, level)));
        }
        return out;
    }

    if (method == "welch" || method == "hsu_scheffe" ||
        method == "behrens_fisher_mc") {
        const auto groups = split_groups(data);
        const Vector y1 = groups.first.Y.col(0);
        const Vector y2 = groups.second.Y.col(0);
        const TwoSampleTests tests =
            two_sample_tests(y1, y2, level, cfg.mc_draws, seed);
        const TwoSampleInterval& interval =
            method == "welch" ? tests.welch
            : method == "hsu_scheffe" ? tests.hsu_scheffe
                                      : tests.behrens_mc;
        return {interval_check("mu_diff", tr[0] - tr[2],
                               {interval.lo, interval.hi})};
    }

    if (method == "bivariate_fiducial") {
        const BivariateFiducial bf = bivariate_fiducial_closed_form(data.Y);
        std::vector<QuantityCheck> out;
        out.push_back(interval_check("mu1", tr[0], bf.mu_ci(1, level)));
        out.push_back(interval_check("mu2", tr[1], bf.mu_ci(2, level)));
        out.push_back(
            interval_check("sigma1_sq", tr[2] * tr[2], bf.sigma2_ci(1, level)));
        const double var2 = tr[3] * tr[3] + tr[4] * tr[4];
        out.push_back(interval_check("sigma2_sq", var2, bf.sigma2_ci(2, level)));
        CounterRng rng(seed, 0);
        const Vector rho_draws = bf.rho_draws(cfg.mc_draws, rng);
        const double rho = var2 > 0.0 ? tr[3] / std::sqrt(var2) : 0.0;
        out.push_back(interval_check("rho", rho, percentile_ci(rho_draws, level)));
        return out;
    }

    if (method == "sobel" || method == "maxp") {
        const MediationTests tests = mediation_tests(data, 1.0 - level);
        const bool reject =
            method == "sobel" ? tests.sobel_reject : tests.maxp_reject;
        return {reject_check("reject", reject)};
    }

    throw ConfigError("unknown method '" + method + "'");
}

MethodReport replicate_method(const ExperimentConfig& cfg,
                              const std::string& method, int threads) {
    const ReplicateEval eval = [&cfg, &method](int replicate,
                                               std::uint64_t seed) {
        (void)replicate;
        const Dataset data =
            simulate_dataset(cfg, CounterRng::derive_seed(seed, 100));
        return evaluate_method(cfg, method, data,
                               CounterRng::derive_seed(seed, 101));
    };
    MethodReport report;
    report.method = method;
    report.report = coverage_harness(cfg.replicates, cfg.seed, threads, eval);
    return report;
}

std::vector<MethodReport> run_replicates(const ExperimentConfig& cfg,
                                         int threads) {
    std::vector<MethodReport> out;
    for (const std::string& method : cfg.methods)
        out.push_back(replicate_method(cfg, method, threads));
    return out;
}

}  // namespace efi
