#include "lns/error_analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace lns {

double simplified_log_quantize(double x, int gamma, Rng& rng) {
    if (x == 0.0) return 0.0;
    double e = double(stochastic_round(std::log2(std::fabs(x)) * gamma, rng));
    return sign0(x) * std::exp2(e / gamma);
}

double measure_update_error(const std::vector<double>& full,
                            const std::vector<double>& quantized, size_t* zeros_excluded) {
    if (full.size() != quantized.size()) throw UsageError("tensor size mismatch");
    double r = 0.0;
    size_t zeros = 0;
    size_t used = 0;
    for (size_t i = 0; i < full.size(); ++i) {
        if (full[i] == 0.0 || quantized[i] == 0.0) {
            ++zeros;
            continue;
        }
        double diff = std::log2(std::fabs(quantized[i])) - std::log2(std::fabs(full[i]));
        r += diff * diff;
        ++used;
    }
    if (zeros_excluded) *zeros_excluded = zeros;
    if (used == 0) throw DataError("update error undefined on all-zero tensors");
    return r;
}

SrBoundResult check_sr_bound(const std::vector<double>& x, int trials, Rng& rng) {
    if (trials < 1) throw UsageError("need at least one trial");
    SrBoundResult res;
    double norm2 = 0.0;
    for (double v : x) {
        norm2 += v * v;
        double q = v - std::floor(v);
        res.analytic += q * (1.0 - q);
    }
    res.bound = std::sqrt(double(x.size())) * std::sqrt(norm2);
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
        double err2 = 0.0;
        for (double v : x) {
            double r = double(stochastic_round(v, rng)) - v;
            err2 += r * r;
        }
        total += err2;
    }
    res.mean_sq_err = total / trials;
    return res;
}

namespace {

std::vector<double> full_precision_update(Algorithm alg, const std::vector<double>& w,
                                          const std::vector<double>& g, double eta) {
    std::vector<double> out(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
        switch (alg) {
            case Algorithm::GD:
                out[i] = update_gd(w[i], g[i], eta);
                break;
            case Algorithm::MUL:
                out[i] = update_mul(w[i], g[i], eta);
                break;
            case Algorithm::SIGN_MUL:
                out[i] = update_sign_mul(w[i], g[i], eta);
                break;
            case Algorithm::MADAM:
                throw UsageError("theorem bounds cover GD, MUL and SIGN_MUL only");
        }
    }
    return out;
}

double theorem_rhs(Algorithm alg, const std::vector<double>& updated,
                   const std::vector<double>& g, double eta, int gamma) {
    size_t d = updated.size();
    switch (alg) {
        case Algorithm::GD: {
            double norm2 = 0.0;
            for (double v : updated) norm2 += std::log2(std::fabs(v)) * std::log2(std::fabs(v));
            return std::sqrt(double(d)) / gamma * std::sqrt(norm2);
        }
        case Algorithm::MUL: {
            double norm2 = 0.0;
            for (double v : g) norm2 += v * v;
            return std::sqrt(double(d)) * eta / gamma * std::sqrt(norm2);
        }
        case Algorithm::SIGN_MUL:
            return double(d) * eta / gamma;
        default:
            throw UsageError("no closed-form bound for this algorithm");
    }
}

// Weights on the simplified LNS grid: exponents are integer multiples of
// 1/gamma, matching the analysis where gamma * W~ is already integral.
std::vector<double> snap_to_grid(const std::vector<double>& w, int gamma) {
    std::vector<double> out(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
        double e = round_half_even(std::log2(std::fabs(w[i])) * gamma);
        out[i] = sign0(w[i]) * std::exp2(e / gamma);
    }
    return out;
}

}  // namespace

ErrorRecord check_theorem_bound(Algorithm alg, const std::vector<double>& w,
                                const std::vector<double>& g, double eta, int gamma,
                                int trials, Rng& rng) {
    if (w.size() != g.size()) throw UsageError("weight/gradient size mismatch");
    std::vector<double> w0 =
        (alg == Algorithm::MUL || alg == Algorithm::SIGN_MUL) ? snap_to_grid(w, gamma) : w;
    std::vector<double> updated = full_precision_update(alg, w0, g, eta);

    double total = 0.0;
    std::vector<double> quantized(w.size());
    for (int t = 0; t < trials; ++t) {
        for (size_t i = 0; i < updated.size(); ++i) {
            quantized[i] = simplified_log_quantize(updated[i], gamma, rng);
        }
        total += measure_update_error(updated, quantized);
    }
    ErrorRecord rec;
    rec.algorithm = alg;
    rec.eta = eta;
    rec.gamma = gamma;
    rec.dimension = int(w.size());
    rec.trials = trials;
    rec.mean_error = total / trials;
    rec.bound = theorem_rhs(alg, updated, g, eta, gamma);
    return rec;
}

SweepSpec SweepSpec::default_eta_sweep() {
    SweepSpec s;
    s.gamma_grid = {1 << 10};
    for (int k = 3; k <= 9; ++k) s.eta_grid.push_back(std::exp2(-k));
    s.algorithms = {Algorithm::GD, Algorithm::MUL, Algorithm::SIGN_MUL};
    return s;
}

SweepSpec SweepSpec::default_gamma_sweep() {
    SweepSpec s;
    s.eta_grid = {0x1p-6};
    for (int k = 6; k <= 12; ++k) s.gamma_grid.push_back(1 << k);
    s.algorithms = {Algorithm::GD, Algorithm::MUL, Algorithm::SIGN_MUL};
    return s;
}

std::vector<ErrorRecord> run_sweep(const SweepSpec& spec) {
    if (spec.eta_grid.empty() || spec.gamma_grid.empty() || spec.algorithms.empty()) {
        throw ConfigError("sweep grids must be non-empty");
    }
    if (spec.trials < 1) throw ConfigError("sweep needs at least one trial");

    struct Point {
        Algorithm alg;
        double eta;
        int gamma;
        uint64_t seed;
    };
    std::vector<Point> points;
    uint64_t counter = 0;
    for (Algorithm alg : spec.algorithms) {
        for (double eta : spec.eta_grid) {
            for (int gamma : spec.gamma_grid) {
                points.push_back({alg, eta, gamma, spec.seed * 0x9e3779b97f4a7c15ull + counter});
                ++counter;
            }
        }
    }

    std::vector<ErrorRecord> records(points.size());
    auto run_point = [&spec](const Point& p) {
        Rng rng(p.seed);
        std::vector<double> w(size_t(spec.dimension));
        std::vector<double> g(size_t(spec.dimension));
        std::normal_distribution<double> normal(0.0, spec.gradient_sigma);
        for (double& v : w) {
            double e = spec.weight_log2_min +
                       uniform01(rng) * (spec.weight_log2_max - spec.weight_log2_min);
            v = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * std::exp2(e);
        }
        for (double& v : g) v = normal(rng);
        return check_theorem_bound(p.alg, w, g, p.eta, p.gamma, spec.trials, rng);
    };

    int n_threads = std::max(1, spec.threads);
    if (n_threads == 1) {
        for (size_t i = 0; i < points.size(); ++i) records[i] = run_point(points[i]);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&]() {
                for (size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1)) {
                    records[i] = run_point(points[i]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return records;
}

const char* algorithm_name(Algorithm alg) {
    switch (alg) {
        case Algorithm::GD:
            return "gd";
        case Algorithm::MUL:
            return "mul";
        case Algorithm::SIGN_MUL:
            return "sign_mul";
        case Algorithm::MADAM:
            return "madam";
    }
    return "?";
}

std::string sweep_csv(const std::vector<ErrorRecord>& records) {
    std::ostringstream os;
    os << "algorithm,eta,gamma,d,trials,mean_r,bound,pass\n";
    for (const ErrorRecord& r : records) {
        os << algorithm_name(r.algorithm) << ',' << r.eta << ',' << r.gamma << ','
           << r.dimension << ',' << r.trials << ',' << r.mean_error << ',' << r.bound << ','
           << (r.pass() ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace lns
