#ifndef LNS_ERROR_ANALYSIS_HPP
#define LNS_ERROR_ANALYSIS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lns/optim.hpp"

namespace lns {

struct ErrorRecord {
    Algorithm algorithm = Algorithm::GD;
    double eta = 0.0;
    int gamma = 0;
    int dimension = 0;
    int trials = 0;
    double mean_error = 0.0;  // mean r_t, squared L2 in log2 space
    double bound = 0.0;       // matching closed-form RHS
    bool pass() const { return mean_error <= bound; }
};

/// Simplified LogQuant used by the bound analysis: no scale, no clamp,
/// stochastic rounding of gamma * log2|x|.
double simplified_log_quantize(double x, int gamma, Rng& rng);

/// r = sum_k (log2|quantized_k| - log2|full_k|)^2, zero elements excluded
/// (their count is reported through zeros_excluded when given).
double measure_update_error(const std::vector<double>& full,
                            const std::vector<double>& quantized,
                            size_t* zeros_excluded = nullptr);

struct SrBoundResult {
    double mean_sq_err = 0.0;
    double bound = 0.0;     // sqrt(d) * ||x||
    double analytic = 0.0;  // sum_i q_i (1 - q_i)
};

SrBoundResult check_sr_bound(const std::vector<double>& x, int trials, Rng& rng);

/// Runs the quantized update `trials` times with stochastic rounding and
/// compares the averaged error against the theorem's closed-form bound.
/// Multiplicative algorithms start from weights already on the LNS grid.
ErrorRecord check_theorem_bound(Algorithm alg, const std::vector<double>& w,
                                const std::vector<double>& g, double eta, int gamma,
                                int trials, Rng& rng);

struct SweepSpec {
    std::vector<double> eta_grid;
    std::vector<int> gamma_grid;
    std::vector<Algorithm> algorithms;
    int trials = 256;
    int dimension = 1024;
    double weight_log2_min = -8.0;  // weights log-uniform over [2^min, 2^max]
    double weight_log2_max = 0.0;
    double gradient_sigma = 0x1p-13;
    uint64_t seed = 1;
    int threads = 1;

    // Appendix protocol: gamma fixed at 2^10 for the eta sweep and eta fixed
    // at 2^-6 for the gamma sweep.
    static SweepSpec default_eta_sweep();
    static SweepSpec default_gamma_sweep();
};

std::vector<ErrorRecord> run_sweep(const SweepSpec& spec);

std::string sweep_csv(const std::vector<ErrorRecord>& records);

const char* algorithm_name(Algorithm alg);

}  // namespace lns

#endif
