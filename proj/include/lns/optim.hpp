#ifndef LNS_OPTIM_HPP
#define LNS_OPTIM_HPP

#include <vector>

#include "lns/autograd.hpp"
#include "lns/tensor.hpp"

namespace lns {

enum class Algorithm : uint8_t { GD = 0, MUL, SIGN_MUL, MADAM };

// sign with sign(0) := 0, so zero weights and zero gradients stay put.
inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double update_gd(double w, double g, double eta);

/// Multiplicative update: log2|w'| = log2|w| - eta * g * sign(w), sign kept.
double update_mul(double w, double g, double eta);

double update_sign_mul(double w, double g, double eta);

struct OptimizerState {
    Algorithm algorithm = Algorithm::MADAM;
    double eta = 0.0078125;  // 2^-7
    double beta1 = 0.9;      // reserved; second-moment-only normalization is used
    double beta2 = 0.999;
    double epsilon = 1e-12;
    std::vector<Mat> second_moment;  // one per parameter tensor
    int64_t step_count = 0;

    static OptimizerState make(Algorithm alg, double eta, const std::vector<Mat>& params);
    void begin_step() { ++step_count; }
};

/// Second-moment EMA with bias correction; returns the normalized gradient
/// g* = g / (sqrt(g2_hat) + eps). Uses the state's current step count.
Mat madam_normalize(OptimizerState& state, size_t param_index, const Mat& g);

/// Full-precision update of one parameter tensor (no quantization).
Mat apply_update(OptimizerState& state, size_t param_index, const Mat& w, const Mat& g);

enum class StorageMode : uint8_t { Shadow = 0, DirectLns };

/// Weight container for quantized updates. Exponents are stored at the QU
/// precision; the forward pass reads them truncated to the forward format.
/// Shadow mode additionally keeps the full-precision weights and re-quantizes
/// after every update; direct mode updates the stored exponents in place.
struct WeightStore {
    StorageMode mode = StorageMode::Shadow;
    Mat shadow;     // shadow mode only
    LnsTensor lns;  // QU format
    QuantizerConfig qu;
    LnsFormat forward_format;

    double scale() const { return lns.scales.at(0); }
};

/// QU base factor scaled so a wider update format keeps the forward dynamic
/// range: gamma_U = gamma * 2^(B_U - B).
LnsFormat matched_update_format(const LnsFormat& forward, int update_bitwidth);

WeightStore make_weight_store(const Mat& w0, const QuantizerConfig& qu,
                              const LnsFormat& forward_format, StorageMode mode,
                              double scale_headroom = 4.0);

/// Stored weights truncated to the forward format (drops the QU-only
/// exponent LSBs) and decoded to reals.
Mat forward_weights(const WeightStore& store);

/// One logarithmic quantized weight update. Shadow mode runs the update in
/// full precision and re-quantizes; direct mode applies MADAM/SIGN_MUL as
/// integer exponent arithmetic (GD/MUL decode, update and re-quantize).
void quantized_update(WeightStore& store, OptimizerState& state, size_t param_index,
                      const Mat& g, Rng* rng = nullptr);

}  // namespace lns

#endif
