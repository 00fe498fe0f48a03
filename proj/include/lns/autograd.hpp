#ifndef LNS_AUTOGRAD_HPP
#define LNS_AUTOGRAD_HPP

#include <cstddef>
#include <vector>

#include "lns/datapath.hpp"
#include "lns/tensor.hpp"

namespace lns {

/// Dense row-major matrix; the only tensor rank the toy stack needs.
struct Mat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> d;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), d(r * c, 0.0) {}
    double& at(size_t r, size_t c) { return d[r * cols + c]; }
    double at(size_t r, size_t c) const { return d[r * cols + c]; }
    std::vector<size_t> shape() const { return {rows, cols}; }
};

Mat matmul(const Mat& a, const Mat& b);             // a (m x k) * b (k x n)
Mat matmul_transposed(const Mat& a, const Mat& bt);  // a (m x k) * bt^T, bt (n x k)

enum class Activation : uint8_t { None = 0, ReLU, GeLU };

struct LayerSpec {
    size_t in = 0;
    size_t out = 0;
    Activation act = Activation::None;
};

struct Network {
    std::vector<LayerSpec> layers;
    std::vector<Mat> weights;  // weights[l] is out x in
};

Network make_network(size_t input_dim, const std::vector<LayerSpec>& layers, Rng& rng,
                     double init_scale = 0.0);

/// Forward/backward quantizer assignment (roles QW/QA/QE/QG; role None
/// bypasses a quantizer entirely).
struct QuantizerSet {
    QuantizerConfig qw;
    QuantizerConfig qa;
    QuantizerConfig qe;
    QuantizerConfig qg;
};

/// Quantize-and-decode through the role's format; identity when bypassed.
Mat fake_quantize(const Mat& m, const QuantizerConfig& cfg);

struct LayerCache {
    Mat input_q;     // quantized layer input
    Mat weight_q;    // quantized weight (decoded reals)
    Mat pre_act;     // affine output before the nonlinearity
};

struct ForwardResult {
    Mat logits;
    std::vector<LayerCache> caches;
    OperationTally tally;       // datapath conversions only
    uint64_t saturations = 0;   // saturated partial sums seen
};

/// Per layer: QW(weights), affine map (real reference or the LNS MAC
/// datapath per cfg), nonlinearity, QA(activations).
ForwardResult forward(const Network& net, const Mat& input, const QuantizerSet& qs,
                      const MacConfig& mac = MacConfig{});

/// Forward variant with externally supplied effective weights (already
/// quantized, e.g. read out of a direct-LNS weight store); QW is skipped.
ForwardResult forward_with_weights(const Network& net, const std::vector<Mat>& weights,
                                   const Mat& input, const QuantizerSet& qs,
                                   const MacConfig& mac = MacConfig{});

struct GradientBundle {
    std::vector<Mat> weight_grads;
    std::vector<Mat> input_grads;  // gradient w.r.t. each layer's input
};

/// Reverse pass with straight-through estimators at every quantizer:
/// gradients flow through QW/QA unchanged, then QE quantizes each activation
/// gradient before it propagates and QG quantizes each weight gradient.
GradientBundle backward(const Network& net, const Mat& logits_grad,
                        const std::vector<LayerCache>& caches, const QuantizerSet& qs);

struct LossResult {
    double loss = 0.0;
    Mat grad;  // d loss / d logits (mean over the batch)
};

LossResult loss_softmax_xent(const Mat& logits, const std::vector<int>& labels);

double accuracy(const Mat& logits, const std::vector<int>& labels);

}  // namespace lns

#endif
