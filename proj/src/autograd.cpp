#include "lns/autograd.hpp"

#include <algorithm>
#include <cmath>

namespace lns {

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw UsageError("matmul shape mismatch");
    Mat r(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        for (size_t k = 0; k < a.cols; ++k) {
            double av = a.at(i, k);
            if (av == 0.0) continue;
            for (size_t j = 0; j < b.cols; ++j) r.at(i, j) += av * b.at(k, j);
        }
    }
    return r;
}

Mat matmul_transposed(const Mat& a, const Mat& bt) {
    if (a.cols != bt.cols) throw UsageError("matmul shape mismatch");
    Mat r(a.rows, bt.rows);
    for (size_t i = 0; i < a.rows; ++i) {
        for (size_t j = 0; j < bt.rows; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < a.cols; ++k) acc += a.at(i, k) * bt.at(j, k);
            r.at(i, j) = acc;
        }
    }
    return r;
}

Network make_network(size_t input_dim, const std::vector<LayerSpec>& layers, Rng& rng,
                     double init_scale) {
    Network net;
    size_t in = input_dim;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (LayerSpec spec : layers) {
        spec.in = in;
        double scale = init_scale > 0.0 ? init_scale : std::sqrt(2.0 / double(spec.in));
        Mat w(spec.out, spec.in);
        for (double& v : w.d) v = normal(rng) * scale;
        net.layers.push_back(spec);
        net.weights.push_back(std::move(w));
        in = spec.out;
    }
    return net;
}

Mat fake_quantize(const Mat& m, const QuantizerConfig& cfg) {
    if (cfg.bypass()) return m;
    LnsTensor q = quantize_tensor(std::span(m.d), m.shape(), cfg);
    Mat out(m.rows, m.cols);
    out.d = decode_tensor(q);
    return out;
}

namespace {

double activate(double x, Activation act) {
    switch (act) {
        case Activation::None:
            return x;
        case Activation::ReLU:
            return x > 0.0 ? x : 0.0;
        case Activation::GeLU: {
            constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
            double t = std::tanh(c * (x + 0.044715 * x * x * x));
            return 0.5 * x * (1.0 + t);
        }
    }
    return x;
}

double activate_grad(double x, Activation act) {
    switch (act) {
        case Activation::None:
            return 1.0;
        case Activation::ReLU:
            return x > 0.0 ? 1.0 : 0.0;
        case Activation::GeLU: {
            constexpr double c = 0.7978845608028654;
            double u = c * (x + 0.044715 * x * x * x);
            double t = std::tanh(u);
            double du = c * (1.0 + 3.0 * 0.044715 * x * x);
            return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
        }
    }
    return 1.0;
}

// Affine map through the bit-accurate MAC datapath: both operands are
// quantized per-tensor, dot products run in fixed point, and the decoded
// result carries the product of the operand scales.
Mat affine_datapath(const Mat& x, const Mat& w, const QuantizerSet& qs, const MacConfig& mac,
                    const ConversionMode& mode, OperationTally& tally_acc,
                    uint64_t& saturations) {
    if (qs.qa.granularity != Granularity::PerTensor ||
        qs.qw.granularity != Granularity::PerTensor) {
        throw ConfigError("datapath affine supports per-tensor scaling only");
    }
    QuantizerConfig xq_cfg = qs.qa;
    xq_cfg.format = mac.format;
    QuantizerConfig wq_cfg = qs.qw;
    wq_cfg.format = mac.format;
    LnsTensor xq = quantize_tensor(std::span(x.d), x.shape(), xq_cfg);
    LnsTensor wq = quantize_tensor(std::span(w.d), w.shape(), wq_cfg);
    double scale = xq.scales[0] * wq.scales[0];

    Mat out(x.rows, w.rows);
    size_t k = x.cols;
    size_t lanes = size_t(mac.vector_size);
    uint64_t dot_count = 0;
    for (size_t i = 0; i < x.rows; ++i) {
        for (size_t o = 0; o < w.rows; ++o) {
            PartialSum acc;
            acc.accumulator_bits = mac.accumulator_bits;
            acc.fractional_bits = mac.fractional_bits;
            for (size_t base = 0; base < k; base += lanes) {
                size_t len = std::min(lanes, k - base);
                std::span<const LnsScalar> as(&xq.elems[i * k + base], len);
                std::span<const LnsScalar> bs(&wq.elems[o * k + base], len);
                acc = accumulate(acc, mac_dot_product(as, bs, mac, mode));
                ++dot_count;
            }
            if (acc.saturated) ++saturations;
            out.at(i, o) = std::ldexp(double(acc.value), -mac.fractional_bits) * scale;
        }
    }
    tally_acc += tally(dot_count, mac, mode);
    return out;
}

ForwardResult run_forward(const Network& net, const std::vector<Mat>& weights,
                          const Mat& input, const QuantizerSet& qs, const MacConfig& mac,
                          bool apply_qw) {
    if (net.layers.size() != weights.size()) throw UsageError("weight count mismatch");
    ForwardResult res;
    Mat x = fake_quantize(input, qs.qa);
    for (size_t l = 0; l < net.layers.size(); ++l) {
        const LayerSpec& spec = net.layers[l];
        if (x.cols != spec.in) throw UsageError("layer input width mismatch");
        LayerCache cache;
        cache.input_q = x;
        cache.weight_q = apply_qw ? fake_quantize(weights[l], qs.qw) : weights[l];
        Mat z;
        if (qs.qw.conversion == ConversionKind::RealReference) {
            z = matmul_transposed(cache.input_q, cache.weight_q);
        } else {
            ConversionMode mode = qs.qw.conversion == ConversionKind::Hybrid
                                      ? ConversionMode::hybrid(qs.qw.split)
                                      : ConversionMode::exact();
            z = affine_datapath(cache.input_q, cache.weight_q, qs, mac, mode, res.tally,
                                res.saturations);
        }
        cache.pre_act = z;
        Mat a(z.rows, z.cols);
        for (size_t i = 0; i < z.d.size(); ++i) a.d[i] = activate(z.d[i], spec.act);
        x = fake_quantize(a, qs.qa);
        res.caches.push_back(std::move(cache));
    }
    res.logits = std::move(x);
    return res;
}

}  // namespace

ForwardResult forward(const Network& net, const Mat& input, const QuantizerSet& qs,
                      const MacConfig& mac) {
    return run_forward(net, net.weights, input, qs, mac, true);
}

ForwardResult forward_with_weights(const Network& net, const std::vector<Mat>& weights,
                                   const Mat& input, const QuantizerSet& qs,
                                   const MacConfig& mac) {
    return run_forward(net, weights, input, qs, mac, false);
}

GradientBundle backward(const Network& net, const Mat& logits_grad,
                        const std::vector<LayerCache>& caches, const QuantizerSet& qs) {
    if (caches.size() != net.layers.size()) throw UsageError("cache/layer count mismatch");
    GradientBundle g;
    g.weight_grads.resize(net.layers.size());
    g.input_grads.resize(net.layers.size());
    Mat upstream = logits_grad;  // STE: passes through QA unchanged
    for (size_t li = net.layers.size(); li-- > 0;) {
        const LayerCache& cache = caches[li];
        const LayerSpec& spec = net.layers[li];
        Mat dz(upstream.rows, upstream.cols);
        for (size_t i = 0; i < dz.d.size(); ++i) {
            dz.d[i] = upstream.d[i] * activate_grad(cache.pre_act.d[i], spec.act);
        }
        // dW[o,i] = sum_batch dz[s,o] * x_q[s,i]
        Mat dw(spec.out, spec.in);
        for (size_t s = 0; s < dz.rows; ++s) {
            for (size_t o = 0; o < spec.out; ++o) {
                double dzo = dz.at(s, o);
                if (dzo == 0.0) continue;
                for (size_t i = 0; i < spec.in; ++i) {
                    dw.at(o, i) += dzo * cache.input_q.at(s, i);
                }
            }
        }
        g.weight_grads[li] = fake_quantize(dw, qs.qg);
        // dX = dz * W_q, quantized by QE before it propagates down
        Mat dx = matmul(dz, cache.weight_q);
        g.input_grads[li] = fake_quantize(dx, qs.qe);
        upstream = g.input_grads[li];
    }
    return g;
}

LossResult loss_softmax_xent(const Mat& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows) throw UsageError("label count mismatch");
    LossResult res;
    res.grad = Mat(logits.rows, logits.cols);
    double total = 0.0;
    for (size_t s = 0; s < logits.rows; ++s) {
        int y = labels[s];
        if (y < 0 || size_t(y) >= logits.cols) throw UsageError("label out of range");
        double mx = logits.at(s, 0);
        for (size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(s, j));
        double z = 0.0;
        for (size_t j = 0; j < logits.cols; ++j) z += std::exp(logits.at(s, j) - mx);
        total += std::log(z) - (logits.at(s, size_t(y)) - mx);
        for (size_t j = 0; j < logits.cols; ++j) {
            double p = std::exp(logits.at(s, j) - mx) / z;
            res.grad.at(s, j) = (p - (size_t(y) == j ? 1.0 : 0.0)) / double(logits.rows);
        }
    }
    res.loss = total / double(logits.rows);
    return res;
}

double accuracy(const Mat& logits, const std::vector<int>& labels) {
    size_t hits = 0;
    for (size_t s = 0; s < logits.rows; ++s) {
        size_t best = 0;
        for (size_t j = 1; j < logits.cols; ++j) {
            if (logits.at(s, j) > logits.at(s, best)) best = j;
        }
        if (int(best) == labels[s]) ++hits;
    }
    return labels.empty() ? 0.0 : double(hits) / double(labels.size());
}

}  // namespace lns
