#include "lns/optim.hpp"

#include <algorithm>
#include <cmath>

namespace lns {

namespace {
constexpr double kLog2E = 1.4426950408889634;
}

double update_gd(double w, double g, double eta) { return w - eta * g; }

double update_mul(double w, double g, double eta) {
    if (w == 0.0) return 0.0;
    double s = sign0(w);
    return s * std::exp2(std::log2(std::fabs(w)) - eta * g * s);
}

double update_sign_mul(double w, double g, double eta) {
    return update_mul(w, sign0(g), eta);
}

OptimizerState OptimizerState::make(Algorithm alg, double eta,
                                    const std::vector<Mat>& params) {
    OptimizerState st;
    st.algorithm = alg;
    st.eta = eta;
    for (const Mat& p : params) st.second_moment.emplace_back(p.rows, p.cols);
    return st;
}

Mat madam_normalize(OptimizerState& state, size_t param_index, const Mat& g) {
    if (state.step_count < 1) throw UsageError("optimizer step not started");
    Mat& g2 = state.second_moment.at(param_index);
    if (g2.d.size() != g.d.size()) throw UsageError("gradient shape mismatch");
    double correction = 1.0 - std::pow(state.beta2, double(state.step_count));
    Mat out(g.rows, g.cols);
    for (size_t i = 0; i < g.d.size(); ++i) {
        g2.d[i] = state.beta2 * g2.d[i] + (1.0 - state.beta2) * g.d[i] * g.d[i];
        double hat = g2.d[i] / correction;
        out.d[i] = g.d[i] / (std::sqrt(hat) + state.epsilon);
    }
    return out;
}

Mat apply_update(OptimizerState& state, size_t param_index, const Mat& w, const Mat& g) {
    Mat out(w.rows, w.cols);
    switch (state.algorithm) {
        case Algorithm::GD:
            for (size_t i = 0; i < w.d.size(); ++i) {
                out.d[i] = update_gd(w.d[i], g.d[i], state.eta);
            }
            break;
        case Algorithm::MUL:
            for (size_t i = 0; i < w.d.size(); ++i) {
                out.d[i] = update_mul(w.d[i], g.d[i], state.eta);
            }
            break;
        case Algorithm::SIGN_MUL:
            for (size_t i = 0; i < w.d.size(); ++i) {
                out.d[i] = update_sign_mul(w.d[i], g.d[i], state.eta);
            }
            break;
        case Algorithm::MADAM: {
            Mat gstar = madam_normalize(state, param_index, g);
            for (size_t i = 0; i < w.d.size(); ++i) {
                // base-2 form of w * e^(-eta * sign(w) * g*)
                out.d[i] = update_mul(w.d[i], kLog2E * gstar.d[i], state.eta);
            }
            break;
        }
    }
    return out;
}

LnsFormat matched_update_format(const LnsFormat& forward, int update_bitwidth) {
    if (update_bitwidth < forward.bitwidth) {
        throw ConfigError("weight-update bitwidth must be >= the forward bitwidth");
    }
    int shift = update_bitwidth - forward.bitwidth;
    return make_format(update_bitwidth, forward.base_factor << shift);
}

WeightStore make_weight_store(const Mat& w0, const QuantizerConfig& qu,
                              const LnsFormat& forward_format, StorageMode mode,
                              double scale_headroom) {
    if (qu.role != Role::QU) throw ConfigError("weight store needs a QU quantizer");
    if (qu.format.bitwidth < forward_format.bitwidth) {
        throw ConfigError("QU bitwidth below the forward weight bitwidth");
    }
    if (qu.format.b < forward_format.b) {
        throw ConfigError("QU base factor below the forward base factor");
    }
    WeightStore store;
    store.mode = mode;
    store.qu = qu;
    store.forward_format = forward_format;
    double max_abs = 0.0;
    for (double v : w0.d) max_abs = std::max(max_abs, std::fabs(v));
    double scale = max_abs > 0.0 ? max_abs * scale_headroom : 1.0;

    store.lns.shape = w0.shape();
    store.lns.format = qu.format;
    store.lns.granularity = Granularity::PerTensor;
    store.lns.scales = {scale};
    store.lns.elems.resize(w0.d.size());
    for (size_t i = 0; i < w0.d.size(); ++i) {
        store.lns.elems[i] = log_quantize(w0.d[i], qu.format, scale);
    }
    if (mode == StorageMode::Shadow) store.shadow = w0;
    return store;
}

Mat forward_weights(const WeightStore& store) {
    const LnsFormat& qu_fmt = store.qu.format;
    const LnsFormat& fwd = store.forward_format;
    int shift = qu_fmt.b - fwd.b;
    Mat out(store.lns.shape.at(0), store.lns.shape.at(1));
    for (size_t i = 0; i < out.d.size(); ++i) {
        const LnsScalar& e = store.lns.elems[i];
        if (e.zero) continue;
        LnsScalar f;
        f.sign = e.sign;
        f.exponent = std::min(e.exponent >> shift, fwd.max_exponent());
        out.d[i] = decode(f, fwd, store.scale());
    }
    return out;
}

namespace {

void requantize_reals(WeightStore& store, const Mat& w, Rng* rng) {
    Rng* use = store.qu.rounding.kind == RoundKind::Stochastic ? rng : nullptr;
    if (store.qu.rounding.kind == RoundKind::Stochastic && rng == nullptr) {
        throw UsageError("stochastic QU rounding requires a generator");
    }
    for (size_t i = 0; i < w.d.size(); ++i) {
        store.lns.elems[i] =
            log_quantize(w.d[i], store.qu.format, store.scale(), store.qu.rounding.kind, use);
    }
}

}  // namespace

void quantized_update(WeightStore& store, OptimizerState& state, size_t param_index,
                      const Mat& g, Rng* rng) {
    if (g.d.size() != store.lns.numel()) throw UsageError("gradient shape mismatch");
    if (store.mode == StorageMode::Shadow) {
        store.shadow = apply_update(state, param_index, store.shadow, g);
        requantize_reals(store, store.shadow, rng);
        return;
    }
    // Direct LNS updates
    const LnsFormat& qu_fmt = store.qu.format;
    double gamma_u = double(qu_fmt.base_factor);
    double max_e = double(qu_fmt.max_exponent());
    switch (state.algorithm) {
        case Algorithm::SIGN_MUL:
        case Algorithm::MADAM: {
            Mat gstar;
            if (state.algorithm == Algorithm::MADAM) {
                gstar = madam_normalize(state, param_index, g);
            }
            Rng* use = store.qu.rounding.kind == RoundKind::Stochastic ? rng : nullptr;
            if (store.qu.rounding.kind == RoundKind::Stochastic && rng == nullptr) {
                throw UsageError("stochastic QU rounding requires a generator");
            }
            for (size_t i = 0; i < store.lns.elems.size(); ++i) {
                LnsScalar& e = store.lns.elems[i];
                if (e.zero) continue;
                double step;  // exponent grows when the magnitude shrinks
                if (state.algorithm == Algorithm::SIGN_MUL) {
                    step = state.eta * gamma_u * sign0(g.d[i]) * double(e.sign);
                } else {
                    step = state.eta * gamma_u * kLog2E * gstar.d[i] * double(e.sign);
                }
                double rounded =
                    round_value(double(e.exponent) + step, store.qu.rounding.kind, use);
                e.exponent = uint32_t(std::clamp(rounded, 0.0, max_e));
            }
            break;
        }
        case Algorithm::GD:
        case Algorithm::MUL: {
            Mat w(store.lns.shape.at(0), store.lns.shape.at(1));
            w.d = decode_tensor(store.lns);
            requantize_reals(store, apply_update(state, param_index, w, g), rng);
            break;
        }
    }
}

}  // namespace lns
