#ifndef LNS_CONFIG_HPP
#define LNS_CONFIG_HPP

#include <string>
#include <vector>

#include "lns/autograd.hpp"
#include "lns/optim.hpp"

namespace lns {

struct NetworkSpec {
    std::vector<size_t> hidden = {32};
    Activation activation = Activation::ReLU;
};

/// Shared settings for the forward/backward quantizers (QW/QA/QE/QG);
/// enabled=false is the full-precision control arm.
struct QuantizerSpec {
    bool enabled = true;
    int bitwidth = 8;
    int gamma = 8;
    RoundKind rounding = RoundKind::NearestEven;
    Granularity granularity = Granularity::PerTensor;
    ConversionKind conversion = ConversionKind::RealReference;
    int hybrid_msb_bits = 2;
};

struct OptimizerSpec {
    Algorithm algorithm = Algorithm::MADAM;
    double eta = 0x1p-7;
    double beta2 = 0.999;
    // "full": plain full-precision parameters (no LNS store);
    // "shadow"/"direct": quantized weight updates through a WeightStore.
    std::string storage = "direct";
    int qu_bitwidth = 16;
    RoundKind qu_rounding = RoundKind::NearestEven;
    int warmup_steps = 0;  // optional GD warmup before multiplicative updates
    double warmup_lr = 0.1;
};

struct DatasetSpec {
    std::string kind = "digits";  // blobs | moons | digits
    int samples = 512;
    int classes = 8;
    int features = 64;
    double noise = 1.0;
};

struct TrainSpec {
    int steps = 400;
    int batch = 32;
    int record_every = 50;
};

struct SweepGrids {
    std::vector<int> gamma_grid = {2, 4, 8, 16, 32};
    std::vector<int> qu_bitwidths = {16, 14, 12, 10};
    std::vector<Algorithm> optimizers = {Algorithm::MADAM, Algorithm::GD};
    int steps = 150;
};

struct ExperimentConfig {
    std::string task = "train";
    uint64_t seed = 1;
    int threads = 1;
    std::string out;
    NetworkSpec network;
    QuantizerSpec quantizers;
    OptimizerSpec optimizer;
    DatasetSpec dataset;
    TrainSpec train;
    SweepGrids sweep;
};

/// Strict parse: unknown fields are rejected with a pointed message.
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// Serialization that round-trips through parse_config_string.
std::string config_to_json(const ExperimentConfig& cfg);

LnsFormat forward_format(const QuantizerSpec& q);
QuantizerSet quantizer_set(const QuantizerSpec& q);

}  // namespace lns

#endif
