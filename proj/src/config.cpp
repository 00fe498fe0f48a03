#include "lns/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lns {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.contains(key)) {
            throw ConfigError(where + ": unknown field '" + key + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

Activation parse_activation(const std::string& s) {
    if (s == "none") return Activation::None;
    if (s == "relu") return Activation::ReLU;
    if (s == "gelu") return Activation::GeLU;
    throw ConfigError("unknown activation '" + s + "'");
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::None:
            return "none";
        case Activation::ReLU:
            return "relu";
        case Activation::GeLU:
            return "gelu";
    }
    return "?";
}

RoundKind parse_rounding(const std::string& s) {
    if (s == "nearest") return RoundKind::NearestEven;
    if (s == "stochastic") return RoundKind::Stochastic;
    throw ConfigError("unknown rounding mode '" + s + "'");
}

Granularity parse_granularity(const std::string& s) {
    if (s == "per-tensor") return Granularity::PerTensor;
    if (s == "per-channel") return Granularity::PerChannel;
    if (s == "per-feature") return Granularity::PerFeature;
    throw ConfigError("unknown granularity '" + s + "'");
}

const char* granularity_name(Granularity g) {
    switch (g) {
        case Granularity::PerTensor:
            return "per-tensor";
        case Granularity::PerChannel:
            return "per-channel";
        case Granularity::PerFeature:
            return "per-feature";
    }
    return "?";
}

ConversionKind parse_conversion(const std::string& s) {
    if (s == "real") return ConversionKind::RealReference;
    if (s == "exact") return ConversionKind::ExactDatapath;
    if (s == "hybrid") return ConversionKind::Hybrid;
    throw ConfigError("unknown conversion mode '" + s + "'");
}

const char* conversion_name(ConversionKind c) {
    switch (c) {
        case ConversionKind::RealReference:
            return "real";
        case ConversionKind::ExactDatapath:
            return "exact";
        case ConversionKind::Hybrid:
            return "hybrid";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& s) {
    if (s == "gd") return Algorithm::GD;
    if (s == "mul") return Algorithm::MUL;
    if (s == "sign_mul") return Algorithm::SIGN_MUL;
    if (s == "madam") return Algorithm::MADAM;
    throw ConfigError("unknown algorithm '" + s + "'");
}

const char* algorithm_string(Algorithm a) {
    switch (a) {
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

}  // namespace

ExperimentConfig parse_config_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"task", "seed", "threads", "out", "network", "quantizers", "optimizer",
                "dataset", "train", "sweep"});
    ExperimentConfig cfg;
    read(j, "task", cfg.task);
    read(j, "seed", cfg.seed);
    read(j, "threads", cfg.threads);
    read(j, "out", cfg.out);

    if (j.contains("network")) {
        const json& n = j["network"];
        check_keys(n, "network", {"hidden", "activation"});
        read(n, "hidden", cfg.network.hidden);
        if (n.contains("activation")) {
            cfg.network.activation = parse_activation(n["activation"].get<std::string>());
        }
    }
    if (j.contains("quantizers")) {
        const json& q = j["quantizers"];
        check_keys(q, "quantizers",
                   {"enabled", "bitwidth", "gamma", "rounding", "granularity", "conversion",
                    "hybrid_msb_bits"});
        read(q, "enabled", cfg.quantizers.enabled);
        read(q, "bitwidth", cfg.quantizers.bitwidth);
        read(q, "gamma", cfg.quantizers.gamma);
        if (q.contains("rounding")) {
            cfg.quantizers.rounding = parse_rounding(q["rounding"].get<std::string>());
        }
        if (q.contains("granularity")) {
            cfg.quantizers.granularity = parse_granularity(q["granularity"].get<std::string>());
        }
        if (q.contains("conversion")) {
            cfg.quantizers.conversion = parse_conversion(q["conversion"].get<std::string>());
        }
        read(q, "hybrid_msb_bits", cfg.quantizers.hybrid_msb_bits);
    }
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        check_keys(o, "optimizer",
                   {"algorithm", "eta", "beta2", "storage", "qu_bitwidth", "qu_rounding",
                    "warmup_steps", "warmup_lr"});
        if (o.contains("algorithm")) {
            cfg.optimizer.algorithm = parse_algorithm(o["algorithm"].get<std::string>());
        }
        read(o, "eta", cfg.optimizer.eta);
        read(o, "beta2", cfg.optimizer.beta2);
        read(o, "storage", cfg.optimizer.storage);
        read(o, "qu_bitwidth", cfg.optimizer.qu_bitwidth);
        if (o.contains("qu_rounding")) {
            cfg.optimizer.qu_rounding = parse_rounding(o["qu_rounding"].get<std::string>());
        }
        read(o, "warmup_steps", cfg.optimizer.warmup_steps);
        read(o, "warmup_lr", cfg.optimizer.warmup_lr);
        if (cfg.optimizer.storage != "full" && cfg.optimizer.storage != "shadow" &&
            cfg.optimizer.storage != "direct") {
            throw ConfigError("optimizer.storage must be full, shadow or direct");
        }
    }
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        check_keys(d, "dataset", {"kind", "samples", "classes", "features", "noise"});
        read(d, "kind", cfg.dataset.kind);
        read(d, "samples", cfg.dataset.samples);
        read(d, "classes", cfg.dataset.classes);
        read(d, "features", cfg.dataset.features);
        read(d, "noise", cfg.dataset.noise);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        check_keys(t, "train", {"steps", "batch", "record_every"});
        read(t, "steps", cfg.train.steps);
        read(t, "batch", cfg.train.batch);
        read(t, "record_every", cfg.train.record_every);
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        check_keys(s, "sweep", {"gamma_grid", "qu_bitwidths", "optimizers", "steps"});
        read(s, "gamma_grid", cfg.sweep.gamma_grid);
        read(s, "qu_bitwidths", cfg.sweep.qu_bitwidths);
        if (s.contains("optimizers")) {
            cfg.sweep.optimizers.clear();
            for (const auto& name : s["optimizers"]) {
                cfg.sweep.optimizers.push_back(parse_algorithm(name.get<std::string>()));
            }
        }
        read(s, "steps", cfg.sweep.steps);
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["task"] = cfg.task;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["out"] = cfg.out;
    j["network"] = {{"hidden", cfg.network.hidden},
                    {"activation", activation_name(cfg.network.activation)}};
    j["quantizers"] = {
        {"enabled", cfg.quantizers.enabled},
        {"bitwidth", cfg.quantizers.bitwidth},
        {"gamma", cfg.quantizers.gamma},
        {"rounding",
         cfg.quantizers.rounding == RoundKind::Stochastic ? "stochastic" : "nearest"},
        {"granularity", granularity_name(cfg.quantizers.granularity)},
        {"conversion", conversion_name(cfg.quantizers.conversion)},
        {"hybrid_msb_bits", cfg.quantizers.hybrid_msb_bits}};
    j["optimizer"] = {
        {"algorithm", algorithm_string(cfg.optimizer.algorithm)},
        {"eta", cfg.optimizer.eta},
        {"beta2", cfg.optimizer.beta2},
        {"storage", cfg.optimizer.storage},
        {"qu_bitwidth", cfg.optimizer.qu_bitwidth},
        {"qu_rounding",
         cfg.optimizer.qu_rounding == RoundKind::Stochastic ? "stochastic" : "nearest"},
        {"warmup_steps", cfg.optimizer.warmup_steps},
        {"warmup_lr", cfg.optimizer.warmup_lr}};
    j["dataset"] = {{"kind", cfg.dataset.kind},
                    {"samples", cfg.dataset.samples},
                    {"classes", cfg.dataset.classes},
                    {"features", cfg.dataset.features},
                    {"noise", cfg.dataset.noise}};
    j["train"] = {{"steps", cfg.train.steps},
                  {"batch", cfg.train.batch},
                  {"record_every", cfg.train.record_every}};
    json opts = json::array();
    for (Algorithm a : cfg.sweep.optimizers) opts.push_back(algorithm_string(a));
    j["sweep"] = {{"gamma_grid", cfg.sweep.gamma_grid},
                  {"qu_bitwidths", cfg.sweep.qu_bitwidths},
                  {"optimizers", opts},
                  {"steps", cfg.sweep.steps}};
    return j.dump(2);
}

LnsFormat forward_format(const QuantizerSpec& q) {
    return make_format(q.bitwidth, q.gamma);
}

QuantizerSet quantizer_set(const QuantizerSpec& q) {
    QuantizerSet qs;
    if (!q.enabled) return qs;  // all roles bypass
    LnsFormat fmt = forward_format(q);
    QuantizerConfig base;
    base.format = fmt;
    base.rounding = q.rounding == RoundKind::Stochastic ? RoundingMode::stochastic(1)
                                                        : RoundingMode::nearest();
    base.granularity = q.granularity;
    base.conversion = q.conversion;
    base.split = make_hybrid_split(fmt, std::min(q.hybrid_msb_bits, fmt.b));
    qs.qw = base;
    qs.qw.role = Role::QW;
    qs.qa = base;
    qs.qa.role = Role::QA;
    qs.qe = base;
    qs.qe.role = Role::QE;
    qs.qg = base;
    qs.qg.role = Role::QG;
    return qs;
}

}  // namespace lns
