#include "lns/harness.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace lns {

using nlohmann::json;

Dataset make_dataset(const DatasetSpec& spec, Rng& rng) {
    if (spec.kind == "blobs") return make_blobs(spec.samples, spec.noise, rng);
    if (spec.kind == "moons") return make_moons(spec.samples, spec.noise, rng);
    if (spec.kind == "digits") {
        return make_digits(spec.samples, spec.classes, spec.features, spec.noise, rng);
    }
    throw ConfigError("unknown dataset kind '" + spec.kind + "'");
}

namespace {

std::vector<LayerSpec> layer_specs(const NetworkSpec& net, size_t classes) {
    std::vector<LayerSpec> specs;
    for (size_t h : net.hidden) specs.push_back({0, h, net.activation});
    specs.push_back({0, classes, Activation::None});
    return specs;
}

Mat batch_rows(const Mat& x, const std::vector<size_t>& idx) {
    Mat out(idx.size(), x.cols);
    for (size_t i = 0; i < idx.size(); ++i) {
        for (size_t c = 0; c < x.cols; ++c) out.at(i, c) = x.at(idx[i], c);
    }
    return out;
}

}  // namespace

TrainOutcome train_run(const ExperimentConfig& cfg, uint64_t seed) {
    Rng data_rng(seed);
    Dataset ds = make_dataset(cfg.dataset, data_rng);
    Rng net_rng(seed ^ 0x9e3779b97f4a7c15ull);
    Network net = make_network(ds.x.cols, layer_specs(cfg.network, ds.classes), net_rng);
    QuantizerSet qs = quantizer_set(cfg.quantizers);
    LnsFormat fwd_fmt = forward_format(cfg.quantizers);
    MacConfig mac;
    mac.format = fwd_fmt;

    bool use_store = cfg.optimizer.storage != "full";
    OptimizerState state =
        OptimizerState::make(cfg.optimizer.algorithm, cfg.optimizer.eta, net.weights);
    state.beta2 = cfg.optimizer.beta2;
    OptimizerState warmup =
        OptimizerState::make(Algorithm::GD, cfg.optimizer.warmup_lr, net.weights);

    std::vector<WeightStore> stores;
    if (use_store) {
        QuantizerConfig qu;
        qu.role = Role::QU;
        qu.format = matched_update_format(fwd_fmt, cfg.optimizer.qu_bitwidth);
        qu.rounding = cfg.optimizer.qu_rounding == RoundKind::Stochastic
                          ? RoundingMode::stochastic(seed)
                          : RoundingMode::nearest();
        StorageMode mode =
            cfg.optimizer.storage == "direct" ? StorageMode::DirectLns : StorageMode::Shadow;
        for (const Mat& w : net.weights) {
            stores.push_back(make_weight_store(w, qu, fwd_fmt, mode));
        }
    }

    Rng batch_rng(seed ^ 0x6a09e667f3bcc909ull);
    Rng qu_rng(seed ^ 0xbb67ae8584caa73bull);

    auto effective_weights = [&]() {
        if (!use_store) return net.weights;
        std::vector<Mat> ws;
        ws.reserve(stores.size());
        for (const WeightStore& s : stores) ws.push_back(forward_weights(s));
        return ws;
    };

    TrainOutcome out;
    auto evaluate = [&](int step) {
        ForwardResult fr = use_store
                               ? forward_with_weights(net, effective_weights(), ds.x, qs, mac)
                               : forward(net, ds.x, qs, mac);
        LossResult loss = loss_softmax_xent(fr.logits, ds.labels);
        out.curve.push_back({step, loss.loss, accuracy(fr.logits, ds.labels)});
    };

    evaluate(0);
    for (int step = 1; step <= cfg.train.steps; ++step) {
        std::vector<size_t> idx(size_t(std::max(1, cfg.train.batch)));
        for (size_t& i : idx) i = size_t(batch_rng() % ds.x.rows);
        Mat xb = batch_rows(ds.x, idx);
        std::vector<int> yb(idx.size());
        for (size_t i = 0; i < idx.size(); ++i) yb[i] = ds.labels[idx[i]];

        ForwardResult fr = use_store
                               ? forward_with_weights(net, effective_weights(), xb, qs, mac)
                               : forward(net, xb, qs, mac);
        out.tally += fr.tally;
        out.saturations += fr.saturations;
        LossResult loss = loss_softmax_xent(fr.logits, yb);
        GradientBundle grads = backward(net, loss.grad, fr.caches, qs);

        OptimizerState& st = step <= cfg.optimizer.warmup_steps ? warmup : state;
        st.begin_step();
        for (size_t l = 0; l < net.weights.size(); ++l) {
            if (use_store) {
                std::vector<LnsScalar> before = stores[l].lns.elems;
                quantized_update(stores[l], st, l, grads.weight_grads[l], &qu_rng);
                for (size_t i = 0; i < before.size(); ++i) {
                    if (before[i] == stores[l].lns.elems[i]) ++out.zero_weight_updates;
                }
            } else {
                Mat next = apply_update(st, l, net.weights[l], grads.weight_grads[l]);
                for (size_t i = 0; i < next.d.size(); ++i) {
                    if (next.d[i] == net.weights[l].d[i]) ++out.zero_weight_updates;
                }
                net.weights[l] = std::move(next);
            }
        }
        if (cfg.train.record_every > 0 && step % cfg.train.record_every == 0 &&
            step != cfg.train.steps) {
            evaluate(step);
        }
    }
    if (cfg.train.steps > 0) evaluate(cfg.train.steps);
    out.final_loss = out.curve.back().loss;
    out.final_accuracy = out.curve.back().accuracy;
    return out;
}

namespace {

json base_report(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["task"] = cfg.task;
    j["config"] = json::parse(config_to_json(cfg));
    j["passed"] = true;
    return j;
}

json outcome_json(const TrainOutcome& out) {
    json j;
    json curve = json::array();
    for (const StepMetric& m : out.curve) {
        curve.push_back({{"step", m.step}, {"loss", m.loss}, {"accuracy", m.accuracy}});
    }
    j["curve"] = std::move(curve);
    j["final"] = {{"loss", out.final_loss}, {"accuracy", out.final_accuracy}};
    j["counters"] = {{"saturations", out.saturations},
                     {"zero_weight_updates", out.zero_weight_updates}};
    json tally = json::object();
    for (const auto& [k, v] : out.tally.counts) tally[k] = v;
    j["tally"] = std::move(tally);
    return j;
}

}  // namespace

json cmd_train(const ExperimentConfig& cfg) {
    json j = base_report(cfg);
    j["result"] = outcome_json(train_run(cfg, cfg.seed));
    return j;
}

json cmd_base_factor_sweep(const ExperimentConfig& cfg) {
    if (cfg.sweep.gamma_grid.empty()) throw ConfigError("base-factor sweep grid is empty");
    std::vector<int> grid = cfg.sweep.gamma_grid;
    std::sort(grid.begin(), grid.end());
    json rows = json::array();
    int best_gamma = 0;
    double best_acc = -1.0;
    for (int gamma : grid) {
        ExperimentConfig point = cfg;
        point.quantizers.enabled = true;
        point.quantizers.gamma = gamma;
        point.train.steps = cfg.sweep.steps;
        TrainOutcome out = train_run(point, cfg.seed);
        rows.push_back({{"gamma", gamma}, {"accuracy", out.final_accuracy}});
        if (out.final_accuracy > best_acc) {  // ties keep the smallest gamma
            best_acc = out.final_accuracy;
            best_gamma = gamma;
        }
    }
    json j = base_report(cfg);
    j["result"] = {{"rows", rows}, {"selected_gamma", best_gamma}, {"accuracy", best_acc}};
    return j;
}

json cmd_qu_bitwidth_sweep(const ExperimentConfig& cfg) {
    if (cfg.sweep.qu_bitwidths.empty() || cfg.sweep.optimizers.empty()) {
        throw ConfigError("QU sweep needs bitwidths and optimizers");
    }
    for (int bits : cfg.sweep.qu_bitwidths) {
        if (bits < cfg.quantizers.bitwidth) {
            throw ConfigError("QU bitwidth " + std::to_string(bits) +
                              " below the forward bitwidth");
        }
    }
    json rows = json::array();
    for (Algorithm alg : cfg.sweep.optimizers) {
        for (int bits : cfg.sweep.qu_bitwidths) {
            ExperimentConfig point = cfg;
            point.optimizer.algorithm = alg;
            point.optimizer.qu_bitwidth = bits;
            point.optimizer.storage = "direct";
            point.train.steps = cfg.sweep.steps;
            TrainOutcome out = train_run(point, cfg.seed);
            rows.push_back({{"optimizer", algorithm_name(alg)},
                            {"qu_bitwidth", bits},
                            {"accuracy", out.final_accuracy}});
        }
    }
    json j = base_report(cfg);
    j["result"] = {{"rows", rows}};
    return j;
}

json cmd_theorem_check(const ExperimentConfig& cfg) {
    SweepSpec eta_sweep = SweepSpec::default_eta_sweep();
    SweepSpec gamma_sweep = SweepSpec::default_gamma_sweep();
    eta_sweep.seed = cfg.seed;
    gamma_sweep.seed = cfg.seed + 1;
    eta_sweep.threads = cfg.threads;
    gamma_sweep.threads = cfg.threads;

    std::vector<ErrorRecord> records = run_sweep(eta_sweep);
    std::vector<ErrorRecord> gamma_records = run_sweep(gamma_sweep);
    records.insert(records.end(), gamma_records.begin(), gamma_records.end());

    bool all_pass = true;
    json rows = json::array();
    for (const ErrorRecord& r : records) {
        all_pass = all_pass && r.pass();
        rows.push_back({{"algorithm", algorithm_name(r.algorithm)},
                        {"eta", r.eta},
                        {"gamma", r.gamma},
                        {"d", r.dimension},
                        {"trials", r.trials},
                        {"mean_r", r.mean_error},
                        {"bound", r.bound},
                        {"pass", r.pass()}});
    }
    json j = base_report(cfg);
    j["passed"] = all_pass;
    j["result"] = {{"rows", rows}, {"csv", sweep_csv(records)}};
    return j;
}

json cmd_datapath_conformance(const ExperimentConfig& cfg, const std::string& golden_path) {
    std::ifstream in(golden_path);
    if (!in) throw DataError("cannot open golden file '" + golden_path + "'");
    MacConfig mac;
    mac.format = forward_format(cfg.quantizers);
    RemainderLut lut = build_remainder_lut(mac.format, mac.fractional_bits);

    json mismatches = json::array();
    int vectors = 0;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line[0] == '#') {
            // optional directive: "# accumulator_bits N" widens the partial sum
            std::istringstream is(line);
            std::string hash, key;
            int bits = 0;
            if (is >> hash >> key >> bits && key == "accumulator_bits") {
                if (bits < 2 || bits > 62) {
                    throw DataError("line " + std::to_string(line_number) +
                                    ": bad accumulator_bits");
                }
                mac.accumulator_bits = bits;
            }
            continue;
        }
        GoldenVector v = parse_golden_line(line, line_number);
        PartialSum ps = mac_dot_product(std::span(v.a), std::span(v.b), mac,
                                        ConversionMode::exact());
        ++vectors;
        if (ps.value != v.expected) {
            json lanes = json::array();
            for (size_t i = 0; i < v.a.size(); ++i) {
                ProductTerm p = lns_multiply(v.a[i], v.b[i]);
                lanes.push_back({{"lane", i},
                                 {"exponent_sum", p.zero ? -1 : int(p.exponent_sum)},
                                 {"converted", exact_convert(p, mac.format, lut)}});
            }
            mismatches.push_back({{"line", line_number},
                                  {"expected", v.expected},
                                  {"actual", ps.value},
                                  {"lanes", lanes}});
        }
    }
    json j = base_report(cfg);
    j["passed"] = mismatches.empty();
    j["result"] = {{"vectors", vectors}, {"mismatches", mismatches}};
    if (vectors == 0) j["result"]["warning"] = "golden file contained no test vectors";
    return j;
}

json cmd_tally_report(const ExperimentConfig& cfg) {
    LnsFormat fmt = forward_format(cfg.quantizers);
    MacConfig mac;
    mac.format = fmt;

    std::vector<LayerSpec> specs = layer_specs(cfg.network, size_t(cfg.dataset.classes));
    size_t in = size_t(cfg.dataset.features);
    for (LayerSpec& s : specs) {
        s.in = in;
        in = s.out;
    }

    std::vector<ConversionMode> modes = {ConversionMode::exact()};
    for (int bm = 0; bm <= fmt.b; ++bm) {
        modes.push_back(ConversionMode::hybrid(make_hybrid_split(fmt, bm)));
    }

    json mode_rows = json::array();
    for (const ConversionMode& mode : modes) {
        OperationTally total;
        json passes = json::array();
        for (MacPass pass :
             {MacPass::Forward, MacPass::BackwardInput, MacPass::BackwardWeight}) {
            uint64_t dots = 0;
            for (const LayerSpec& s : specs) {
                dots += dot_products_for(pass, size_t(cfg.train.batch), s.in, s.out,
                                         mac.vector_size);
            }
            OperationTally t = tally(dots, mac, mode);
            total += t;
            json tj = json::object();
            for (const auto& [k, v] : t.counts) tj[k] = v;
            passes.push_back({{"pass", mac_pass_name(pass)},
                              {"buffer_a", buffer_a_operand(pass)},
                              {"buffer_b", buffer_b_operand(pass)},
                              {"dot_products", dots},
                              {"tally", tj}});
        }
        json tj = json::object();
        for (const auto& [k, v] : total.counts) tj[k] = v;
        uint64_t bins = mode.kind == ConversionKind::Hybrid
                            ? (uint64_t(1) << mode.split.msb_bits)
                            : uint64_t(fmt.base_factor);
        mode_rows.push_back(
            {{"mode", mode.kind == ConversionKind::Hybrid
                          ? "hybrid-bm" + std::to_string(mode.split.msb_bits)
                          : "exact"},
             {"lut_multiplies_per_output", bins},
             {"passes", passes},
             {"total", tj}});
    }
    json j = base_report(cfg);
    j["result"] = {{"modes", mode_rows}};
    return j;
}

bool report_passed(const json& report) { return report.value("passed", true); }

}  // namespace lns
