// Command-line front end for the LNS training/analysis harness.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lns/harness.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    int64_t seed = -1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", opts.out_path, "write the run report to this file");
    cmd->add_option("-s,--seed", opts.seed, "override the config seed");
    cmd->add_option("-t,--threads", opts.threads, "worker threads for sweeps");
}

lns::ExperimentConfig resolve_config(const CommonOpts& opts, const std::string& task) {
    lns::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = lns::load_config_file(opts.config_path);
    cfg.task = task;
    if (opts.seed >= 0) cfg.seed = uint64_t(opts.seed);
    if (opts.threads > 0) cfg.threads = opts.threads;
    if (!opts.out_path.empty()) cfg.out = opts.out_path;
    return cfg;
}

int emit(const nlohmann::json& report, const std::string& out_path) {
    std::string text = report.dump(2);
    if (!out_path.empty()) {
        std::ofstream os(out_path);
        if (!os) {
            std::cerr << "error: cannot write '" << out_path << "'\n";
            return 2;
        }
        os << text << '\n';
    }
    std::cout << text << '\n';
    return lns::report_passed(report) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-base LNS quantized training harness"};
    app.require_subcommand(1);

    CommonOpts train_opts, base_opts, qu_opts, thm_opts, conf_opts, tally_opts;
    std::string golden_path;

    auto* train = app.add_subcommand("train", "run one training experiment");
    add_common(train, train_opts);
    auto* base = app.add_subcommand("base-factor-sweep",
                                    "train across base factors and pick the best");
    add_common(base, base_opts);
    auto* qu = app.add_subcommand("qu-bitwidth-sweep",
                                  "train across update-format bitwidths and optimizers");
    add_common(qu, qu_opts);
    auto* thm = app.add_subcommand("theorem-check",
                                   "Monte-Carlo check of the quantization error bounds");
    add_common(thm, thm_opts);
    auto* conf = app.add_subcommand("datapath-conformance",
                                    "replay golden MAC vectors against the datapath");
    add_common(conf, conf_opts);
    conf->add_option("-g,--golden", golden_path, "golden vector file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* tly = app.add_subcommand("tally-report",
                                   "operation counts for the configured workload");
    add_common(tly, tally_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            auto cfg = resolve_config(train_opts, "train");
            return emit(lns::cmd_train(cfg), cfg.out);
        }
        if (base->parsed()) {
            auto cfg = resolve_config(base_opts, "base-factor-sweep");
            return emit(lns::cmd_base_factor_sweep(cfg), cfg.out);
        }
        if (qu->parsed()) {
            auto cfg = resolve_config(qu_opts, "qu-bitwidth-sweep");
            return emit(lns::cmd_qu_bitwidth_sweep(cfg), cfg.out);
        }
        if (thm->parsed()) {
            auto cfg = resolve_config(thm_opts, "theorem-check");
            return emit(lns::cmd_theorem_check(cfg), cfg.out);
        }
        if (conf->parsed()) {
            auto cfg = resolve_config(conf_opts, "datapath-conformance");
            return emit(lns::cmd_datapath_conformance(cfg, golden_path), cfg.out);
        }
        if (tly->parsed()) {
            auto cfg = resolve_config(tally_opts, "tally-report");
            return emit(lns::cmd_tally_report(cfg), cfg.out);
        }
    } catch (const lns::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
