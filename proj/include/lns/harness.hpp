#ifndef LNS_HARNESS_HPP
#define LNS_HARNESS_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "lns/config.hpp"
#include "lns/data.hpp"
#include "lns/error_analysis.hpp"

namespace lns {

constexpr int kReportSchemaVersion = 1;

struct StepMetric {
    int step = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainOutcome {
    std::vector<StepMetric> curve;
    double final_loss = 0.0;
    double final_accuracy = 0.0;
    uint64_t saturations = 0;
    uint64_t zero_weight_updates = 0;  // weight elements left unchanged by an update
    OperationTally tally;
};

Dataset make_dataset(const DatasetSpec& spec, Rng& rng);

/// Deterministic toy training run; all randomness derives from `seed`.
TrainOutcome train_run(const ExperimentConfig& cfg, uint64_t seed);

// Each command returns the RunReport JSON. Failed validation throws; a
// command whose *result* fails (e.g. conformance mismatch) reports
// "passed": false and the CLI exits nonzero.
nlohmann::json cmd_train(const ExperimentConfig& cfg);
nlohmann::json cmd_base_factor_sweep(const ExperimentConfig& cfg);
nlohmann::json cmd_qu_bitwidth_sweep(const ExperimentConfig& cfg);
nlohmann::json cmd_theorem_check(const ExperimentConfig& cfg);
nlohmann::json cmd_datapath_conformance(const ExperimentConfig& cfg,
                                        const std::string& golden_path);
nlohmann::json cmd_tally_report(const ExperimentConfig& cfg);

bool report_passed(const nlohmann::json& report);

}  // namespace lns

#endif
