#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "monas/model.hpp"
#include "monas/pareto.hpp"
#include "monas/searchers.hpp"
#include "monas/space.hpp"
#include "monas/tasks.hpp"
#include "monas/train.hpp"

namespace monas {

// One experiment: a task, a search space over fixed model dims, a list of
// search methods, and a seed list. "ws" mode trains one super-network per
// seed and searches against its shared weights; "snas" mode fine-tunes
// every candidate standalone from the per-seed pretrained weights.
struct ExperimentConfig {
    std::string name = "experiment";
    TaskSpec task;
    ModelDims dims;
    SpaceKind space = SpaceKind::Large;
    std::vector<std::string> methods;
    std::string mode = "ws";  // "ws" or "snas"
    TrainOptions train;       // supernet training options (strategy, epochs, ...)
    int finetune_epochs = 5;  // snas fidelity target and ASHA r_max
    RungSchedule asha;
    SearchBudget budget;
    EhviOptions ehvi;
    int rea_population = 20;
    int rea_sample = 5;
    std::vector<int> seeds;
    std::string out;

    void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::string& path);

// One evaluation event of a search run, as serialized to history JSONL.
struct HistoryRecord {
    std::string method;
    std::string task;
    int seed = 0;
    SpaceKind space = SpaceKind::Small;
    SubNetConfig config;
    double f0 = 0.0;
    double f1 = 0.0;
    int fidelity_epochs = 0;
    double wallclock_s = 0.0;
};

nlohmann::ordered_json to_json(const HistoryRecord& rec);
HistoryRecord history_record_from_json(const nlohmann::json& j);

// Fine-tunes the full network and the L-1 "drop the top n layers" configs
// of the LAYER space, archiving each result. Exactly L points.
ParetoArchive layer_drop_baseline(const SuperNetwork& pretrained, const TaskData& task, const TrainOptions& opt,
                                  VirtualClock* clock = nullptr, SearchLog* log = nullptr);

struct ExperimentResult {
    std::string out_dir;
    std::vector<std::string> history_files;
    std::vector<std::string> failures;  // "method seed: message"
};

// Runs every (method, seed) cell, writes history JSONL files, then a
// serial metrics pass: pooled quantile normalization over all observed
// objectives, HV traces against r=(2,2), regret against the union front,
// and bootstrapped average ranks. Refuses to reuse an existing output
// directory unless `force`. A failing cell is recorded in failures.json
// and the remaining cells proceed.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool force);

// Reads a results directory produced by run_experiment and emits the CSV
// bundle behind the standard plots: per-run Pareto scatters, per-method
// regret traces, rank traces, and 500-sample parameter-count draws per
// space. Validates all inputs before writing anything; refuses to reuse
// an existing plots directory unless `force`.
void emit_plot_data(const std::string& results_dir, bool force = false);

}  // namespace monas
