#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "monas/adam.hpp"
#include "monas/clock.hpp"
#include "monas/model.hpp"
#include "monas/pareto.hpp"
#include "monas/space.hpp"
#include "monas/tasks.hpp"

namespace monas {

// Weight-sharing training strategies:
//   Standard:     every step trains the full network on cross-entropy.
//   Random:       every step trains one uniformly sampled subnetwork.
//   RandomLinear: per step, train a random subnetwork with probability p
//                 (p rises linearly from 0 to 1 over the run), else the
//                 full network.
//   Sandwich:     accumulate gradients from the largest, the smallest and
//                 k random subnetworks, then take one optimizer step.
//   Kd:           k random subnetworks per step, each trained on
//                 cross-entropy plus KL against the current full network's
//                 softened logits (teacher read-only).
//   Full:         sandwich rule where the largest network trains on plain
//                 cross-entropy and the smallest + k random subnetworks
//                 distill from the largest network's same-step logits.
enum class TrainStrategy { Standard, Random, RandomLinear, Sandwich, Kd, Full };

std::string to_string(TrainStrategy s);
TrainStrategy train_strategy_from_string(const std::string& name);

struct TrainOptions {
    TrainStrategy strategy = TrainStrategy::Standard;
    int k = 2;                  // random subnetworks per step
    double temperature = 10.0;  // distillation temperature
    int epochs = 5;
    double lr = 1e-3;
    int batch_size = 16;
    SpaceKind space = SpaceKind::Large;  // space subnetworks are sampled from
    uint64_t seed = 0;
    ExecPolicy policy = ExecPolicy::Serial;

    void validate() const;
};

struct TrainReport {
    std::string strategy;
    uint64_t seed = 0;
    int epochs = 0;
    int steps = 0;
    long long grad_passes = 0;       // masked forward/backward passes taken
    std::vector<double> loss_trace;  // mean pass loss per optimizer step
    double wallclock_s = 0.0;        // virtual seconds spent
    std::string checkpoint;          // path, when the caller saved one

    // In-memory instrumentation, not serialized: the configs whose masks
    // took a gradient pass in each step (pass order), and how many steps
    // took the random-subnet branch under the random-linear strategy.
    std::vector<std::vector<SubNetConfig>> step_configs;
    long long random_branch_steps = 0;
};

nlohmann::ordered_json to_json(const TrainReport& report);

// Trains `net` in place. Advances `clock` (when given) by the virtual cost
// of every pass; the report carries the total cost either way.
TrainReport train_supernet(SuperNetwork& net, const TaskData& task, const TrainOptions& opt,
                           VirtualClock* clock = nullptr);

// f0 = validation error rate under the config's mask, f1 = parameter
// count. Read-only on weights.
Objective evaluate_subnet(const SuperNetwork& net, const SearchSpace& space, const SubNetConfig& cfg,
                          const TaskData& task, ExecPolicy policy = ExecPolicy::Serial);

// Clones the pretrained weights and fine-tunes under a fixed mask with
// cross-entropy. Supports incremental epoch targets so successive-halving
// schedulers can resume a run at its last completed epoch.
class StandaloneFinetune {
  public:
    StandaloneFinetune(const SuperNetwork& pretrained, const SearchSpace& space, const SubNetConfig& cfg,
                       const TaskData& task, const TrainOptions& opt);

    // Continues training up to `epoch_target` total epochs, then evaluates.
    Objective run_to_epoch(int epoch_target);
    int completed_epochs() const { return completed_epochs_; }
    double virtual_cost() const { return cost_; }  // cumulative, all work so far

  private:
    const TaskData& task_;
    SearchSpace space_;
    SubNetConfig cfg_;
    TrainOptions opt_;
    SuperNetwork net_;
    MaskPair mask_;
    std::unique_ptr<Adam> adam_;
    Rng rng_;
    std::vector<int> order_;  // persists so resumed runs replay the exact epoch permutations
    double rel_ = 1.0;
    int completed_epochs_ = 0;
    double cost_ = 0.0;
    CostModel cost_model_;
};

Objective finetune_subnet_standalone(const SuperNetwork& pretrained, const SearchSpace& space, const SubNetConfig& cfg,
                                     const TaskData& task, const TrainOptions& opt, VirtualClock* clock = nullptr);

}  // namespace monas
