#pragma once

#include <map>
#include <memory>
#include <string>

#include "monas/clock.hpp"
#include "monas/pareto.hpp"
#include "monas/space.hpp"
#include "monas/tasks.hpp"
#include "monas/train.hpp"

namespace monas {

// Evaluation contract for searchers: map (config, fidelity) to objectives.
// Implementations own a virtual clock and advance it by the cost of each
// evaluation; the same (config, fidelity) always yields the same result.
class Evaluator {
  public:
    virtual ~Evaluator() = default;

    // fidelity_epochs is the total-epoch target for fidelity-aware
    // implementations; shared-weights and synthetic evaluators ignore it.
    virtual Objective evaluate(const SubNetConfig& cfg, int fidelity_epochs) = 0;

    // The fidelity searchers should request when they want a final answer
    // (0 for evaluators without a fidelity axis).
    virtual int full_fidelity() const = 0;

    double now() const { return clock_.now(); }

  protected:
    VirtualClock clock_;
    CostModel cost_;
};

// Scores configs against a fixed (typically supernet-trained) set of
// weights with a single validation pass. Fidelity-free.
class SharedWeightsEvaluator : public Evaluator {
  public:
    SharedWeightsEvaluator(const SuperNetwork& net, const SearchSpace& space, const TaskData& task,
                           ExecPolicy policy = ExecPolicy::Serial);
    Objective evaluate(const SubNetConfig& cfg, int fidelity_epochs) override;
    int full_fidelity() const override { return 0; }

  private:
    const SuperNetwork& net_;
    SearchSpace space_;
    const TaskData& task_;
    ExecPolicy policy_;
    double full_params_;
};

// Clones the pretrained weights per config and fine-tunes under the
// config's mask. Fidelity-aware: higher epoch targets resume the same run,
// so successive-halving promotions only pay for the additional epochs.
class FinetuneEvaluator : public Evaluator {
  public:
    FinetuneEvaluator(const SuperNetwork& pretrained, const SearchSpace& space, const TaskData& task,
                      const TrainOptions& opt);
    Objective evaluate(const SubNetConfig& cfg, int fidelity_epochs) override;
    int full_fidelity() const override { return opt_.epochs; }

  private:
    const SuperNetwork& pretrained_;
    SearchSpace space_;
    const TaskData& task_;
    TrainOptions opt_;
    std::map<std::string, std::unique_ptr<StandaloneFinetune>> runs_;
};

// Closed-form deterministic objectives for searcher tests and benchmarks
// without model training: f0 decays smoothly with a weighted mean of the
// config's normalized coordinates, f1 is the parameter count. Each
// evaluation costs a fixed virtual second count.
class SyntheticEvaluator : public Evaluator {
  public:
    explicit SyntheticEvaluator(const SearchSpace& space, double cost_per_eval = 1.0);
    Objective evaluate(const SubNetConfig& cfg, int fidelity_epochs) override;
    int full_fidelity() const override { return 0; }
    Objective score(const SubNetConfig& cfg) const;  // pure, no clock

  private:
    SearchSpace space_;
    double cost_per_eval_;
};

// Fixed lookup table keyed by (config, fidelity); missing entries are an
// error. Used to freeze objectives in schedule tests.
class TableEvaluator : public Evaluator {
  public:
    TableEvaluator(double cost_per_eval, int full_fidelity_epochs)
        : cost_per_eval_(cost_per_eval), full_(full_fidelity_epochs) {}
    void set(const SubNetConfig& cfg, int fidelity_epochs, const Objective& obj);
    Objective evaluate(const SubNetConfig& cfg, int fidelity_epochs) override;
    int full_fidelity() const override { return full_; }

  private:
    std::map<std::string, Objective> table_;
    double cost_per_eval_;
    int full_;
};

}  // namespace monas
