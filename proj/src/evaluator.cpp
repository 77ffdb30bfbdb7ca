#include "monas/evaluator.hpp"

#include <cmath>

#include "monas/errors.hpp"

namespace monas {

SharedWeightsEvaluator::SharedWeightsEvaluator(const SuperNetwork& net, const SearchSpace& space, const TaskData& task,
                                               ExecPolicy policy)
    : net_(net), space_(space), task_(task), policy_(policy) {
    full_params_ = static_cast<double>(space_.param_count(space_.max_config()));
}

Objective SharedWeightsEvaluator::evaluate(const SubNetConfig& cfg, int /*fidelity_epochs*/) {
    const Objective obj = evaluate_subnet(net_, space_, cfg, task_, policy_);
    clock_.advance(cost_.eval_cost(task_.val.size(), obj.f1 / full_params_));
    return obj;
}

FinetuneEvaluator::FinetuneEvaluator(const SuperNetwork& pretrained, const SearchSpace& space, const TaskData& task,
                                     const TrainOptions& opt)
    : pretrained_(pretrained), space_(space), task_(task), opt_(opt) {
    opt_.validate();
}

Objective FinetuneEvaluator::evaluate(const SubNetConfig& cfg, int fidelity_epochs) {
    require(fidelity_epochs >= 0, "eval.fidelity", "fidelity epoch target must be non-negative");
    const std::string key = to_json(space_.canonical(cfg)).dump();
    auto it = runs_.find(key);
    if (it == runs_.end()) {
        it = runs_.emplace(key, std::make_unique<StandaloneFinetune>(pretrained_, space_, cfg, task_, opt_)).first;
    }
    StandaloneFinetune& run = *it->second;
    const double before = run.virtual_cost();
    const Objective obj = run.run_to_epoch(fidelity_epochs);
    clock_.advance(run.virtual_cost() - before);
    return obj;
}

SyntheticEvaluator::SyntheticEvaluator(const SearchSpace& space, double cost_per_eval)
    : space_(space), cost_per_eval_(cost_per_eval) {
    require(cost_per_eval > 0.0, "eval.cost", "per-evaluation cost must be positive");
}

Objective SyntheticEvaluator::score(const SubNetConfig& cfg) const {
    const std::vector<double> x = space_.encode_unit(cfg);
    double acc = 0.0, wsum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double w = 1.0 / (1.0 + static_cast<double>(i));
        acc += w * x[i];
        wsum += w;
    }
    const double a = acc / wsum;
    Objective obj;
    obj.f0 = 0.05 + 0.9 * std::exp(-3.0 * a);
    obj.f1 = static_cast<double>(space_.param_count(cfg));
    return obj;
}

Objective SyntheticEvaluator::evaluate(const SubNetConfig& cfg, int /*fidelity_epochs*/) {
    const Objective obj = score(cfg);
    clock_.advance(cost_per_eval_);
    return obj;
}

void TableEvaluator::set(const SubNetConfig& cfg, int fidelity_epochs, const Objective& obj) {
    table_[to_json(cfg).dump() + "@" + std::to_string(fidelity_epochs)] = obj;
}

Objective TableEvaluator::evaluate(const SubNetConfig& cfg, int fidelity_epochs) {
    const std::string key = to_json(cfg).dump() + "@" + std::to_string(fidelity_epochs);
    const auto it = table_.find(key);
    require(it != table_.end(), "eval.missing", "no table entry for " + key);
    clock_.advance(cost_per_eval_);
    return it->second;
}

}  // namespace monas
