#pragma once

#include "monas/errors.hpp"

namespace monas {

// Deterministic clock. All reported "wallclock" seconds in this project are
// virtual: evaluations and training advance the clock through the cost
// model below, so budgets, traces and metrics are exact functions of the
// configuration and seeds (reruns are byte-identical).
class VirtualClock {
  public:
    void advance(double seconds) {
        require(seconds >= 0.0, "clock.negative", "cannot advance the clock by a negative amount");
        t_ += seconds;
    }
    double now() const { return t_; }

  private:
    double t_ = 0.0;
};

// Virtual cost of model passes, scaled by the subnetwork's relative
// parameter count (rel = params(config) / params(full network)).
struct CostModel {
    double eval_base = 0.01;          // fixed overhead per evaluation
    double eval_per_example = 1e-3;   // forward pass, per example
    double train_per_example = 3e-3;  // forward+backward pass, per example

    double forward_cost(int examples, double rel) const { return eval_per_example * examples * rel; }
    double grad_cost(int examples, double rel) const { return train_per_example * examples * rel; }
    double eval_cost(int examples, double rel) const { return eval_base + forward_cost(examples, rel); }
    double epoch_cost(int train_examples, double rel) const { return grad_cost(train_examples, rel); }
};

}  // namespace monas
