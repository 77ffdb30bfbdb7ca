#pragma once

#include <functional>
#include <string>
#include <vector>

#include "monas/evaluator.hpp"
#include "monas/pareto.hpp"
#include "monas/space.hpp"

namespace monas {

struct SearchBudget {
    double wallclock_s = 60.0;
    long long max_evals = -1;  // negative = unlimited
};

struct EvalRecord {
    SubNetConfig config;
    Objective obj;
    int fidelity_epochs = 0;
    double wallclock_s = 0.0;  // evaluator clock after the evaluation
};

struct SearchLog {
    std::function<void(const EvalRecord&)> on_eval;
    std::function<void(const std::string&)> on_note;
};

struct SearchContext {
    SearchSpace space;
    SearchBudget budget;
    uint64_t seed = 0;
    SearchLog* log = nullptr;

    SearchContext(const SearchSpace& sp, const SearchBudget& b, uint64_t sd) : space(sp), budget(b), seed(sd) {}
};

// All searchers stop before starting an evaluation that would begin at or
// past the wallclock budget; evaluator failures are logged and the
// iteration is skipped.

// Uniform sampling at full fidelity.
ParetoArchive random_search(const SearchContext& ctx, Evaluator& ev);

// Evaluate the start (default: the full network), then repeatedly pick a
// uniform member of the current front, mutate one coordinate, evaluate.
ParetoArchive local_search(const SearchContext& ctx, Evaluator& ev, const SubNetConfig* start = nullptr);

// Regularized evolution on the nondominated-sort rank: sample a subset of
// the population, mutate the best-ranked member (rank ties broken
// uniformly), evict the oldest once the population is full.
ParetoArchive mo_rea(const SearchContext& ctx, Evaluator& ev, int population_size = 20, int sample_size = 5);

struct EhviOptions {
    int init_points = 8;     // uniform evaluations before the model starts
    int candidates = 100;    // uniform candidate configs scored per iteration
    int mc_samples = 512;    // posterior draws per candidate
    int hyper_draws = 40;    // random-search iterations for GP hyperparameters
};

// Bayesian optimization with a shared-kernel GP over both objectives and a
// Monte-Carlo expected-hypervolume-improvement acquisition. Objectives are
// quantile-normalized to [0,1] with the running archive before any
// hypervolume is computed, with reference point (2,2). GP fit failures
// fall back to a uniform proposal for that iteration.
ParetoArchive ehvi_search(const SearchContext& ctx, Evaluator& ev, const EhviOptions& opt = {});

struct RungSchedule {
    int r_min = 1;
    int eta = 2;
    int r_max = 4;

    void validate() const;        // r_max = r_min * eta^K for an integer K >= 0
    std::vector<int> rungs() const;
};

struct AshaEvent {
    std::string kind;  // "start" (fresh config at r_min) or "promote"
    SubNetConfig config;
    int rung_epochs = 0;  // rung the action ran the config to
    Objective obj;        // objectives observed at that rung
};

// Asynchronous successive halving on nondominated-sort ranks, single
// decision loop. Promotion rule, applied whenever the worker is free:
// scanning rungs from highest to lowest, a config is promotable from rung
// k if it completed rung k, was not yet promoted, and sits within the
// first floor(n_k / eta) positions of the rung's completed configs ordered
// by (nondominated-sort rank, exclusive hypervolume contribution on the
// rung's quantile-normalized objectives, uniform random). If nothing is
// promotable, a fresh uniform config starts at r_min. The returned archive
// holds each config at its highest completed rung.
ParetoArchive mo_asha(const SearchContext& ctx, Evaluator& ev, const RungSchedule& schedule,
                      std::vector<AshaEvent>* trace = nullptr);

}  // namespace monas
