#include "monas/searchers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "monas/errors.hpp"
#include "monas/gp.hpp"
#include "monas/rng.hpp"

namespace monas {

namespace {

bool budget_left(const SearchContext& ctx, const Evaluator& ev, long long evals_done) {
    if (ctx.budget.max_evals >= 0 && evals_done >= ctx.budget.max_evals) return false;
    return ev.now() < ctx.budget.wallclock_s;
}

void note(const SearchContext& ctx, const std::string& msg) {
    if (ctx.log != nullptr && ctx.log->on_note) ctx.log->on_note(msg);
}

// Evaluates, archives and reports one config; returns false when the
// evaluator failed (failure logged, iteration skipped).
bool run_eval(const SearchContext& ctx, Evaluator& ev, ParetoArchive& archive, const SubNetConfig& cfg,
              int fidelity, Objective* out = nullptr) {
    Objective obj;
    try {
        obj = ev.evaluate(cfg, fidelity);
    } catch (const Error& e) {
        note(ctx, std::string("evaluation failed, skipping: ") + e.what());
        return false;
    }
    archive.append(cfg, obj, ev.now());
    if (ctx.log != nullptr && ctx.log->on_eval) {
        ctx.log->on_eval(EvalRecord{cfg, obj, fidelity, ev.now()});
    }
    if (out != nullptr) *out = obj;
    return true;
}

}  // namespace

ParetoArchive random_search(const SearchContext& ctx, Evaluator& ev) {
    require(ctx.budget.wallclock_s > 0.0, "search.budget", "wallclock budget must be positive");
    ParetoArchive archive(ctx.space);
    Rng rng(ctx.seed);
    long long evals = 0;
    while (budget_left(ctx, ev, evals)) {
        const SubNetConfig cfg = ctx.space.sample_uniform(rng);
        run_eval(ctx, ev, archive, cfg, ev.full_fidelity());
        ++evals;
    }
    return archive;
}

ParetoArchive local_search(const SearchContext& ctx, Evaluator& ev, const SubNetConfig* start) {
    require(ctx.budget.wallclock_s > 0.0, "search.budget", "wallclock budget must be positive");
    ParetoArchive archive(ctx.space);
    Rng rng(ctx.seed);
    const SubNetConfig first = start != nullptr ? *start : ctx.space.max_config();
    ctx.space.validate(first);
    long long evals = 0;
    if (budget_left(ctx, ev, evals)) {
        run_eval(ctx, ev, archive, first, ev.full_fidelity());
        ++evals;
    }
    while (budget_left(ctx, ev, evals)) {
        if (archive.front_indices().empty()) {
            // nothing evaluated successfully yet; retry from a fresh sample
            run_eval(ctx, ev, archive, ctx.space.sample_uniform(rng), ev.full_fidelity());
            ++evals;
            continue;
        }
        const auto& front = archive.front_indices();
        const int pick = front[rng.uniform_int(0, static_cast<int>(front.size()) - 1)];
        const SubNetConfig cfg = ctx.space.mutate(archive.entries()[pick].config, rng);
        run_eval(ctx, ev, archive, cfg, ev.full_fidelity());
        ++evals;
    }
    return archive;
}

ParetoArchive mo_rea(const SearchContext& ctx, Evaluator& ev, int population_size, int sample_size) {
    require(population_size >= sample_size && sample_size >= 1, "search.rea",
            "population size must be at least the sample size, which must be at least 1");
    require(ctx.budget.wallclock_s > 0.0, "search.budget", "wallclock budget must be positive");
    ParetoArchive archive(ctx.space);
    Rng rng(ctx.seed);
    long long evals = 0;

    struct Member {
        SubNetConfig cfg;
        Objective obj;
    };
    std::deque<Member> population;

    while (static_cast<int>(population.size()) < population_size && budget_left(ctx, ev, evals)) {
        const SubNetConfig cfg = ctx.space.sample_uniform(rng);
        Objective obj;
        if (run_eval(ctx, ev, archive, cfg, ev.full_fidelity(), &obj)) population.push_back({cfg, obj});
        ++evals;
    }

    while (budget_left(ctx, ev, evals)) {
        if (population.empty()) break;
        const int n = static_cast<int>(population.size());
        const int take = std::min(sample_size, n);
        const std::vector<int> picked = rng.sample_indices(n, take);
        std::vector<Objective> objs;
        for (int i : picked) objs.push_back(population[i].obj);
        const std::vector<int> ranks = nondominated_sort(objs);
        int best_rank = ranks[0];
        for (int r : ranks) best_rank = std::min(best_rank, r);
        std::vector<int> best;
        for (size_t i = 0; i < picked.size(); ++i) {
            if (ranks[i] == best_rank) best.push_back(picked[i]);
        }
        const int parent = best[rng.uniform_int(0, static_cast<int>(best.size()) - 1)];
        const SubNetConfig child = ctx.space.mutate(population[parent].cfg, rng);
        Objective obj;
        if (run_eval(ctx, ev, archive, child, ev.full_fidelity(), &obj)) {
            population.push_back({child, obj});
            if (static_cast<int>(population.size()) > population_size) population.pop_front();
        }
        ++evals;
    }
    return archive;
}

namespace {

// Quantile-normalizes both objective coordinates of the archive; front and
// normalizers come back ready for hypervolume work under r=(2,2).
struct NormalizedState {
    QuantileNormalizer qf0, qf1;
    std::vector<Objective> front_sorted;  // normalized, sorted by f0
    double hv = 0.0;
    bool ready = false;
};

NormalizedState normalize_archive(const ParetoArchive& archive, const RefPoint& ref) {
    NormalizedState st;
    if (archive.size() < 2) return st;
    std::vector<double> f0s, f1s;
    for (const auto& e : archive.entries()) {
        f0s.push_back(e.obj.f0);
        f1s.push_back(e.obj.f1);
    }
    st.qf0.fit(f0s);
    st.qf1.fit(f1s);
    std::vector<Objective> norm;
    for (int i : archive.front_indices()) {
        const auto& e = archive.entries()[i];
        norm.push_back({st.qf0.transform(e.obj.f0), st.qf1.transform(e.obj.f1)});
    }
    std::vector<int> keep = pareto_front_indices(norm);  // ties may collapse under normalization
    for (int i : keep) st.front_sorted.push_back(norm[i]);
    std::sort(st.front_sorted.begin(), st.front_sorted.end(),
              [](const Objective& a, const Objective& b) { return a.f0 < b.f0 || (a.f0 == b.f0 && a.f1 < b.f1); });
    st.hv = hypervolume(st.front_sorted, ref);
    st.ready = true;
    return st;
}

}  // namespace

ParetoArchive ehvi_search(const SearchContext& ctx, Evaluator& ev, const EhviOptions& opt) {
    require(opt.init_points >= 2, "search.ehvi", "EHVI needs at least 2 initial points");
    require(opt.candidates >= 1 && opt.mc_samples >= 1, "search.ehvi",
            "candidate and Monte-Carlo sample counts must be positive");
    require(ctx.budget.wallclock_s > 0.0, "search.budget", "wallclock budget must be positive");

    const RefPoint ref{2.0, 2.0};
    ParetoArchive archive(ctx.space);
    Rng rng(ctx.seed);
    long long evals = 0;

    for (int i = 0; i < opt.init_points && budget_left(ctx, ev, evals); ++i) {
        run_eval(ctx, ev, archive, ctx.space.sample_uniform(rng), ev.full_fidelity());
        ++evals;
    }

    while (budget_left(ctx, ev, evals)) {
        const NormalizedState st = normalize_archive(archive, ref);
        bool model_ready = st.ready;
        GpPair gp;
        if (model_ready) {
            std::vector<std::vector<double>> xs;
            std::vector<std::array<double, 2>> ys;
            for (const auto& e : archive.entries()) {
                xs.push_back(ctx.space.encode_unit(e.config));
                ys.push_back({e.obj.f0, e.obj.f1});
            }
            gp.fit(xs, ys, rng.next_u64(), opt.hyper_draws);
            if (!gp.ok()) {
                note(ctx, "GP fit failed at maximum jitter; falling back to a uniform proposal");
                model_ready = false;
            }
        }
        if (!model_ready) {
            run_eval(ctx, ev, archive, ctx.space.sample_uniform(rng), ev.full_fidelity());
            ++evals;
            continue;
        }

        SubNetConfig best_cfg;
        double best_score = -1.0;
        for (int c = 0; c < opt.candidates; ++c) {
            const SubNetConfig cand = ctx.space.sample_uniform(rng);
            std::array<double, 2> mean, var;
            gp.predict(ctx.space.encode_unit(cand), mean, var);
            const double sd0 = std::sqrt(var[0]);
            const double sd1 = std::sqrt(var[1]);
            double acc = 0.0;
            for (int s = 0; s < opt.mc_samples; ++s) {
                Objective y;
                y.f0 = st.qf0.transform(mean[0] + sd0 * rng.normal(0.0, 1.0));
                y.f1 = st.qf1.transform(mean[1] + sd1 * rng.normal(0.0, 1.0));
                acc += hypervolume_gain(st.front_sorted, y, ref);
            }
            const double score = acc / opt.mc_samples;
            if (score > best_score) {
                best_score = score;
                best_cfg = cand;
            }
        }
        run_eval(ctx, ev, archive, best_cfg, ev.full_fidelity());
        ++evals;
    }
    return archive;
}

void RungSchedule::validate() const {
    require(r_min >= 1, "search.rungs", "r_min must be at least 1");
    require(eta >= 2, "search.rungs", "eta must be at least 2");
    require(r_max >= r_min, "search.rungs", "r_max must be at least r_min");
    long long r = r_min;
    while (r < r_max) r *= eta;
    require(r == r_max, "search.rungs", "r_max must equal r_min * eta^K for an integer K");
}

std::vector<int> RungSchedule::rungs() const {
    validate();
    std::vector<int> out;
    for (long long r = r_min; r <= r_max; r *= eta) out.push_back(static_cast<int>(r));
    return out;
}

ParetoArchive mo_asha(const SearchContext& ctx, Evaluator& ev, const RungSchedule& schedule,
                      std::vector<AshaEvent>* trace) {
    schedule.validate();
    require(ctx.budget.wallclock_s > 0.0, "search.budget", "wallclock budget must be positive");
    const std::vector<int> rungs = schedule.rungs();
    const int levels = static_cast<int>(rungs.size());

    struct ConfigState {
        SubNetConfig cfg;
        std::vector<Objective> obj_at;        // per completed rung level
        int highest = -1;                     // highest completed rung level
        double completed_clock = 0.0;         // clock at the latest completion
        std::vector<uint8_t> promoted_from;   // per rung level
        ConfigState(const SubNetConfig& c, int lv) : cfg(c), obj_at(lv), promoted_from(lv, 0) {}
    };
    std::vector<ConfigState> configs;
    std::vector<std::vector<int>> completed(levels);  // config indices per rung level

    Rng rng(ctx.seed);
    long long evals = 0;
    const RefPoint ref{2.0, 2.0};

    // Ordering of a rung's completed configs: nondominated-sort rank, then
    // exclusive HV contribution on the rung's quantile-normalized
    // objectives, then a uniform shuffle of exact ties.
    auto rung_order = [&](int level) {
        const std::vector<int>& cs = completed[level];
        std::vector<Objective> objs;
        for (int ci : cs) objs.push_back(configs[ci].obj_at[level]);
        const std::vector<int> ranks = nondominated_sort(objs);
        std::vector<double> contrib(cs.size(), 0.0);
        if (cs.size() >= 2) {
            QuantileNormalizer qf0, qf1;
            std::vector<double> f0s, f1s;
            for (const Objective& o : objs) {
                f0s.push_back(o.f0);
                f1s.push_back(o.f1);
            }
            qf0.fit(f0s);
            qf1.fit(f1s);
            std::vector<Objective> norm;
            for (const Objective& o : objs) norm.push_back({qf0.transform(o.f0), qf1.transform(o.f1)});
            contrib = hv_contributions(norm, ref);
        }
        std::vector<int> order(cs.size());
        for (size_t i = 0; i < cs.size(); ++i) order[i] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (ranks[a] != ranks[b]) return ranks[a] < ranks[b];
            return contrib[a] > contrib[b];
        });
        // uniform tie-break inside runs of exactly equal (rank, contribution)
        size_t i = 0;
        while (i < order.size()) {
            size_t j = i;
            while (j + 1 < order.size() && ranks[order[j + 1]] == ranks[order[i]] &&
                   contrib[order[j + 1]] == contrib[order[i]]) {
                ++j;
            }
            if (j > i) {
                std::vector<int> run(order.begin() + i, order.begin() + j + 1);
                rng.shuffle(run);
                std::copy(run.begin(), run.end(), order.begin() + i);
            }
            i = j + 1;
        }
        std::vector<int> out;
        for (int idx : order) out.push_back(cs[idx]);
        return out;
    };

    auto complete = [&](int config_index, int level, const std::string& kind) -> bool {
        ConfigState& cs = configs[config_index];
        Objective obj;
        try {
            obj = ev.evaluate(cs.cfg, rungs[level]);
        } catch (const Error& e) {
            note(ctx, std::string("evaluation failed, skipping: ") + e.what());
            return false;
        }
        cs.obj_at[level] = obj;
        cs.highest = level;
        cs.completed_clock = ev.now();
        completed[level].push_back(config_index);
        if (ctx.log != nullptr && ctx.log->on_eval) {
            ctx.log->on_eval(EvalRecord{cs.cfg, obj, rungs[level], ev.now()});
        }
        if (trace != nullptr) trace->push_back(AshaEvent{kind, cs.cfg, rungs[level], obj});
        return true;
    };

    while (budget_left(ctx, ev, evals)) {
        int promote_index = -1;
        int promote_level = -1;
        for (int k = levels - 2; k >= 0 && promote_index < 0; --k) {
            const int quota = static_cast<int>(completed[k].size()) / schedule.eta;
            if (quota == 0) continue;
            const std::vector<int> order = rung_order(k);
            for (int pos = 0; pos < quota; ++pos) {
                if (!configs[order[pos]].promoted_from[k]) {
                    promote_index = order[pos];
                    promote_level = k;
                    break;
                }
            }
        }
        if (promote_index >= 0) {
            configs[promote_index].promoted_from[promote_level] = 1;
            complete(promote_index, promote_level + 1, "promote");
        } else {
            const SubNetConfig cfg = ctx.space.sample_uniform(rng);
            configs.emplace_back(cfg, levels);
            complete(static_cast<int>(configs.size()) - 1, 0, "start");
        }
        ++evals;
    }

    ParetoArchive archive(ctx.space);
    for (const ConfigState& cs : configs) {
        if (cs.highest >= 0) archive.append(cs.cfg, cs.obj_at[cs.highest], cs.completed_clock);
    }
    return archive;
}

}  // namespace monas
