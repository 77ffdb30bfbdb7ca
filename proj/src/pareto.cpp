#include "monas/pareto.hpp"

#include <algorithm>
#include <cmath>

#include "monas/errors.hpp"
#include "monas/rng.hpp"

namespace monas {

bool dominates(const Objective& a, const Objective& b) {
    return a.f0 <= b.f0 && a.f1 <= b.f1 && (a.f0 < b.f0 || a.f1 < b.f1);
}

std::vector<int> nondominated_sort(const std::vector<Objective>& points) {
    const int n = static_cast<int>(points.size());
    std::vector<int> rank(n, -1);
    int assigned = 0;
    int current = 0;
    while (assigned < n) {
        std::vector<int> front;
        for (int i = 0; i < n; ++i) {
            if (rank[i] != -1) continue;
            bool dominated = false;
            for (int j = 0; j < n; ++j) {
                if (j == i || rank[j] != -1) continue;
                if (dominates(points[j], points[i])) {
                    dominated = true;
                    break;
                }
            }
            if (!dominated) front.push_back(i);
        }
        for (int i : front) rank[i] = current;
        assigned += static_cast<int>(front.size());
        ++current;
    }
    return rank;
}

std::vector<int> pareto_front_indices(const std::vector<Objective>& points) {
    std::vector<int> out;
    const int n = static_cast<int>(points.size());
    for (int i = 0; i < n; ++i) {
        bool keep = true;
        for (int j = 0; j < n && keep; ++j) {
            if (j != i && dominates(points[j], points[i])) keep = false;
        }
        if (keep) out.push_back(i);
    }
    return out;
}

double hypervolume(const std::vector<Objective>& points, const RefPoint& ref) {
    std::vector<Objective> inside;
    for (const Objective& p : points) {
        require(std::isfinite(p.f0) && std::isfinite(p.f1), "pareto.nonfinite", "non-finite objective value");
        require(p.f0 >= 0.0 && p.f1 >= 0.0 && p.f0 <= ref.f0 && p.f1 <= ref.f1, "pareto.ref_box",
                "point outside the reference box");
        if (p.f0 < ref.f0 && p.f1 < ref.f1) inside.push_back(p);
    }
    if (inside.empty()) return 0.0;
    std::vector<int> idx = pareto_front_indices(inside);
    std::vector<Objective> front;
    for (int i : idx) front.push_back(inside[i]);
    std::sort(front.begin(), front.end(),
              [](const Objective& a, const Objective& b) { return a.f0 < b.f0 || (a.f0 == b.f0 && a.f1 < b.f1); });
    double hv = 0.0;
    double prev_f1 = ref.f1;
    for (const Objective& p : front) {
        if (p.f1 >= prev_f1) continue;  // exact duplicate on the front
        hv += (ref.f0 - p.f0) * (prev_f1 - p.f1);
        prev_f1 = p.f1;
    }
    return hv;
}

double hypervolume_regret(const std::vector<Objective>& points, double best_possible_hv, const RefPoint& ref) {
    const double diff = best_possible_hv - hypervolume(points, ref);
    require(diff >= -1e-9, "pareto.regret",
            "evaluated front exceeds the best possible hypervolume; the reference must cover it");
    return std::max(diff, 0.0);
}

std::vector<double> hv_contributions(const std::vector<Objective>& points, const RefPoint& ref) {
    const double total = hypervolume(points, ref);
    std::vector<double> out(points.size(), 0.0);
    for (size_t i = 0; i < points.size(); ++i) {
        std::vector<Objective> rest;
        for (size_t j = 0; j < points.size(); ++j) {
            if (j != i) rest.push_back(points[j]);
        }
        out[i] = total - hypervolume(rest, ref);
    }
    return out;
}

double hypervolume_gain(const std::vector<Objective>& front_sorted, const Objective& y, const RefPoint& ref) {
    require(y.f0 >= 0.0 && y.f1 >= 0.0 && y.f0 <= ref.f0 && y.f1 <= ref.f1, "pareto.ref_box",
            "point outside the reference box");
    if (y.f0 >= ref.f0 || y.f1 >= ref.f1) return 0.0;
    // cur = lowest f1 among front points with f0 <= x, i.e. the existing
    // coverage height left of x; the new point adds area where cur > y.f1.
    double cur = ref.f1;
    double x = y.f0;
    double gain = 0.0;
    size_t i = 0;
    while (i < front_sorted.size() && front_sorted[i].f0 <= y.f0) {
        cur = std::min(cur, front_sorted[i].f1);
        ++i;
    }
    for (; i < front_sorted.size() && cur > y.f1; ++i) {
        const double x_next = std::min(front_sorted[i].f0, ref.f0);
        if (x_next > x) {
            gain += (x_next - x) * (cur - y.f1);
            x = x_next;
        }
        cur = std::min(cur, front_sorted[i].f1);
    }
    if (cur > y.f1 && ref.f0 > x) gain += (ref.f0 - x) * (cur - y.f1);
    return gain;
}

void QuantileNormalizer::fit(std::vector<double> values) {
    require(values.size() >= 2, "quantile.too_few", "quantile normalization needs at least 2 pooled values");
    for (double v : values) require(std::isfinite(v), "quantile.nonfinite", "non-finite value in quantile fit");
    std::sort(values.begin(), values.end());
    xs_.clear();
    qs_.clear();
    const size_t n = values.size();
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[j + 1] == values[i]) ++j;
        const double mean_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j));
        xs_.push_back(values[i]);
        qs_.push_back(mean_rank / static_cast<double>(n - 1));
        i = j + 1;
    }
}

double QuantileNormalizer::transform(double v) const {
    require(fitted(), "quantile.unfitted", "quantile normalizer used before fit");
    require(std::isfinite(v), "quantile.nonfinite", "non-finite value in quantile transform");
    if (v <= xs_.front()) return qs_.front();
    if (v >= xs_.back()) return qs_.back();
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), v);
    const size_t hi = static_cast<size_t>(it - xs_.begin());
    const size_t lo = hi - 1;
    if (xs_[lo] == v) return qs_[lo];
    const double t = (v - xs_[lo]) / (xs_[hi] - xs_[lo]);
    const double q = qs_[lo] + t * (qs_[hi] - qs_[lo]);
    return std::clamp(q, 0.0, 1.0);
}

int ParetoArchive::append(const SubNetConfig& config, const Objective& obj, double wallclock_s, int seed) {
    require(std::isfinite(obj.f0) && std::isfinite(obj.f1), "pareto.nonfinite", "non-finite objective value");
    Entry e;
    e.config = space_.has_value() ? space_->canonical(config) : config;
    e.obj = obj;
    e.wallclock_s = wallclock_s;
    e.seed = seed;
    const int index = static_cast<int>(entries_.size());
    entries_.push_back(std::move(e));

    for (int f : front_) {
        if (dominates(entries_[f].obj, obj)) return index;
    }
    std::vector<int> kept;
    for (int f : front_) {
        if (!dominates(obj, entries_[f].obj)) kept.push_back(f);
    }
    kept.push_back(index);
    front_ = std::move(kept);
    return index;
}

std::vector<Objective> ParetoArchive::front_objectives() const {
    std::vector<Objective> out;
    for (int i : front_) out.push_back(entries_[i].obj);
    return out;
}

bool ParetoArchive::on_front(int index) const {
    return std::find(front_.begin(), front_.end(), index) != front_.end();
}

void Trace::add(double t, double v) {
    require(time.empty() || t >= time.back(), "trace.order", "trace observations must have nondecreasing times");
    time.push_back(t);
    value.push_back(v);
}

double trace_value_at(const Trace& trace, double t, double before) {
    const auto it = std::upper_bound(trace.time.begin(), trace.time.end(), t);
    if (it == trace.time.begin()) return before;
    return trace.value[static_cast<size_t>(it - trace.time.begin()) - 1];
}

namespace {

// 1-based ranks, best (largest value) first, ties share the mean rank.
std::vector<double> rank_desc(const std::vector<double>& values) {
    const int n = static_cast<int>(values.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });
    std::vector<double> ranks(n, 0.0);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean = 0.5 * (i + j) + 1.0;
        for (int k = i; k <= j; ++k) ranks[order[k]] = mean;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

RankResult average_ranks(const std::vector<RankInput>& inputs, const std::vector<double>& grid, int bootstrap_draws,
                         uint64_t seed) {
    require(!inputs.empty(), "ranks.empty", "no traces given");
    require(!grid.empty(), "ranks.empty", "empty time grid");
    require(bootstrap_draws > 0, "ranks.draws", "bootstrap draw count must be positive");

    std::vector<std::string> methods, tasks;
    for (const RankInput& in : inputs) {
        if (std::find(methods.begin(), methods.end(), in.method) == methods.end()) methods.push_back(in.method);
        if (std::find(tasks.begin(), tasks.end(), in.task) == tasks.end()) tasks.push_back(in.task);
    }
    require(methods.size() >= 2, "ranks.methods", "average ranks need at least 2 methods");
    std::sort(methods.begin(), methods.end());
    std::sort(tasks.begin(), tasks.end());

    // cell[task][method] = indices of seeds available for that pair
    std::vector<std::vector<std::vector<int>>> cell(tasks.size(), std::vector<std::vector<int>>(methods.size()));
    for (size_t i = 0; i < inputs.size(); ++i) {
        const size_t ti = std::find(tasks.begin(), tasks.end(), inputs[i].task) - tasks.begin();
        const size_t mi = std::find(methods.begin(), methods.end(), inputs[i].method) - methods.begin();
        cell[ti][mi].push_back(static_cast<int>(i));
    }
    for (size_t t = 0; t < tasks.size(); ++t) {
        for (size_t m = 0; m < methods.size(); ++m) {
            require(!cell[t][m].empty(), "ranks.missing_cell",
                    "no trace for task " + tasks[t] + " and method " + methods[m]);
        }
    }

    RankResult result;
    result.grid = grid;
    for (const std::string& m : methods) result.mean_rank[m].assign(grid.size(), 0.0);

    Rng rng(seed);
    std::vector<double> hv_at(methods.size());
    for (int draw = 0; draw < bootstrap_draws; ++draw) {
        // one seed pick per (task, method) cell, shared across grid times
        std::vector<std::vector<int>> picked(tasks.size(), std::vector<int>(methods.size()));
        for (size_t t = 0; t < tasks.size(); ++t) {
            for (size_t m = 0; m < methods.size(); ++m) {
                const auto& pool = cell[t][m];
                picked[t][m] = pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
            }
        }
        for (size_t g = 0; g < grid.size(); ++g) {
            std::vector<double> rank_sum(methods.size(), 0.0);
            for (size_t t = 0; t < tasks.size(); ++t) {
                for (size_t m = 0; m < methods.size(); ++m) {
                    hv_at[m] = trace_value_at(inputs[picked[t][m]].hv, grid[g], 0.0);
                }
                const std::vector<double> ranks = rank_desc(hv_at);
                for (size_t m = 0; m < methods.size(); ++m) rank_sum[m] += ranks[m];
            }
            for (size_t m = 0; m < methods.size(); ++m) {
                result.mean_rank[methods[m]][g] += rank_sum[m] / tasks.size();
            }
        }
    }
    for (auto& [method, ranks] : result.mean_rank) {
        for (double& r : ranks) r /= bootstrap_draws;
    }
    return result;
}

}  // namespace monas
