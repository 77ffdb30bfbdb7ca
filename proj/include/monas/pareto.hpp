#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "monas/space.hpp"

namespace monas {

// A point in objective space; both coordinates are minimized
// (f0 = validation error, f1 = parameter count, possibly normalized).
struct Objective {
    double f0 = 0.0;
    double f1 = 0.0;
    bool operator==(const Objective&) const = default;
};

// a dominates b: no worse in both coordinates, strictly better in one.
bool dominates(const Objective& a, const Objective& b);

// Rank 0 is the nondominated front; removing ranks < k and re-peeling
// yields rank k. Quadratic peeling, fine for the archive sizes used here.
std::vector<int> nondominated_sort(const std::vector<Objective>& points);

// Indices of the nondominated points, in input order. Exact duplicates of
// a nondominated objective vector are all kept (they do not dominate each
// other), matching rank 0 of nondominated_sort.
std::vector<int> pareto_front_indices(const std::vector<Objective>& points);

struct RefPoint {
    double f0 = 2.0;
    double f1 = 2.0;
};

// Area dominated by the front and bounded by the reference point, by a
// sweep over the front sorted by f0. Every point must lie inside the
// reference box (coordinate-wise <= ref); points on the boundary
// contribute zero area.
double hypervolume(const std::vector<Objective>& points, const RefPoint& ref);

// best_possible_hv - HV(points). The reference value must be at least as
// large; a deficit beyond numerical noise is an error.
double hypervolume_regret(const std::vector<Objective>& points, double best_possible_hv, const RefPoint& ref);

// Exclusive contribution of each point: HV(all) - HV(all minus the point).
std::vector<double> hv_contributions(const std::vector<Objective>& points, const RefPoint& ref);

// HV(front ∪ {y}) - HV(front) in O(|front|). `front` must be nondominated
// and sorted by f0 ascending; y must lie inside the reference box.
double hypervolume_gain(const std::vector<Objective>& front_sorted, const Objective& y, const RefPoint& ref);

// Maps raw objective values to [0,1] by their quantile in a fitted sample.
// Ties share the mean of their ranks; {10,20,30} -> {0,0.5,1} and
// {5,5} -> {0.5,0.5}. Between fitted values the quantile is linearly
// interpolated; outside the fitted range it takes the boundary quantile.
class QuantileNormalizer {
  public:
    void fit(std::vector<double> values);
    double transform(double v) const;
    bool fitted() const { return !xs_.empty(); }

  private:
    std::vector<double> xs_;  // sorted, unique
    std::vector<double> qs_;
};

// Evaluation archive. Keeps the full history and an incrementally
// maintained nondominated front. When a space is attached, configs are
// canonicalized on insertion so aliases of the same subnetwork collapse.
class ParetoArchive {
  public:
    struct Entry {
        SubNetConfig config;
        Objective obj;
        double wallclock_s = 0.0;
        int seed = 0;
    };

    ParetoArchive() = default;
    explicit ParetoArchive(const SearchSpace& space) : space_(space) {}

    // Returns the entry index. The front is maintained incrementally and
    // equals rank 0 of nondominated_sort over the history at all times.
    int append(const SubNetConfig& config, const Objective& obj, double wallclock_s = 0.0, int seed = 0);
    const std::vector<Entry>& entries() const { return entries_; }
    const std::vector<int>& front_indices() const { return front_; }
    std::vector<Objective> front_objectives() const;
    bool on_front(int index) const;
    int size() const { return static_cast<int>(entries_.size()); }

  private:
    std::optional<SearchSpace> space_;
    std::vector<Entry> entries_;
    std::vector<int> front_;
};

// A left-continuous step function observed at increasing times; queries
// before the first observation return `before`.
struct Trace {
    std::vector<double> time;
    std::vector<double> value;
    void add(double t, double v);
};
double trace_value_at(const Trace& trace, double t, double before = 0.0);

struct RankInput {
    std::string method;
    std::string task;
    int seed = 0;
    Trace hv;
};

struct RankResult {
    std::vector<double> grid;
    std::map<std::string, std::vector<double>> mean_rank;  // method -> rank per grid time
};

// Bootstrapped average ranks over time: each draw picks one seed per
// (task, method) cell, ranks methods within each task by hypervolume at
// every grid time (rank 1 is best, ties share the mean rank), and averages
// across tasks; results are averaged over draws.
RankResult average_ranks(const std::vector<RankInput>& inputs, const std::vector<double>& grid, int bootstrap_draws,
                         uint64_t seed);

}  // namespace monas
