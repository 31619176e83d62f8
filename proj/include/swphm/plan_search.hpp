#pragma once

#include "swphm/prognosis.hpp"
#include "swphm/release_cluster.hpp"
#include "swphm/weighting.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace swphm {

enum class Strategy { exhaustive, greedy };

Strategy parse_strategy(std::string_view text);
std::string_view to_string(Strategy strategy);

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

/// Release index (0-based) for each backlog item, in backlog order.
using Allocation = std::vector<int>;

struct PlanSpec {
    std::vector<WeightedItem> backlog;
    int horizon = 1;
    EnvironmentSpec base_env;
    /// Environment upgrades keyed by release index. An override stays in
    /// effect for later releases until the next override.
    std::map<int, EnvironmentSpec> env_overrides;
    Strategy strategy = Strategy::exhaustive;
    std::vector<std::string> versions; // optional names, one per release

    void validate() const;
    EnvironmentSpec env_for(int release) const;
    std::string version_for(int release) const;
};

/// Everything an evaluation needs besides the allocation itself.
struct PlanContext {
    ModelSet models;
    EnvironmentSpec baseline_env; // environment the regression was fitted on
    EnvAdjustment adjustment;
    double current_cpv = 0.0;
    RtThreshold threshold;
    const ReleaseClusterer* clusterer = nullptr; // used only with per-cluster models
};

struct PlanResult {
    Allocation allocation;
    std::vector<PlannedRelease> releases;
    RulEstimate rul;

    double final_rt_ms() const { return rul.trajectory.empty() ? 0.0 : rul.trajectory.back().rt_ms; }
};

/// True when `a` ranks strictly above `b`: more releases of life, then lower
/// final RT, then the lexicographically smaller allocation.
bool ranks_above(const PlanResult& a, const PlanResult& b);

/// horizon^n_items, or an Error(cap_exceeded) when it exceeds `cap`.
std::uint64_t allocation_count(std::size_t n_items, int horizon, std::uint64_t cap = kDefaultEnumerationCap);

/// Allocation number `index` in lexicographic order (item 0 most significant).
Allocation allocation_at(std::uint64_t index, std::size_t n_items, int horizon);

/// Visits all allocations in lexicographic order. Stops early if the
/// visitor returns false.
void enumerate_allocations(std::size_t n_items, int horizon, const std::function<bool(const Allocation&)>& visit,
                           std::uint64_t cap = kDefaultEnumerationCap);

std::vector<PlannedRelease> planned_releases(const Allocation& allocation, const PlanSpec& spec,
                                             const PlanContext& context);

PlanResult evaluate_plan(const Allocation& allocation, const PlanSpec& spec, const PlanContext& context);

/// Exhaustive argmax over all allocations, or the greedy heuristic.
PlanResult best_plan(const PlanSpec& spec, const PlanContext& context, std::uint64_t cap = kDefaultEnumerationCap);

json to_json(const PlanResult& result, const PlanSpec& spec);

} // namespace swphm
