#include "swphm/plan_search.hpp"

#include "swphm/error.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_set>

namespace swphm {

Strategy parse_strategy(std::string_view text) {
    if (text == "exhaustive") return Strategy::exhaustive;
    if (text == "greedy") return Strategy::greedy;
    fail(ErrorCode::validation, "unknown strategy '" + std::string(text) + "' (expected exhaustive or greedy)");
}

std::string_view to_string(Strategy strategy) {
    return strategy == Strategy::exhaustive ? "exhaustive" : "greedy";
}

void PlanSpec::validate() const {
    if (horizon < 1) fail(ErrorCode::validation, "plan horizon must be at least 1");
    base_env.validate();
    for (const auto& [index, env] : env_overrides) {
        if (index < 0 || index >= horizon) {
            fail(ErrorCode::validation, "environment override for release " + std::to_string(index) +
                                            " is outside the horizon");
        }
        env.validate();
    }
    if (!versions.empty() && versions.size() != static_cast<std::size_t>(horizon)) {
        fail(ErrorCode::validation, "plan lists " + std::to_string(versions.size()) + " version names for horizon " +
                                        std::to_string(horizon));
    }
    std::unordered_set<std::string> ids;
    for (const auto& item : backlog) {
        if (!ids.insert(item.item_id).second) {
            fail(ErrorCode::validation, "plan backlog lists item '" + item.item_id + "' twice");
        }
    }
}

EnvironmentSpec PlanSpec::env_for(int release) const {
    EnvironmentSpec env = base_env;
    for (const auto& [index, override_env] : env_overrides) {
        if (index > release) break;
        env = override_env;
    }
    return env;
}

std::string PlanSpec::version_for(int release) const {
    if (!versions.empty()) return versions.at(static_cast<std::size_t>(release));
    return "R" + std::to_string(release + 1);
}

bool ranks_above(const PlanResult& a, const PlanResult& b) {
    if (a.rul.rul_releases != b.rul.rul_releases) return a.rul.rul_releases > b.rul.rul_releases;
    const double fa = a.final_rt_ms();
    const double fb = b.final_rt_ms();
    if (fa != fb) return fa < fb;
    return a.allocation < b.allocation;
}

std::uint64_t allocation_count(std::size_t n_items, int horizon, std::uint64_t cap) {
    if (horizon < 1) fail(ErrorCode::validation, "plan horizon must be at least 1");
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < n_items; ++i) {
        if (count > cap / static_cast<std::uint64_t>(horizon)) {
            fail(ErrorCode::cap_exceeded, std::to_string(horizon) + "^" + std::to_string(n_items) +
                                              " allocations exceed the enumeration cap of " + std::to_string(cap) +
                                              "; use the greedy strategy");
        }
        count *= static_cast<std::uint64_t>(horizon);
    }
    if (count > cap) {
        fail(ErrorCode::cap_exceeded, "allocation count exceeds the enumeration cap; use the greedy strategy");
    }
    return count;
}

Allocation allocation_at(std::uint64_t index, std::size_t n_items, int horizon) {
    Allocation a(n_items, 0);
    const auto h = static_cast<std::uint64_t>(horizon);
    for (std::size_t i = n_items; i-- > 0;) {
        a[i] = static_cast<int>(index % h);
        index /= h;
    }
    return a;
}

namespace {

// Odometer step in lexicographic order; false after the last allocation.
bool advance(Allocation& a, int horizon) {
    for (std::size_t i = a.size(); i-- > 0;) {
        if (++a[i] < horizon) return true;
        a[i] = 0;
    }
    return false;
}

} // namespace

void enumerate_allocations(std::size_t n_items, int horizon, const std::function<bool(const Allocation&)>& visit,
                           std::uint64_t cap) {
    allocation_count(n_items, horizon, cap);
    Allocation a(n_items, 0);
    do {
        if (!visit(a)) return;
    } while (advance(a, horizon));
}

std::vector<PlannedRelease> planned_releases(const Allocation& allocation, const PlanSpec& spec,
                                             const PlanContext& context) {
    if (allocation.size() != spec.backlog.size()) {
        fail(ErrorCode::validation, "allocation covers " + std::to_string(allocation.size()) + " items, backlog has " +
                                        std::to_string(spec.backlog.size()));
    }
    const auto h = static_cast<std::size_t>(spec.horizon);
    std::vector<std::vector<WeightedItem>> per_release(h);
    for (std::size_t i = 0; i < allocation.size(); ++i) {
        if (allocation[i] < 0 || allocation[i] >= spec.horizon) {
            fail(ErrorCode::validation, "item '" + spec.backlog[i].item_id + "' allocated outside the horizon");
        }
        per_release[static_cast<std::size_t>(allocation[i])].push_back(spec.backlog[i]);
    }
    const bool use_clusters = context.clusterer != nullptr && !context.models.per_cluster.empty();
    std::vector<PlannedRelease> out(h);
    for (std::size_t r = 0; r < h; ++r) {
        out[r].version = spec.version_for(static_cast<int>(r));
        out[r].pv = release_pv(per_release[r]);
        out[r].env = spec.env_for(static_cast<int>(r));
        if (use_clusters) out[r].cluster = context.clusterer->assign(release_feature_vector(per_release[r]));
    }
    return out;
}

PlanResult evaluate_plan(const Allocation& allocation, const PlanSpec& spec, const PlanContext& context) {
    PlanResult result;
    result.allocation = allocation;
    result.releases = planned_releases(allocation, spec, context);
    const auto trajectory =
        predict_trajectory(context.models, context.current_cpv, result.releases, context.baseline_env, context.adjustment);
    result.rul = estimate_rul(trajectory, context.threshold);
    return result;
}

namespace {

PlanResult exhaustive_search(const PlanSpec& spec, const PlanContext& context, std::uint64_t cap) {
    const std::size_t n = spec.backlog.size();
    const std::uint64_t count = allocation_count(n, spec.horizon, cap);

    const std::uint64_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::uint64_t workers = std::min<std::uint64_t>(hw, std::max<std::uint64_t>(1, count / 4096));
    std::vector<std::optional<PlanResult>> best(workers);
    std::vector<std::exception_ptr> errors(workers);

    auto run = [&](std::uint64_t w) {
        try {
            const std::uint64_t lo = count * w / workers;
            const std::uint64_t hi = count * (w + 1) / workers;
            Allocation a = allocation_at(lo, n, spec.horizon);
            for (std::uint64_t i = lo; i < hi; ++i) {
                PlanResult r = evaluate_plan(a, spec, context);
                if (!best[w] || ranks_above(r, *best[w])) best[w] = std::move(r);
                advance(a, spec.horizon);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };

    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> threads;
        for (std::uint64_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
        for (auto& t : threads) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::optional<PlanResult> winner;
    for (auto& b : best) {
        if (b && (!winner || ranks_above(*b, *winner))) winner = std::move(b);
    }
    return std::move(*winner);
}

// Places items by descending |weight|, each into the release that minimises
// the resulting (max predicted RT, sum of predicted RTs), lowest index on ties.
PlanResult greedy_search(const PlanSpec& spec, const PlanContext& context) {
    const std::size_t n = spec.backlog.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(spec.backlog[a].weight) > std::abs(spec.backlog[b].weight);
    });

    PlanSpec partial = spec;
    partial.backlog.clear();
    Allocation placed;
    std::vector<std::size_t> placed_index;

    for (std::size_t idx : order) {
        partial.backlog.push_back(spec.backlog[idx]);
        placed.push_back(0);
        int best_release = 0;
        double best_max = 0.0, best_sum = 0.0;
        for (int r = 0; r < spec.horizon; ++r) {
            placed.back() = r;
            const auto releases = planned_releases(placed, partial, context);
            const auto traj = predict_trajectory(context.models, context.current_cpv, releases, context.baseline_env,
                                                 context.adjustment);
            double mx = traj.front().rt_ms, sum = 0.0;
            for (const auto& p : traj) {
                mx = std::max(mx, p.rt_ms);
                sum += p.rt_ms;
            }
            if (r == 0 || mx < best_max || (mx == best_max && sum < best_sum)) {
                best_release = r;
                best_max = mx;
                best_sum = sum;
            }
        }
        placed.back() = best_release;
        placed_index.push_back(idx);
    }

    Allocation allocation(n, 0);
    for (std::size_t k = 0; k < placed_index.size(); ++k) allocation[placed_index[k]] = placed[k];
    return evaluate_plan(allocation, spec, context);
}

} // namespace

PlanResult best_plan(const PlanSpec& spec, const PlanContext& context, std::uint64_t cap) {
    spec.validate();
    if (spec.strategy == Strategy::greedy) return greedy_search(spec, context);
    return exhaustive_search(spec, context, cap);
}

json to_json(const PlanResult& result, const PlanSpec& spec) {
    json allocation = json::object();
    std::vector<std::vector<std::string>> items(result.releases.size());
    for (std::size_t i = 0; i < result.allocation.size(); ++i) {
        allocation[spec.backlog[i].item_id] = result.allocation[i];
        items[static_cast<std::size_t>(result.allocation[i])].push_back(spec.backlog[i].item_id);
    }
    json releases = json::array();
    for (std::size_t r = 0; r < result.releases.size(); ++r) {
        json j = to_json(result.releases[r]);
        j["items"] = items[r];
        releases.push_back(std::move(j));
    }
    return {{"strategy", to_string(spec.strategy)},
            {"horizon", spec.horizon},
            {"allocation", allocation},
            {"releases", releases},
            {"final_rt_ms", result.final_rt_ms()},
            {"rul", to_json(result.rul)}};
}

} // namespace swphm
