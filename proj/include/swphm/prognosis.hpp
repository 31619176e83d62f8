#pragma once

#include "swphm/data_model.hpp"
#include "swphm/regress.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace swphm {

/// Response-time ceiling that ends useful life.
struct RtThreshold {
    double value_ms = 10000.0;

    static RtThreshold from_seconds(double seconds);
    void validate() const;
};

/// Default RT change per unit of relative clock-speed change: a 10 % faster
/// clock gives a 12.27 % lower response time.
inline constexpr double kDefaultClockCoefficient = 0.1227 / 0.1;

struct EnvAdjustment {
    double clock_coefficient = kDefaultClockCoefficient;
    double os_factor_32_over_64 = 1.0; // RT(32-bit) / RT(64-bit)

    /// Throws for non-positive values. Returns a warning when the OS factor
    /// says 32-bit is faster than 64-bit.
    std::optional<std::string> validate() const;
    bool operator==(const EnvAdjustment&) const = default;
};

struct PlannedRelease {
    std::string version;
    double pv = 0.0;
    EnvironmentSpec env;
    std::optional<int> cluster; // selects a per-cluster model when present
};

struct TrajectoryPoint {
    std::string version;
    double cpv = 0.0;
    double rt_ms = 0.0;            // after environmental adjustment
    double rt_unadjusted_ms = 0.0; // regression output at the baseline env
};

struct RulEstimate {
    std::vector<TrajectoryPoint> trajectory;
    std::size_t rul_releases = 0;
    bool censored = false;
    double threshold_ms = 10000.0;
};

/// Global regression model plus optional per-cluster models.
struct ModelSet {
    RegressionModel global;
    std::map<int, RegressionModel> per_cluster;

    ModelSet() = default;
    ModelSet(RegressionModel model) : global(std::move(model)) {} // NOLINT: implicit by intent

    const RegressionModel& select(std::optional<int> cluster) const;
};

/// RT_o * (1 - coeff * (hz_n - hz_o) / hz_o). Errors when the factor is not
/// positive, i.e. outside the range where the linear rule is meaningful.
double adjust_clock_speed(double rt_o_ms, double hz_o, double hz_n, double coeff = kDefaultClockCoefficient);

/// Mean of per-release rt32 / rt64 ratios.
double estimate_os_factor(std::span<const std::pair<double, double>> paired_rt32_rt64);

/// OS word-size change first, then clock change. Equal envs are the identity.
double apply_env(double rt_ms, const EnvironmentSpec& baseline, const EnvironmentSpec& target,
                 const EnvAdjustment& adjustment);

/// cpv_k = current_cpv + sum of pv up to k; RT from the regression, then
/// adjusted through the chain baseline -> env_1 -> ... -> env_k.
std::vector<TrajectoryPoint> predict_trajectory(const ModelSet& models, double current_cpv,
                                                std::span<const PlannedRelease> plan,
                                                const EnvironmentSpec& baseline = {},
                                                const EnvAdjustment& adjustment = {});

/// Number of releases before the first one at or above the threshold;
/// censored with rul = horizon when none crosses.
RulEstimate estimate_rul(std::span<const TrajectoryPoint> trajectory, RtThreshold threshold);

json to_json(const RulEstimate& estimate);
json to_json(const PlannedRelease& release);
json to_json(const EnvAdjustment& adjustment);
EnvAdjustment env_adjustment_from_json(const json& doc);
PlannedRelease planned_release_from_json(const json& doc);

/// version,rt_ms,below_threshold
std::string trajectory_csv(const RulEstimate& estimate);

} // namespace swphm
