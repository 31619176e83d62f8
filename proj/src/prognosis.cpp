#include "swphm/prognosis.hpp"

#include "swphm/csv.hpp"
#include "swphm/error.hpp"

#include <cmath>
#include <sstream>

namespace swphm {

RtThreshold RtThreshold::from_seconds(double seconds) {
    RtThreshold t{seconds * 1000.0};
    t.validate();
    return t;
}

void RtThreshold::validate() const {
    if (!(value_ms > 0.0) || !std::isfinite(value_ms)) fail(ErrorCode::validation, "threshold must be positive");
}

std::optional<std::string> EnvAdjustment::validate() const {
    if (!(clock_coefficient > 0.0) || !std::isfinite(clock_coefficient)) {
        fail(ErrorCode::validation, "clock coefficient must be positive");
    }
    if (!(os_factor_32_over_64 > 0.0) || !std::isfinite(os_factor_32_over_64)) {
        fail(ErrorCode::validation, "OS factor must be positive");
    }
    if (os_factor_32_over_64 < 1.0) {
        return "OS factor below 1: 32-bit response times estimated faster than 64-bit";
    }
    return std::nullopt;
}

const RegressionModel& ModelSet::select(std::optional<int> cluster) const {
    if (cluster) {
        auto it = per_cluster.find(*cluster);
        if (it != per_cluster.end()) return it->second;
    }
    return global;
}

double adjust_clock_speed(double rt_o_ms, double hz_o, double hz_n, double coeff) {
    if (!(hz_o > 0.0) || !(hz_n > 0.0)) fail(ErrorCode::validation, "clock speeds must be positive");
    if (!(coeff > 0.0)) fail(ErrorCode::validation, "clock coefficient must be positive");
    if (hz_n == hz_o) return rt_o_ms;
    const double factor = 1.0 - coeff * ((hz_n - hz_o) / hz_o);
    if (!(factor > 0.0)) {
        std::ostringstream os;
        os << "clock change " << hz_o << " -> " << hz_n << " GHz is outside calibrated range (adjustment factor "
           << factor << ")";
        fail(ErrorCode::out_of_range, os.str());
    }
    return rt_o_ms * factor;
}

double estimate_os_factor(std::span<const std::pair<double, double>> paired) {
    if (paired.empty()) fail(ErrorCode::validation, "OS factor: no paired measurements");
    double sum = 0.0;
    for (const auto& [rt32, rt64] : paired) {
        if (!(rt32 > 0.0) || !(rt64 > 0.0)) fail(ErrorCode::validation, "OS factor: response times must be positive");
        sum += rt32 / rt64;
    }
    return sum / static_cast<double>(paired.size());
}

double apply_env(double rt_ms, const EnvironmentSpec& baseline, const EnvironmentSpec& target,
                 const EnvAdjustment& adjustment) {
    if (baseline.os_bits == target.os_bits && baseline.clock_ghz == target.clock_ghz) return rt_ms;
    if (!(rt_ms > 0.0)) fail(ErrorCode::out_of_range, "environment adjustment needs a positive response time");
    double rt = rt_ms;
    if (baseline.os_bits == 64 && target.os_bits == 32) {
        rt *= adjustment.os_factor_32_over_64;
    } else if (baseline.os_bits == 32 && target.os_bits == 64) {
        rt /= adjustment.os_factor_32_over_64;
    }
    return adjust_clock_speed(rt, baseline.clock_ghz, target.clock_ghz, adjustment.clock_coefficient);
}

std::vector<TrajectoryPoint> predict_trajectory(const ModelSet& models, double current_cpv,
                                                std::span<const PlannedRelease> plan,
                                                const EnvironmentSpec& baseline, const EnvAdjustment& adjustment) {
    std::vector<TrajectoryPoint> out;
    out.reserve(plan.size());
    double cpv = current_cpv;
    for (std::size_t k = 0; k < plan.size(); ++k) {
        cpv += plan[k].pv;
        TrajectoryPoint p;
        p.version = plan[k].version;
        p.cpv = cpv;
        p.rt_unadjusted_ms = predict_rt(models.select(plan[k].cluster), cpv);
        double rt = p.rt_unadjusted_ms;
        const EnvironmentSpec* previous = &baseline;
        for (std::size_t i = 0; i <= k; ++i) {
            rt = apply_env(rt, *previous, plan[i].env, adjustment);
            previous = &plan[i].env;
        }
        p.rt_ms = rt;
        out.push_back(std::move(p));
    }
    return out;
}

RulEstimate estimate_rul(std::span<const TrajectoryPoint> trajectory, RtThreshold threshold) {
    threshold.validate();
    RulEstimate est;
    est.trajectory.assign(trajectory.begin(), trajectory.end());
    est.threshold_ms = threshold.value_ms;
    est.censored = true;
    est.rul_releases = trajectory.size();
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        if (trajectory[i].rt_ms >= threshold.value_ms) {
            est.rul_releases = i;
            est.censored = false;
            break;
        }
    }
    return est;
}

json to_json(const RulEstimate& estimate) {
    json traj = json::array();
    for (const auto& p : estimate.trajectory) {
        traj.push_back({{"version", p.version},
                        {"cpv", p.cpv},
                        {"rt_ms", p.rt_ms},
                        {"rt_unadjusted_ms", p.rt_unadjusted_ms},
                        {"below_threshold", p.rt_ms < estimate.threshold_ms}});
    }
    return {{"trajectory", traj},
            {"rul_releases", estimate.rul_releases},
            {"censored", estimate.censored},
            {"threshold_ms", estimate.threshold_ms}};
}

json to_json(const PlannedRelease& release) {
    json j = {{"version", release.version}, {"pv", release.pv}, {"env", to_json(release.env)}};
    if (release.cluster) j["cluster"] = *release.cluster;
    return j;
}

PlannedRelease planned_release_from_json(const json& doc) {
    try {
        PlannedRelease r;
        r.version = doc.at("version").get<std::string>();
        r.pv = doc.at("pv").get<double>();
        if (doc.contains("env")) r.env = env_from_json(doc.at("env"));
        if (doc.contains("cluster") && !doc["cluster"].is_null()) r.cluster = doc["cluster"].get<int>();
        return r;
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, std::string("planned release: ") + e.what());
    }
}

json to_json(const EnvAdjustment& adjustment) {
    return {{"clock_coefficient", adjustment.clock_coefficient},
            {"os_factor_32_over_64", adjustment.os_factor_32_over_64}};
}

EnvAdjustment env_adjustment_from_json(const json& doc) {
    EnvAdjustment adj;
    try {
        adj.clock_coefficient = doc.value("clock_coefficient", kDefaultClockCoefficient);
        adj.os_factor_32_over_64 = doc.value("os_factor_32_over_64", 1.0);
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, std::string("environment adjustment: ") + e.what());
    }
    adj.validate();
    return adj;
}

std::string trajectory_csv(const RulEstimate& estimate) {
    std::string out = csv::format_row({"version", "rt_ms", "below_threshold"});
    for (const auto& p : estimate.trajectory) {
        out += csv::format_row({p.version, csv::format_number(p.rt_ms), p.rt_ms < estimate.threshold_ms ? "true" : "false"});
    }
    return out;
}

} // namespace swphm
