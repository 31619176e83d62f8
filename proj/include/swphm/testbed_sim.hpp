#pragma once

#include "swphm/data_model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace swphm {

/// Ground-truth generator standing in for a staging environment.
struct SimConfig {
    int n_releases = 10;
    double slope_ms_per_wf = 60.0;
    double intercept_ms = 2000.0;
    double noise_std_ms = 0.0; // per measurement run
    /// When set, overrides noise_std_ms so that the expected correlation
    /// between true CPV and mean RT equals this value.
    std::optional<double> target_correlation;
    int items_min = 3;
    int items_max = 8;
    std::array<double, 4> severity_mix = {0.25, 0.25, 0.25, 0.25}; // Critical, Major, Medium, Minor
    double enhancement_fraction = 0.5;
    double improving_fraction = 0.0; // items with sign -1
    int runs_per_release = 5;
    std::uint64_t seed = 42;
    EnvironmentSpec env;
    std::map<int, EnvironmentSpec> env_schedule; // sticky from the given release index
    double true_os_factor = 1.25;
    double clock_coefficient = 0.1227 / 0.1;
    int open_items = 8; // unreleased backlog for planning
    int plan_horizon = 4;
    std::string version_prefix = "1.0.";

    void validate() const;
};

SimConfig sim_config_from_json(const json& doc);
json to_json(const SimConfig& cfg);

struct SimTruth {
    double slope = 0.0;
    double intercept = 0.0;
    double os_factor = 1.0;
    double clock_coefficient = 0.0;
    double noise_std_ms = 0.0;
    std::vector<std::string> versions;
    std::vector<double> per_release_cpv;
    std::vector<double> per_release_rt_ms; // noiseless, environment applied
};

struct OsPair {
    std::string version;
    double rt32_ms = 0.0;
    double rt64_ms = 0.0;
};

struct SimOutput {
    Dataset dataset;
    SimTruth truth;
    std::vector<OsPair> os_pairs;
    json plan; // default plan over the open backlog
};

SimOutput generate_dataset(const SimConfig& cfg);

json to_json(const SimTruth& truth);
json os_pairs_to_json(const std::vector<OsPair>& pairs);
std::vector<std::pair<double, double>> os_pairs_from_json(const json& doc);

/// backlog.json, releases.json, truth.json, os_pairs.json, plan.json
void write_sim_output(const SimOutput& out, const std::filesystem::path& dir);

} // namespace swphm
