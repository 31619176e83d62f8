#pragma once

#include "swphm/data_model.hpp"
#include "swphm/plan_search.hpp"
#include "swphm/prognosis.hpp"
#include "swphm/regress.hpp"
#include "swphm/release_cluster.hpp"
#include "swphm/text_classify.hpp"
#include "swphm/weighting.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace swphm {

/// Optional text classifiers carried alongside the regression model.
struct Classifiers {
    std::optional<NbModel> kind;
    std::optional<NbModel> severity;
    std::optional<NbModel> story_points;

    ItemEstimators estimators() const;
};

json to_json(const Classifiers& classifiers);
Classifiers classifiers_from_json(const json& doc);

struct TrainOptions {
    ImpactTable impact;
    Classifiers classifiers;
    double clock_coefficient = kDefaultClockCoefficient;
    std::optional<double> os_factor;                  // configured RT32/RT64
    std::vector<std::pair<double, double>> os_pairs; // estimated when no factor is configured
    ClusterOptions cluster;
    double train_fraction = 0.8;
    std::uint64_t seed = 42;
};

/// Parses the option fields of a training request; absent fields keep
/// their defaults.
TrainOptions train_options_from_json(const json& doc);

/// Everything needed to predict and plan after training.
struct TrainedBundle {
    ModelSet models;
    ReleaseClusterer clusterer;
    EnvironmentSpec baseline_env;
    EnvAdjustment adjustment;
    double current_cpv = 0.0;
    ImpactTable impact;
    Classifiers classifiers;
};

json to_json(const TrainedBundle& bundle);
TrainedBundle trained_bundle_from_json(const json& doc);

struct TrainOutcome {
    TrainedBundle bundle;
    json report;
};

/// Fits on measured releases taken at the most common environment (ties to
/// the earliest). The persisted model uses all of those releases; the
/// train/test split and cross-validation are reported only.
TrainOutcome train_bundle(const Dataset& dataset, const TrainOptions& options);

json dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const json& doc);
json dataset_summary(const Dataset& dataset);

json weigh_json(const Dataset& dataset, const ImpactTable& table, const ItemEstimators& estimators);
std::string weigh_csv(const Dataset& dataset, const ImpactTable& table, const ItemEstimators& estimators);

json cluster_json(const ReleaseClusterer& clusterer);
std::string cluster_csv(const ReleaseClusterer& clusterer);

json prediction_json(const NbPrediction& prediction, const NbModel& model);

json predict_json(const TrainedBundle& bundle, double cpv, std::optional<int> cluster);

/// {"rt_ms", "from", "to", "clock_coefficient"?, "os_factor"?} -> {"rt_ms"}.
/// Missing adjustment fields come from `defaults`.
json adjust_json(const json& request, const EnvAdjustment& defaults);

/// Plan documents either list "releases" (version, pv, env, cluster?) or
/// give an "allocation" of backlog items, as {id: index} or an index array
/// aligned with "items". `dataset` supplies the items and may be null for the
/// first form.
RulEstimate plan_rul(const TrainedBundle& bundle, const json& plan_doc, const Dataset* dataset,
                     RtThreshold threshold);

/// Builds a search problem from {"horizon", "strategy"?, "items"?,
/// "env_overrides"?, "base_env"?, "versions"?}. Items default to the open
/// backlog; base_env defaults to the training baseline.
PlanSpec plan_spec_from_json(const TrainedBundle& bundle, const json& plan_doc, const Dataset& dataset);

PlanContext plan_context(const TrainedBundle& bundle, RtThreshold threshold);

json plan_best_json(const TrainedBundle& bundle, const json& plan_doc, const Dataset& dataset, RtThreshold threshold,
                    std::uint64_t cap = kDefaultEnumerationCap);

} // namespace swphm
