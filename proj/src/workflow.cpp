#include "swphm/workflow.hpp"

#include "swphm/csv.hpp"
#include "swphm/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace swphm {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, std::string(what) + ": " + e.what());
    }
}

std::optional<NbModel> optional_nb(const json& doc, const char* key) {
    if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
    return nb_model_from_json(doc[key]);
}

EnvironmentSpec merge_env(const EnvironmentSpec& base, const json& partial) {
    if (!partial.is_object()) fail(ErrorCode::validation, "environment: expected an object");
    json merged = to_json(base);
    merged.update(partial);
    return env_from_json(merged, true);
}

WeightedItem weighted_for(const TrainedBundle& bundle, const Dataset& dataset, const std::string& id) {
    const BacklogItem* item = dataset.find(id);
    if (!item) fail(ErrorCode::validation, "plan references unknown item '" + id + "'");
    return weigh_item(complete_item(*item, bundle.classifiers.estimators()), bundle.impact);
}

const Dataset& require_dataset(const Dataset* dataset) {
    if (!dataset) fail(ErrorCode::usage, "an allocation plan needs the backlog; supply a dataset");
    return *dataset;
}

} // namespace

ItemEstimators Classifiers::estimators() const {
    return {severity ? &*severity : nullptr, story_points ? &*story_points : nullptr};
}

json to_json(const Classifiers& c) {
    json j = json::object();
    if (c.kind) j["kind"] = to_json(*c.kind);
    if (c.severity) j["severity"] = to_json(*c.severity);
    if (c.story_points) j["story_points"] = to_json(*c.story_points);
    return j;
}

Classifiers classifiers_from_json(const json& doc) {
    if (!doc.is_object()) fail(ErrorCode::validation, "classifiers: expected an object");
    return {optional_nb(doc, "kind"), optional_nb(doc, "severity"), optional_nb(doc, "story_points")};
}

TrainOptions train_options_from_json(const json& doc) {
    if (!doc.is_object()) fail(ErrorCode::validation, "train request: expected an object");
    TrainOptions o;
    guarded("train request", [&] {
        if (doc.contains("impact_factors")) o.impact = ImpactTable::from_json(doc["impact_factors"]);
        if (doc.contains("classifiers")) o.classifiers = classifiers_from_json(doc["classifiers"]);
        o.clock_coefficient = doc.value("clock_coefficient", o.clock_coefficient);
        if (doc.contains("os_factor") && !doc["os_factor"].is_null()) o.os_factor = doc["os_factor"].get<double>();
        if (doc.contains("os_pairs")) {
            for (const auto& p : doc["os_pairs"]) {
                o.os_pairs.emplace_back(p.at("rt32_ms").get<double>(), p.at("rt64_ms").get<double>());
            }
        }
        if (doc.contains("k") && !doc["k"].is_null()) o.cluster.k = doc["k"].get<int>();
        o.cluster.k_max = doc.value("k_max", o.cluster.k_max);
        o.seed = doc.value("seed", o.seed);
        o.train_fraction = doc.value("train_fraction", o.train_fraction);
    });
    o.cluster.seed = o.seed;
    return o;
}

json to_json(const TrainedBundle& b) {
    json cluster_models = json::array();
    for (const auto& [id, model] : b.models.per_cluster) cluster_models.push_back(to_json(model));
    return {{"global", to_json(b.models.global)},
            {"cluster_models", cluster_models},
            {"clusters", to_json(b.clusterer)},
            {"baseline_env", to_json(b.baseline_env)},
            {"adjustment", to_json(b.adjustment)},
            {"current_cpv", b.current_cpv},
            {"impact_factors", b.impact.to_json()},
            {"classifiers", to_json(b.classifiers)}};
}

TrainedBundle trained_bundle_from_json(const json& doc) {
    if (!doc.is_object()) fail(ErrorCode::validation, "model: expected an object");
    return guarded("model", [&] {
        TrainedBundle b;
        b.models.global = regression_model_from_json(doc.at("global"));
        if (!b.models.global.fitted()) fail(ErrorCode::not_trained, "model: regression is not fitted");
        for (const auto& m : doc.value("cluster_models", json::array())) {
            RegressionModel model = regression_model_from_json(m);
            if (!model.cluster_id) fail(ErrorCode::validation, "model: cluster model without cluster_id");
            b.models.per_cluster[*model.cluster_id] = model;
        }
        b.clusterer = release_clusterer_from_json(doc.at("clusters"));
        b.baseline_env = env_from_json(doc.at("baseline_env"), true);
        b.adjustment = env_adjustment_from_json(doc.at("adjustment"));
        b.current_cpv = doc.at("current_cpv").get<double>();
        b.impact = ImpactTable::from_json(doc.value("impact_factors", json::object()));
        b.classifiers = classifiers_from_json(doc.value("classifiers", json::object()));
        return b;
    });
}

TrainOutcome train_bundle(const Dataset& dataset, const TrainOptions& options) {
    const ItemEstimators estimators = options.classifiers.estimators();
    const auto weights = release_weights(dataset, options.impact, estimators);
    const auto& releases = dataset.releases();

    std::vector<std::string> warnings;

    // Baseline: the most common environment among measured releases.
    std::vector<std::pair<EnvironmentSpec, int>> env_counts;
    for (const auto& rel : releases) {
        if (!rel.measured()) continue;
        auto it = std::find_if(env_counts.begin(), env_counts.end(), [&](const auto& e) { return e.first == rel.env; });
        if (it == env_counts.end()) {
            env_counts.emplace_back(rel.env, 1);
        } else {
            ++it->second;
        }
    }
    if (env_counts.empty()) fail(ErrorCode::validation, "training needs measured releases; none have rt_runs_ms");
    const auto baseline_it = std::max_element(env_counts.begin(), env_counts.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });

    TrainOutcome out;
    TrainedBundle& b = out.bundle;
    b.baseline_env = baseline_it->first;
    b.impact = options.impact;
    b.classifiers = options.classifiers;
    b.current_cpv = weights.empty() ? 0.0 : weights.back().cpv;

    std::vector<XyPair> pairs;
    std::vector<std::string> fit_versions;
    std::vector<std::string> excluded;
    for (std::size_t i = 0; i < releases.size(); ++i) {
        if (!releases[i].measured()) continue;
        if (releases[i].env == b.baseline_env) {
            pairs.push_back({weights[i].cpv, mean_rt(releases[i])});
            fit_versions.push_back(releases[i].version);
        } else {
            excluded.push_back(releases[i].version);
        }
    }
    if (pairs.size() < 3) {
        fail(ErrorCode::validation, "training needs at least 3 measured releases at the baseline environment, found " +
                                        std::to_string(pairs.size()));
    }
    if (!excluded.empty()) warnings.push_back("releases measured off the baseline environment were not fitted");

    b.models.global = ols_fit(pairs);

    json correlation = nullptr;
    {
        std::vector<double> x, y;
        for (const auto& p : pairs) {
            x.push_back(p.x);
            y.push_back(p.y);
        }
        try {
            const auto c = pearson_corr(x, y);
            correlation = {{"r", c.r}, {"n", c.n}};
        } catch (const Error& e) {
            warnings.push_back(std::string("correlation: ") + e.what());
        }
    }

    json split = nullptr;
    if (pairs.size() >= 5) {
        try {
            const auto tt = split_train_test(pairs, options.train_fraction, options.seed);
            const auto model = ols_fit(tt.train);
            split = {{"train_fraction", options.train_fraction},
                     {"n_train", tt.train.size()},
                     {"n_test", tt.test.size()},
                     {"model", to_json(model)},
                     {"test_metrics", to_json(evaluate(model, tt.test))}};
        } catch (const Error& e) {
            warnings.push_back(std::string("train/test split: ") + e.what());
        }
    } else {
        warnings.push_back("train/test split skipped: fewer than 5 fit releases");
    }

    json cv = nullptr;
    try {
        cv = to_json(cross_validate(pairs, options.seed));
    } catch (const Error& e) {
        warnings.push_back(std::string("cross-validation: ") + e.what());
    }

    ClusterOptions cluster_options = options.cluster;
    cluster_options.seed = options.seed;
    b.clusterer = fit_release_clusters(dataset_release_features(dataset, options.impact, estimators), cluster_options);
    const int k = b.clusterer.model.k;
    if (k >= 2) {
        std::map<int, std::vector<XyPair>> per_cluster;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            per_cluster[*b.clusterer.cluster_of(fit_versions[i])].push_back(pairs[i]);
        }
        bool enough = static_cast<int>(per_cluster.size()) == k;
        for (const auto& [id, cluster_pairs] : per_cluster) enough = enough && cluster_pairs.size() >= 4;
        if (enough) {
            try {
                for (const auto& [id, cluster_pairs] : per_cluster) {
                    RegressionModel m = ols_fit(cluster_pairs);
                    m.cluster_id = id;
                    b.models.per_cluster[id] = m;
                }
            } catch (const Error& e) {
                b.models.per_cluster.clear();
                warnings.push_back(std::string("per-cluster models dropped: ") + e.what());
            }
        }
    }

    b.adjustment.clock_coefficient = options.clock_coefficient;
    std::string os_source = "default";
    if (options.os_factor) {
        b.adjustment.os_factor_32_over_64 = *options.os_factor;
        os_source = "configured";
    } else if (!options.os_pairs.empty()) {
        b.adjustment.os_factor_32_over_64 = estimate_os_factor(options.os_pairs);
        os_source = "estimated";
    }
    if (auto warning = b.adjustment.validate()) warnings.push_back(*warning);

    json cluster_sizes = json::array();
    for (int c = 0; c < k; ++c) {
        cluster_sizes.push_back(std::count(b.clusterer.model.assignments.begin(), b.clusterer.model.assignments.end(), c));
    }
    out.report = {{"n_releases", releases.size()},
                  {"n_fit", pairs.size()},
                  {"fit_versions", fit_versions},
                  {"excluded_versions", excluded},
                  {"baseline_env", to_json(b.baseline_env)},
                  {"correlation", correlation},
                  {"model", to_json(b.models.global)},
                  {"split", split},
                  {"cross_validation", cv},
                  {"clusters", {{"k", k}, {"sizes", cluster_sizes}, {"per_cluster_models", !b.models.per_cluster.empty()}}},
                  {"adjustment", to_json(b.adjustment)},
                  {"os_factor_source", os_source},
                  {"current_cpv", b.current_cpv},
                  {"warnings", warnings}};
    return out;
}

json dataset_to_json(const Dataset& dataset) {
    return {{"backlog", backlog_to_json(dataset.items())}, {"releases", releases_to_json(dataset.releases())}};
}

Dataset dataset_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("backlog")) {
        fail(ErrorCode::validation, "dataset: expected an object with \"backlog\" and \"releases\"");
    }
    auto items = parse_backlog_json(doc["backlog"]);
    auto releases = parse_releases_json(doc.value("releases", json::array()));
    return Dataset(std::move(items), std::move(releases));
}

json dataset_summary(const Dataset& dataset) {
    std::size_t measured = 0;
    for (const auto& r : dataset.releases()) measured += r.measured() ? 1 : 0;
    return {{"items", dataset.items().size()},
            {"releases", dataset.releases().size()},
            {"measured_releases", measured},
            {"open_items", dataset.open_items().size()}};
}

json weigh_json(const Dataset& dataset, const ImpactTable& table, const ItemEstimators& estimators) {
    json out = json::array();
    for (const auto& w : release_weights(dataset, table, estimators)) {
        out.push_back({{"version", w.version}, {"pv", w.pv}, {"cpv", w.cpv}});
    }
    return out;
}

std::string weigh_csv(const Dataset& dataset, const ImpactTable& table, const ItemEstimators& estimators) {
    std::string out = csv::format_row({"version", "pv", "cpv"});
    for (const auto& w : release_weights(dataset, table, estimators)) {
        out += csv::format_row({w.version, csv::format_number(w.pv), csv::format_number(w.cpv)});
    }
    return out;
}

json cluster_json(const ReleaseClusterer& clusterer) {
    json releases = json::array();
    for (std::size_t i = 0; i < clusterer.versions.size(); ++i) {
        releases.push_back({{"version", clusterer.versions[i]}, {"cluster", clusterer.model.assignments[i]}});
    }
    return {{"k", clusterer.model.k}, {"releases", releases}, {"model", to_json(clusterer)}};
}

std::string cluster_csv(const ReleaseClusterer& clusterer) {
    std::string out = csv::format_row({"version", "cluster"});
    for (std::size_t i = 0; i < clusterer.versions.size(); ++i) {
        out += csv::format_row({clusterer.versions[i], std::to_string(clusterer.model.assignments[i])});
    }
    return out;
}

json prediction_json(const NbPrediction& prediction, const NbModel& model) {
    json posteriors = json::object();
    for (std::size_t c = 0; c < model.classes().size(); ++c) posteriors[model.classes()[c]] = prediction.posteriors[c];
    return {{"label", prediction.label}, {"posteriors", posteriors}, {"no_evidence", prediction.no_evidence}};
}

json predict_json(const TrainedBundle& bundle, double cpv, std::optional<int> cluster) {
    const RegressionModel& model = bundle.models.select(cluster);
    json j = {{"cpv", cpv}, {"rt_ms", predict_rt(model, cpv)}};
    if (model.cluster_id) j["cluster"] = *model.cluster_id;
    return j;
}

json adjust_json(const json& request, const EnvAdjustment& defaults) {
    if (!request.is_object()) fail(ErrorCode::validation, "adjust request: expected an object");
    return guarded("adjust request", [&] {
        const double rt = request.at("rt_ms").get<double>();
        EnvAdjustment adj = defaults;
        adj.clock_coefficient = request.value("clock_coefficient", adj.clock_coefficient);
        adj.os_factor_32_over_64 = request.value("os_factor", adj.os_factor_32_over_64);
        adj.validate();
        const EnvironmentSpec from = merge_env(EnvironmentSpec{}, request.at("from"));
        const EnvironmentSpec to = merge_env(from, request.at("to"));
        return json{{"rt_ms", apply_env(rt, from, to, adj)}};
    });
}

PlanContext plan_context(const TrainedBundle& bundle, RtThreshold threshold) {
    threshold.validate();
    PlanContext ctx;
    ctx.models = bundle.models;
    ctx.baseline_env = bundle.baseline_env;
    ctx.adjustment = bundle.adjustment;
    ctx.current_cpv = bundle.current_cpv;
    ctx.threshold = threshold;
    ctx.clusterer = &bundle.clusterer;
    return ctx;
}

namespace {

// Fills everything but the backlog from the plan document.
void read_plan_frame(const TrainedBundle& bundle, const json& doc, PlanSpec& spec) {
    spec.base_env = doc.contains("base_env") ? merge_env(bundle.baseline_env, doc["base_env"]) : bundle.baseline_env;
    if (doc.contains("strategy")) spec.strategy = parse_strategy(doc["strategy"].get<std::string>());
    if (doc.contains("versions")) spec.versions = doc["versions"].get<std::vector<std::string>>();
    if (doc.contains("env_overrides")) {
        const auto& overrides = doc["env_overrides"];
        if (!overrides.is_object()) fail(ErrorCode::validation, "env_overrides: expected an object keyed by release index");
        std::map<int, json> ordered;
        for (const auto& [key, value] : overrides.items()) {
            std::size_t used = 0;
            int index = -1;
            try {
                index = std::stoi(key, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != key.size()) fail(ErrorCode::validation, "env_overrides: key '" + key + "' is not a release index");
            ordered[index] = value;
        }
        for (const auto& [index, value] : ordered) spec.env_overrides[index] = merge_env(spec.env_for(index), value);
    }
}

} // namespace

PlanSpec plan_spec_from_json(const TrainedBundle& bundle, const json& doc, const Dataset& dataset) {
    if (!doc.is_object()) fail(ErrorCode::validation, "plan: expected an object");
    return guarded("plan", [&] {
        PlanSpec spec;
        spec.horizon = doc.at("horizon").get<int>();
        read_plan_frame(bundle, doc, spec);
        if (doc.contains("items")) {
            for (const auto& id : doc["items"].get<std::vector<std::string>>()) {
                spec.backlog.push_back(weighted_for(bundle, dataset, id));
            }
        } else {
            const auto open = dataset.open_items();
            const ItemEstimators estimators = bundle.classifiers.estimators();
            for (const auto& item : open) spec.backlog.push_back(weigh_item(complete_item(item, estimators), bundle.impact));
        }
        spec.validate();
        return spec;
    });
}

RulEstimate plan_rul(const TrainedBundle& bundle, const json& doc, const Dataset* dataset, RtThreshold threshold) {
    if (!doc.is_object()) fail(ErrorCode::validation, "plan: expected an object");
    const PlanContext ctx = plan_context(bundle, threshold);
    if (doc.contains("releases")) {
        const auto releases = guarded("plan", [&] {
            std::vector<PlannedRelease> out;
            for (const auto& r : doc.at("releases")) {
                PlannedRelease p = planned_release_from_json(r);
                if (!r.contains("env")) p.env = bundle.baseline_env;
                p.env.validate();
                out.push_back(std::move(p));
            }
            return out;
        });
        const auto traj = predict_trajectory(ctx.models, ctx.current_cpv, releases, ctx.baseline_env, ctx.adjustment);
        return estimate_rul(traj, ctx.threshold);
    }
    if (!doc.contains("allocation")) fail(ErrorCode::validation, "plan: needs \"releases\" or \"allocation\"");
    const Dataset& data = require_dataset(dataset);
    return guarded("plan", [&] {
        PlanSpec spec;
        Allocation allocation;
        const auto& alloc = doc["allocation"];
        std::vector<std::string> ids;
        if (alloc.is_object()) {
            if (doc.contains("items")) {
                ids = doc["items"].get<std::vector<std::string>>();
            } else {
                for (const auto& [id, idx] : alloc.items()) ids.push_back(id);
            }
            if (ids.size() != alloc.size()) fail(ErrorCode::validation, "plan: allocation and items disagree");
            for (const auto& id : ids) {
                if (!alloc.contains(id)) fail(ErrorCode::validation, "plan: item '" + id + "' has no allocation");
                allocation.push_back(alloc[id].get<int>());
            }
        } else if (alloc.is_array()) {
            ids = doc.at("items").get<std::vector<std::string>>();
            allocation = alloc.get<Allocation>();
            if (ids.size() != allocation.size()) fail(ErrorCode::validation, "plan: allocation and items disagree");
        } else {
            fail(ErrorCode::validation, "plan: allocation must be an object or an array");
        }
        int max_index = -1;
        for (int a : allocation) max_index = std::max(max_index, a);
        spec.horizon = doc.contains("horizon") ? doc["horizon"].get<int>() : max_index + 1;
        read_plan_frame(bundle, doc, spec);
        for (const auto& id : ids) spec.backlog.push_back(weighted_for(bundle, data, id));
        spec.validate();
        return evaluate_plan(allocation, spec, ctx).rul;
    });
}

json plan_best_json(const TrainedBundle& bundle, const json& plan_doc, const Dataset& dataset, RtThreshold threshold,
                    std::uint64_t cap) {
    const PlanSpec spec = plan_spec_from_json(bundle, plan_doc, dataset);
    const PlanResult result = best_plan(spec, plan_context(bundle, threshold), cap);
    return to_json(result, spec);
}

} // namespace swphm
