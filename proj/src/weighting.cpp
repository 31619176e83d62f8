#include "swphm/weighting.hpp"

#include "swphm/error.hpp"

#include <charconv>

namespace swphm {

namespace {

Severity exact_scale(std::string_view label) {
    for (Severity s : kAllSeverities) {
        if (label == to_string(s)) return s;
    }
    fail(ErrorCode::validation,
         "unknown impact scale '" + std::string(label) + "' (expected Critical, Major, Medium or Minor)");
}

} // namespace

ImpactTable ImpactTable::from_json(const json& doc) {
    if (!doc.is_object()) fail(ErrorCode::validation, "impact table: expected an object");
    ImpactTable table;
    for (const auto& [label, value] : doc.items()) {
        const Severity s = exact_scale(label);
        if (!value.is_number()) fail(ErrorCode::validation, "impact table: factor for '" + label + "' is not a number");
        const double f = value.get<double>();
        if (!(f > 0.0 && f <= 1.0)) {
            fail(ErrorCode::validation, "impact table: factor for '" + label + "' must lie in (0, 1]");
        }
        table.factors_[static_cast<std::size_t>(s)] = f;
    }
    return table;
}

double ImpactTable::factor(std::string_view label) const {
    return factor(exact_scale(label));
}

json ImpactTable::to_json() const {
    json out = json::object();
    for (Severity s : kAllSeverities) out[std::string(to_string(s))] = factor(s);
    return out;
}

double impact_factor_of(std::string_view label) {
    return ImpactTable{}.factor(label);
}

double impact_factor_of(Severity severity) {
    return ImpactTable{}.factor(severity);
}

WeightedItem weigh_item(const BacklogItem& item, const ImpactTable& table) {
    if (!item.severity) fail(ErrorCode::validation, "item '" + item.id + "' has no severity");
    if (!item.story_points) fail(ErrorCode::validation, "item '" + item.id + "' has no story points");
    if (!is_story_point(*item.story_points)) fail(ErrorCode::validation, "item '" + item.id + "': invalid story points");
    WeightedItem w;
    w.item_id = item.id;
    w.story_points = *item.story_points;
    w.impact_factor = table.factor(*item.severity);
    w.sign = item.sign;
    w.weight = static_cast<double>(to_int(item.sign) * w.story_points) * w.impact_factor;
    w.kind = item.kind;
    w.severity = *item.severity;
    return w;
}

int estimate_story_point(const TokenStream& doc, const NbModel& sizing_model) {
    if (!sizing_model.trained()) fail(ErrorCode::not_trained, "story-point model is not trained");
    const std::string label = classify_nb(sizing_model, doc).label;
    int value = 0;
    auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), value);
    if (ec != std::errc() || ptr != label.data() + label.size() || !is_story_point(value)) {
        fail(ErrorCode::validation, "story-point model label '" + label + "' is not on the Fibonacci scale");
    }
    return value;
}

int estimate_story_point(const BacklogItem& item, const NbModel& sizing_model) {
    if (item.story_points) return *item.story_points;
    return estimate_story_point(tokenize(item.text()), sizing_model);
}

BacklogItem complete_item(BacklogItem item, const ItemEstimators& estimators) {
    if (!item.severity) {
        if (!estimators.severity || !estimators.severity->trained()) {
            fail(ErrorCode::validation, "item '" + item.id + "' has no severity and no severity classifier is available");
        }
        item.severity = parse_severity(classify_nb(*estimators.severity, tokenize(item.text())).label);
    }
    if (!item.story_points) {
        if (!estimators.story_points || !estimators.story_points->trained()) {
            fail(ErrorCode::validation,
                 "item '" + item.id + "' has no story points and no story-point classifier is available");
        }
        item.story_points = estimate_story_point(item, *estimators.story_points);
    }
    return item;
}

double release_pv(std::span<const WeightedItem> items) {
    double pv = 0.0;
    for (const auto& w : items) pv += w.weight;
    return pv;
}

std::vector<double> cumulate_cpv(std::span<const double> pvs) {
    std::vector<double> out;
    out.reserve(pvs.size());
    double running = 0.0;
    for (double pv : pvs) {
        running += pv;
        out.push_back(running);
    }
    return out;
}

std::vector<WeightedItem> weigh_items(std::span<const BacklogItem> items, const ImpactTable& table,
                                      const ItemEstimators& estimators) {
    std::vector<WeightedItem> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(weigh_item(complete_item(item, estimators), table));
    return out;
}

std::vector<ReleaseWeights> release_weights(const Dataset& dataset, const ImpactTable& table,
                                            const ItemEstimators& estimators) {
    std::vector<double> pvs;
    for (const auto& rel : dataset.releases()) {
        std::vector<WeightedItem> weighted;
        for (const auto& id : rel.items) {
            weighted.push_back(weigh_item(complete_item(dataset.at(id), estimators), table));
        }
        pvs.push_back(release_pv(weighted));
    }
    const auto cpvs = cumulate_cpv(pvs);
    std::vector<ReleaseWeights> out;
    for (std::size_t i = 0; i < pvs.size(); ++i) {
        out.push_back({dataset.releases()[i].version, pvs[i], cpvs[i]});
    }
    return out;
}

} // namespace swphm
