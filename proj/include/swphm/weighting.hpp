#pragma once

#include "swphm/data_model.hpp"
#include "swphm/text_classify.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace swphm {

/// Severity label to numeric impact factor. Defaults are Critical 1,
/// Major 0.75, Medium 0.5, Minor 0.25.
class ImpactTable {
public:
    ImpactTable() = default;

    /// Overrides from {"Critical": 1, "Major": ...}; omitted labels keep their
    /// defaults. Factors must lie in (0, 1].
    static ImpactTable from_json(const json& doc);

    double factor(Severity severity) const { return factors_[static_cast<std::size_t>(severity)]; }
    double factor(std::string_view label) const;

    json to_json() const;
    bool operator==(const ImpactTable&) const = default;

private:
    std::array<double, 4> factors_ = {1.0, 0.75, 0.5, 0.25};
};

double impact_factor_of(std::string_view label);
double impact_factor_of(Severity severity);

struct WeightedItem {
    std::string item_id;
    int story_points = 1;
    double impact_factor = 1.0;
    Sign sign = Sign::plus;
    double weight = 0.0; // sign * story_points * impact_factor
    ItemKind kind = ItemKind::fault;
    Severity severity = Severity::Critical;
};

/// Requires severity and story points to be present on the item.
WeightedItem weigh_item(const BacklogItem& item, const ImpactTable& table = {});

/// Severity and story-point classifiers used to fill gaps in backlog data.
/// Either pointer may be null; explicit values on an item always win.
struct ItemEstimators {
    const NbModel* severity = nullptr;
    const NbModel* story_points = nullptr;
};

/// Returns `item` with missing severity / story points predicted from its
/// text. Throws Error(validation) if a field is missing and no estimator is
/// available.
BacklogItem complete_item(BacklogItem item, const ItemEstimators& estimators);

/// Argmax size class of a sizing model whose labels are story-point values.
int estimate_story_point(const TokenStream& doc, const NbModel& sizing_model);
int estimate_story_point(const BacklogItem& item, const NbModel& sizing_model);

/// Sum of signed weights of a release.
double release_pv(std::span<const WeightedItem> items);

/// Running prefix sums.
std::vector<double> cumulate_cpv(std::span<const double> pvs);

struct ReleaseWeights {
    std::string version;
    double pv = 0.0;
    double cpv = 0.0;
};

std::vector<WeightedItem> weigh_items(std::span<const BacklogItem> items, const ImpactTable& table,
                                      const ItemEstimators& estimators = {});

/// PV and CPV of every release in the dataset, in version order.
std::vector<ReleaseWeights> release_weights(const Dataset& dataset, const ImpactTable& table = {},
                                            const ItemEstimators& estimators = {});

} // namespace swphm
