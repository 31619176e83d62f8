#pragma once

#include "swphm/data_model.hpp"
#include "swphm/weighting.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace swphm {

using Vector = std::vector<double>;

struct ClusterModel {
    int k = 0;
    std::vector<Vector> centroids;
    std::vector<int> assignments;       // per input point
    double inertia = 0.0;               // sum of squared distances to assigned centroid
    std::vector<double> inertia_history; // after every Lloyd update
    int iterations = 0;
    bool converged = false;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iter` updates have run. A cluster that empties is
/// repaired by moving in the point farthest from its own centroid.
ClusterModel kmeans_fit(std::span<const Vector> points, int k, std::uint64_t seed, int max_iter = 300);

/// Nearest centroid by Euclidean distance, ties to the lowest index.
int assign_cluster(const ClusterModel& model, std::span<const double> point);

/// Mean silhouette coefficient; singleton clusters contribute 0.
double mean_silhouette(std::span<const Vector> points, std::span<const int> labels, int k);

/// k in [2, min(k_max, n-1)] with the best mean silhouette, ties to smaller k.
int choose_k(std::span<const Vector> points, int k_max, std::uint64_t seed);

inline constexpr std::size_t kReleaseFeatureDim = 8;

/// [faults, enhancements, Critical, Major, Medium, Minor, total |WF|, item count]
Vector release_feature_vector(std::span<const WeightedItem> items);

struct ReleaseFeatures {
    std::string version;
    Vector vector;
};

/// Per-dimension z-scoring; constant dimensions are dropped.
struct Standardizer {
    std::vector<std::size_t> kept;
    Vector mean;
    Vector scale;

    static Standardizer fit(std::span<const Vector> raw);
    Vector apply(std::span<const double> raw) const;
};

/// Clusters of analogous releases in standardized feature space.
struct ReleaseClusterer {
    Standardizer standardizer;
    ClusterModel model;
    std::vector<std::string> versions; // aligned with model.assignments

    int assign(std::span<const double> raw_features) const;
    std::optional<int> cluster_of(std::string_view version) const;
};

struct ClusterOptions {
    std::optional<int> k; // fixed k; otherwise chosen by silhouette
    int k_max = 6;
    std::uint64_t seed = 42;
    int max_iter = 300;
};

/// Fewer than three releases, or no varying feature, yields a single cluster.
ReleaseClusterer fit_release_clusters(std::span<const ReleaseFeatures> releases, const ClusterOptions& options);

std::vector<ReleaseFeatures> dataset_release_features(const Dataset& dataset, const ImpactTable& table,
                                                      const ItemEstimators& estimators = {});

json to_json(const ReleaseClusterer& clusterer);
ReleaseClusterer release_clusterer_from_json(const json& doc);

} // namespace swphm
