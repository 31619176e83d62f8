#include "swphm/release_cluster.hpp"

#include "swphm/error.hpp"
#include "swphm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swphm {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

int nearest(std::span<const Vector> centroids, std::span<const double> point) {
    int best = 0;
    double best_d = squared_distance(centroids[0], point);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = squared_distance(centroids[c], point);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::vector<int> assign_all(std::span<const Vector> points, std::span<const Vector> centroids) {
    std::vector<int> labels(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) labels[i] = nearest(centroids, points[i]);
    return labels;
}

double inertia_of(std::span<const Vector> points, std::span<const int> labels, std::span<const Vector> centroids) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        total += squared_distance(points[i], centroids[static_cast<std::size_t>(labels[i])]);
    }
    return total;
}

std::vector<Vector> means_of(std::span<const Vector> points, std::span<const int> labels, int k, std::size_t dim,
                             std::vector<std::size_t>& sizes) {
    std::vector<Vector> sums(static_cast<std::size_t>(k), Vector(dim, 0.0));
    sizes.assign(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto c = static_cast<std::size_t>(labels[i]);
        ++sizes[c];
        for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < sums.size(); ++c) {
        if (sizes[c] == 0) continue;
        for (auto& v : sums[c]) v /= static_cast<double>(sizes[c]);
    }
    return sums;
}

// Recomputes centroids from labels; empty clusters take the point farthest
// from its own centroid (drawn from clusters with more than one member).
std::vector<Vector> update_centroids(std::span<const Vector> points, std::vector<int>& labels, int k,
                                     std::size_t dim) {
    std::vector<std::size_t> sizes;
    auto centroids = means_of(points, labels, k, dim, sizes);
    for (std::size_t empty = 0; empty < sizes.size(); ++empty) {
        if (sizes[empty] != 0) continue;
        std::size_t donor = points.size();
        double worst = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            if (sizes[c] <= 1) continue;
            const double d = squared_distance(points[i], centroids[c]);
            if (d > worst) {
                worst = d;
                donor = i;
            }
        }
        if (donor == points.size()) fail(ErrorCode::degenerate, "k-means: cannot repair empty cluster");
        labels[donor] = static_cast<int>(empty);
        centroids = means_of(points, labels, k, dim, sizes);
    }
    return centroids;
}

std::vector<Vector> kmeans_plus_plus(std::span<const Vector> points, int k, Rng& rng) {
    const std::size_t n = points.size();
    std::vector<Vector> centroids;
    std::vector<bool> chosen(n, false);
    std::size_t first = static_cast<std::size_t>(rng.uniform_index(n));
    centroids.push_back(points[first]);
    chosen[first] = true;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);

    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                cumulative += d2[i];
                pick = i;
                if (cumulative > target) break;
            }
        } else {
            // every point coincides with a chosen centre: pick an unused index
            std::vector<std::size_t> unused;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) unused.push_back(i);
            }
            pick = unused[static_cast<std::size_t>(rng.uniform_index(unused.size()))];
        }
        centroids.push_back(points[pick]);
        chosen[pick] = true;
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
    return centroids;
}

} // namespace

ClusterModel kmeans_fit(std::span<const Vector> points, int k, std::uint64_t seed, int max_iter) {
    if (points.empty()) fail(ErrorCode::validation, "k-means: no points");
    if (k < 1) fail(ErrorCode::validation, "k-means: k must be at least 1");
    if (static_cast<std::size_t>(k) > points.size()) {
        fail(ErrorCode::validation, "k-means: k = " + std::to_string(k) + " exceeds the number of points (" +
                                        std::to_string(points.size()) + ")");
    }
    if (max_iter < 1) fail(ErrorCode::validation, "k-means: max_iter must be at least 1");
    const std::size_t dim = points[0].size();
    for (const auto& p : points) {
        if (p.size() != dim) fail(ErrorCode::validation, "k-means: points differ in dimension");
        for (double v : p) {
            if (!std::isfinite(v)) fail(ErrorCode::validation, "k-means: non-finite coordinate");
        }
    }

    Rng rng(seed);
    ClusterModel model;
    model.k = k;
    model.centroids = kmeans_plus_plus(points, k, rng);
    std::vector<int> labels = assign_all(points, model.centroids);

    for (int it = 0; it < max_iter; ++it) {
        model.centroids = update_centroids(points, labels, k, dim);
        model.inertia_history.push_back(inertia_of(points, labels, model.centroids));
        ++model.iterations;
        auto next = assign_all(points, model.centroids);
        if (next == labels) {
            model.converged = true;
            break;
        }
        labels = std::move(next);
    }
    if (!model.converged) {
        model.centroids = update_centroids(points, labels, k, dim);
        model.inertia_history.push_back(inertia_of(points, labels, model.centroids));
    }
    model.assignments = std::move(labels);
    model.inertia = inertia_of(points, model.assignments, model.centroids);
    return model;
}

int assign_cluster(const ClusterModel& model, std::span<const double> point) {
    if (model.centroids.empty()) fail(ErrorCode::not_trained, "cluster model has no centroids");
    if (point.size() != model.centroids.front().size()) {
        fail(ErrorCode::validation, "cluster assignment: dimension mismatch (" + std::to_string(point.size()) +
                                        " vs " + std::to_string(model.centroids.front().size()) + ")");
    }
    return nearest(model.centroids, point);
}

double mean_silhouette(std::span<const Vector> points, std::span<const int> labels, int k) {
    const std::size_t n = points.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        if (sizes[own] <= 1) continue;
        std::vector<double> dist_sum(static_cast<std::size_t>(k), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[static_cast<std::size_t>(labels[j])] += std::sqrt(squared_distance(points[i], points[j]));
        }
        const double a = dist_sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < dist_sum.size(); ++c) {
            if (c == own || sizes[c] == 0) continue;
            b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
        }
        if (!std::isfinite(b)) continue;
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

int choose_k(std::span<const Vector> points, int k_max, std::uint64_t seed) {
    if (points.size() < 3) fail(ErrorCode::validation, "choose_k: at least 3 points required");
    if (k_max < 2) fail(ErrorCode::validation, "choose_k: k_max must be at least 2");
    const int upper = std::min(k_max, static_cast<int>(points.size()) - 1);
    int best_k = 2;
    double best_s = -std::numeric_limits<double>::infinity();
    for (int k = 2; k <= upper; ++k) {
        const auto model = kmeans_fit(points, k, seed);
        const double s = mean_silhouette(points, model.assignments, k);
        if (s > best_s + 1e-12) {
            best_s = s;
            best_k = k;
        }
    }
    return best_k;
}

Vector release_feature_vector(std::span<const WeightedItem> items) {
    Vector v(kReleaseFeatureDim, 0.0);
    for (const auto& w : items) {
        v[w.kind == ItemKind::fault ? 0 : 1] += 1.0;
        v[2 + static_cast<std::size_t>(w.severity)] += 1.0;
        v[6] += std::abs(w.weight);
        v[7] += 1.0;
    }
    return v;
}

Standardizer Standardizer::fit(std::span<const Vector> raw) {
    Standardizer s;
    if (raw.empty()) return s;
    const std::size_t dim = raw[0].size();
    const double n = static_cast<double>(raw.size());
    for (std::size_t d = 0; d < dim; ++d) {
        double mean = 0.0;
        for (const auto& v : raw) mean += v[d];
        mean /= n;
        double var = 0.0;
        for (const auto& v : raw) var += (v[d] - mean) * (v[d] - mean);
        var /= n;
        const double sd = std::sqrt(var);
        if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
            s.kept.push_back(d);
            s.mean.push_back(mean);
            s.scale.push_back(sd);
        }
    }
    return s;
}

Vector Standardizer::apply(std::span<const double> raw) const {
    Vector out(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (kept[i] >= raw.size()) fail(ErrorCode::validation, "standardizer: feature vector too short");
        out[i] = (raw[kept[i]] - mean[i]) / scale[i];
    }
    return out;
}

int ReleaseClusterer::assign(std::span<const double> raw_features) const {
    if (model.k <= 1) return 0;
    return assign_cluster(model, standardizer.apply(raw_features));
}

std::optional<int> ReleaseClusterer::cluster_of(std::string_view version) const {
    for (std::size_t i = 0; i < versions.size(); ++i) {
        if (versions[i] == version) return model.assignments[i];
    }
    return std::nullopt;
}

ReleaseClusterer fit_release_clusters(std::span<const ReleaseFeatures> releases, const ClusterOptions& options) {
    if (releases.empty()) fail(ErrorCode::validation, "release clustering: no releases");
    ReleaseClusterer out;
    std::vector<Vector> raw;
    for (const auto& r : releases) {
        out.versions.push_back(r.version);
        raw.push_back(r.vector);
    }
    out.standardizer = Standardizer::fit(raw);
    std::vector<Vector> points;
    for (const auto& v : raw) points.push_back(out.standardizer.apply(v));

    if (points.size() < 3 || out.standardizer.kept.empty()) {
        if (options.k && *options.k > 1 && out.standardizer.kept.empty()) {
            fail(ErrorCode::degenerate, "release clustering: all release features are constant");
        }
        if (!options.k || *options.k == 1) {
            out.model = kmeans_fit(points, 1, options.seed, options.max_iter);
            return out;
        }
    }
    const int k = options.k ? *options.k : choose_k(points, options.k_max, options.seed);
    out.model = kmeans_fit(points, k, options.seed, options.max_iter);
    return out;
}

std::vector<ReleaseFeatures> dataset_release_features(const Dataset& dataset, const ImpactTable& table,
                                                      const ItemEstimators& estimators) {
    std::vector<ReleaseFeatures> out;
    for (const auto& rel : dataset.releases()) {
        std::vector<WeightedItem> weighted;
        for (const auto& id : rel.items) weighted.push_back(weigh_item(complete_item(dataset.at(id), estimators), table));
        out.push_back({rel.version, release_feature_vector(weighted)});
    }
    return out;
}

json to_json(const ReleaseClusterer& c) {
    json assignments = json::object();
    for (std::size_t i = 0; i < c.versions.size(); ++i) assignments[c.versions[i]] = c.model.assignments[i];
    return {{"k", c.model.k},
            {"centroids", c.model.centroids},
            {"assignments", assignments},
            {"versions", c.versions},
            {"inertia", c.model.inertia},
            {"feature_names",
             {"faults", "enhancements", "critical", "major", "medium", "minor", "total_abs_wf", "item_count"}},
            {"standardization",
             {{"kept_dims", c.standardizer.kept}, {"mean", c.standardizer.mean}, {"scale", c.standardizer.scale}}}};
}

ReleaseClusterer release_clusterer_from_json(const json& doc) {
    try {
        ReleaseClusterer c;
        c.model.k = doc.at("k").get<int>();
        c.model.centroids = doc.at("centroids").get<std::vector<Vector>>();
        c.model.inertia = doc.at("inertia").get<double>();
        c.versions = doc.at("versions").get<std::vector<std::string>>();
        const auto& assignments = doc.at("assignments");
        for (const auto& v : c.versions) c.model.assignments.push_back(assignments.at(v).get<int>());
        const auto& st = doc.at("standardization");
        c.standardizer.kept = st.at("kept_dims").get<std::vector<std::size_t>>();
        c.standardizer.mean = st.at("mean").get<Vector>();
        c.standardizer.scale = st.at("scale").get<Vector>();
        c.model.converged = true;
        if (c.model.k < 1 || c.model.centroids.size() != static_cast<std::size_t>(c.model.k) ||
            c.standardizer.mean.size() != c.standardizer.kept.size() ||
            c.standardizer.scale.size() != c.standardizer.kept.size()) {
            fail(ErrorCode::validation, "cluster model: inconsistent shapes");
        }
        return c;
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, std::string("cluster model: ") + e.what());
    }
}

} // namespace swphm
