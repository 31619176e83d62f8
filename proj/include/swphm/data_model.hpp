#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace swphm {

using json = nlohmann::json;

enum class ItemKind { fault, enhancement };

enum class Severity { Critical, Major, Medium, Minor };

inline constexpr std::array<Severity, 4> kAllSeverities = {
    Severity::Critical, Severity::Major, Severity::Medium, Severity::Minor};

/// Story points are restricted to this Fibonacci scale.
inline constexpr std::array<int, 5> kStoryPointScale = {1, 2, 3, 5, 8};

/// +1 for work that adds load, -1 for items marked as performance-improving.
enum class Sign : int { plus = 1, minus = -1 };

std::string_view to_string(ItemKind kind);
std::string_view to_string(Severity severity);
ItemKind parse_kind(std::string_view text);
Severity parse_severity(std::string_view text);
bool is_story_point(int value);
inline int to_int(Sign s) { return static_cast<int>(s); }

struct BacklogItem {
    std::string id;
    std::string title;
    std::string description;
    ItemKind kind = ItemKind::fault;
    std::optional<Severity> severity;
    std::optional<int> story_points;
    Sign sign = Sign::plus;

    /// Title and description joined, the text the classifiers see.
    std::string text() const;

    bool operator==(const BacklogItem&) const = default;
};

struct EnvironmentSpec {
    int os_bits = 64;
    double clock_ghz = 1.8;
    double ram_gb = 4.0;
    double disk_gb = 50.0;

    void validate() const;
    bool operator==(const EnvironmentSpec&) const = default;
};

struct ReleaseRecord {
    std::string version;
    std::vector<std::string> items;
    EnvironmentSpec env;
    std::vector<double> rt_runs_ms;

    bool measured() const { return !rt_runs_ms.empty(); }
    bool operator==(const ReleaseRecord&) const = default;
};

/// Validated pairing of backlog items and the releases that shipped them.
/// Items that belong to no release are the open backlog.
class Dataset {
public:
    Dataset() = default;

    /// Throws Error(validation) if a release references an unknown id, an id is
    /// shipped twice, ids are duplicated, or versions are not strictly ordered.
    Dataset(std::vector<BacklogItem> items, std::vector<ReleaseRecord> releases);

    const std::vector<BacklogItem>& items() const { return items_; }
    const std::vector<ReleaseRecord>& releases() const { return releases_; }

    const BacklogItem* find(std::string_view id) const;
    const BacklogItem& at(std::string_view id) const;

    /// Items shipped by no release, in backlog order.
    std::vector<BacklogItem> open_items() const;

    bool operator==(const Dataset& other) const {
        return items_ == other.items_ && releases_ == other.releases_;
    }

private:
    std::vector<BacklogItem> items_;
    std::vector<ReleaseRecord> releases_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class FileFormat { json, csv };

FileFormat format_from_path(const std::filesystem::path& path);

/// Dotted comparison: numeric components numerically, others lexicographically,
/// a numeric component sorts before a non-numeric one, a prefix sorts first.
std::strong_ordering compare_versions(std::string_view a, std::string_view b);

std::vector<BacklogItem> parse_backlog(const std::filesystem::path& path, FileFormat format);
std::vector<BacklogItem> parse_backlog(const std::filesystem::path& path);
std::vector<BacklogItem> parse_backlog_json(std::string_view text);
std::vector<BacklogItem> parse_backlog_json(const json& doc);
std::vector<BacklogItem> parse_backlog_csv(std::string_view text);

std::vector<ReleaseRecord> parse_measurements(const std::filesystem::path& path);
std::vector<ReleaseRecord> parse_releases_json(std::string_view text);
std::vector<ReleaseRecord> parse_releases_json(const json& doc);
std::vector<ReleaseRecord> parse_releases_csv(std::string_view text);

/// Sorts by version; rejects duplicate or malformed versions.
void sort_releases(std::vector<ReleaseRecord>& releases);

/// Average of the per-run mean response times.
double mean_rt(const ReleaseRecord& release);

json to_json(const BacklogItem& item);
json to_json(const EnvironmentSpec& env);
json to_json(const ReleaseRecord& release);
json backlog_to_json(std::span<const BacklogItem> items);
json releases_to_json(std::span<const ReleaseRecord> releases);
std::string backlog_to_csv(std::span<const BacklogItem> items);
std::string releases_to_csv(std::span<const ReleaseRecord> releases);

/// Parses an environment object. Missing keys take the defaults of
/// EnvironmentSpec unless `require_all` is set.
EnvironmentSpec env_from_json(const json& obj, bool require_all = false);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Stable two-space JSON rendering with a trailing newline.
std::string dump_json(const json& doc);

} // namespace swphm
