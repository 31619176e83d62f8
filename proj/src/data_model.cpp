#include "swphm/data_model.hpp"

#include "swphm/csv.hpp"
#include "swphm/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace swphm {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::string trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

// Field access over a JSON object. CSV rows are converted to objects whose
// values are all strings, so numeric fields accept numeric strings when
// `strings_ok` is set.
class RecordReader {
public:
    RecordReader(const json& obj, std::string context, bool strings_ok)
        : obj_(obj), context_(std::move(context)), strings_ok_(strings_ok) {
        if (!obj_.is_object()) fail(ErrorCode::validation, context_ + ": expected an object");
    }

    [[noreturn]] void error(std::string_view field, const std::string& what) const {
        fail(ErrorCode::validation, context_ + ": field '" + std::string(field) + "': " + what);
    }

    bool has(std::string_view field) const {
        auto it = obj_.find(field);
        if (it == obj_.end() || it->is_null()) return false;
        if (strings_ok_ && it->is_string() && trim(it->get<std::string>()).empty()) return false;
        return true;
    }

    std::string string(std::string_view field) const {
        if (!has(field)) error(field, "missing");
        const auto& v = obj_.at(std::string(field));
        if (!v.is_string()) error(field, "expected a string");
        return v.get<std::string>();
    }

    std::string string_or(std::string_view field, std::string fallback) const {
        return has(field) ? string(field) : fallback;
    }

    double number(std::string_view field) const {
        if (!has(field)) error(field, "missing");
        const auto& v = obj_.at(std::string(field));
        if (v.is_number()) return v.get<double>();
        if (strings_ok_ && v.is_string()) return parse_double(field, v.get<std::string>());
        error(field, "expected a number");
    }

    std::int64_t integer(std::string_view field) const {
        const double d = number(field);
        if (!std::isfinite(d) || d != std::floor(d)) error(field, "expected an integer");
        return static_cast<std::int64_t>(d);
    }

    double parse_double(std::string_view field, const std::string& raw) const {
        const std::string text = trim(raw);
        double value = 0.0;
        const char* begin = text.data();
        const char* end = text.data() + text.size();
        if (!text.empty() && *begin == '+') ++begin;
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr != end) error(field, "not a number: '" + text + "'");
        return value;
    }

    const json& raw(std::string_view field) const { return obj_.at(std::string(field)); }
    bool strings_ok() const { return strings_ok_; }
    const std::string& context() const { return context_; }

private:
    const json& obj_;
    std::string context_;
    bool strings_ok_;
};

Sign parse_sign(const RecordReader& rec) {
    if (!rec.has("sign")) return Sign::plus;
    const auto& v = rec.raw("sign");
    if (v.is_string()) {
        const std::string s = trim(v.get<std::string>());
        if (s == "+" || s == "+1" || s == "1") return Sign::plus;
        if (s == "-" || s == "-1") return Sign::minus;
        rec.error("sign", "expected +1 or -1, got '" + s + "'");
    }
    if (v.is_number()) {
        const double d = v.get<double>();
        if (d == 1.0) return Sign::plus;
        if (d == -1.0) return Sign::minus;
    }
    rec.error("sign", "expected +1 or -1");
}

BacklogItem parse_item(const RecordReader& rec) {
    BacklogItem item;
    item.id = trim(rec.string("id"));
    if (item.id.empty()) rec.error("id", "empty");
    item.title = rec.string_or("title", "");
    item.description = rec.string_or("description", "");
    const std::string kind = trim(rec.string("kind"));
    try {
        item.kind = parse_kind(kind);
    } catch (const Error& e) {
        rec.error("kind", e.what());
    }
    if (rec.has("severity")) {
        const std::string severity = trim(rec.string("severity"));
        try {
            item.severity = parse_severity(severity);
        } catch (const Error& e) {
            rec.error("severity", e.what());
        }
    }
    if (rec.has("story_points")) {
        const auto sp = rec.integer("story_points");
        if (sp < 1 || sp > 8 || !is_story_point(static_cast<int>(sp))) {
            rec.error("story_points", "invalid story points " + std::to_string(sp) +
                                          " (allowed: 1, 2, 3, 5, 8)");
        }
        item.story_points = static_cast<int>(sp);
    }
    item.sign = parse_sign(rec);
    return item;
}

std::vector<BacklogItem> parse_item_records(const std::vector<std::pair<json, std::string>>& records,
                                            bool strings_ok) {
    std::vector<BacklogItem> items;
    std::unordered_set<std::string> seen;
    items.reserve(records.size());
    for (const auto& [obj, context] : records) {
        RecordReader rec(obj, context, strings_ok);
        BacklogItem item = parse_item(rec);
        if (!seen.insert(item.id).second) {
            fail(ErrorCode::validation, context + ": duplicate id '" + item.id + "'");
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            out.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(trim(current));
    if (out.size() == 1 && out.front().empty()) out.clear();
    return out;
}

ReleaseRecord parse_release(const RecordReader& rec) {
    ReleaseRecord r;
    r.version = trim(rec.string("version"));
    if (r.version.empty()) rec.error("version", "empty");

    if (rec.has("items")) {
        const auto& items = rec.raw("items");
        if (items.is_array()) {
            for (const auto& id : items) {
                if (!id.is_string()) rec.error("items", "expected an array of id strings");
                r.items.push_back(id.get<std::string>());
            }
        } else if (rec.strings_ok() && items.is_string()) {
            r.items = split_list(items.get<std::string>(), ';');
        } else {
            rec.error("items", "expected an array of id strings");
        }
    }

    if (!rec.has("env")) rec.error("env", "missing");
    try {
        r.env = env_from_json(rec.raw("env"), true);
    } catch (const Error& e) {
        rec.error("env", e.what());
    }

    if (rec.has("rt_runs_ms")) {
        const auto& runs = rec.raw("rt_runs_ms");
        if (runs.is_array()) {
            for (const auto& v : runs) {
                if (!v.is_number()) rec.error("rt_runs_ms", "expected numbers");
                r.rt_runs_ms.push_back(v.get<double>());
            }
        } else if (rec.strings_ok() && runs.is_string()) {
            for (const auto& s : split_list(runs.get<std::string>(), ';')) {
                r.rt_runs_ms.push_back(rec.parse_double("rt_runs_ms", s));
            }
        } else {
            rec.error("rt_runs_ms", "expected an array of numbers");
        }
    }
    for (double v : r.rt_runs_ms) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            std::ostringstream os;
            os << "response time runs must be positive, got " << v;
            rec.error("rt_runs_ms", os.str());
        }
    }
    return r;
}

json parse_json_text(std::string_view text, std::string_view what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        fail(ErrorCode::validation, std::string(what) + ": malformed JSON: " + e.what());
    }
}

// Converts CSV rows into string-valued JSON objects keyed by header names.
std::vector<std::pair<json, std::string>> csv_records(std::string_view text, std::string_view what) {
    const csv::Table table = csv::parse(text);
    std::vector<std::pair<json, std::string>> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        json obj = json::object();
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            obj[trim(table.header[c])] = table.rows[r][c];
        }
        out.emplace_back(std::move(obj), std::string(what) + " line " + std::to_string(table.line_numbers[r]));
    }
    return out;
}

std::string format_number(double v) { return csv::format_number(v); }

} // namespace

std::string_view to_string(ItemKind kind) {
    return kind == ItemKind::fault ? "fault" : "enhancement";
}

std::string_view to_string(Severity severity) {
    switch (severity) {
    case Severity::Critical: return "Critical";
    case Severity::Major: return "Major";
    case Severity::Medium: return "Medium";
    case Severity::Minor: return "Minor";
    }
    return "?";
}

ItemKind parse_kind(std::string_view text) {
    if (iequals(text, "fault")) return ItemKind::fault;
    if (iequals(text, "enhancement")) return ItemKind::enhancement;
    fail(ErrorCode::validation, "unknown kind '" + std::string(text) + "' (expected fault or enhancement)");
}

Severity parse_severity(std::string_view text) {
    for (Severity s : kAllSeverities) {
        if (iequals(text, to_string(s))) return s;
    }
    fail(ErrorCode::validation,
         "unknown impact scale '" + std::string(text) + "' (expected Critical, Major, Medium or Minor)");
}

bool is_story_point(int value) {
    return std::find(kStoryPointScale.begin(), kStoryPointScale.end(), value) != kStoryPointScale.end();
}

std::string BacklogItem::text() const {
    if (description.empty()) return title;
    if (title.empty()) return description;
    return title + " " + description;
}

void EnvironmentSpec::validate() const {
    if (os_bits != 32 && os_bits != 64) {
        fail(ErrorCode::validation, "os_bits must be 32 or 64, got " + std::to_string(os_bits));
    }
    if (!(clock_ghz > 0.0) || !std::isfinite(clock_ghz)) fail(ErrorCode::validation, "clock_ghz must be positive");
    if (!(ram_gb > 0.0) || !std::isfinite(ram_gb)) fail(ErrorCode::validation, "ram_gb must be positive");
    if (!(disk_gb > 0.0) || !std::isfinite(disk_gb)) fail(ErrorCode::validation, "disk_gb must be positive");
}

EnvironmentSpec env_from_json(const json& obj, bool require_all) {
    RecordReader rec(obj, "env", false);
    EnvironmentSpec env;
    auto pick = [&](std::string_view field, double& target) {
        if (rec.has(field)) {
            target = rec.number(field);
        } else if (require_all) {
            rec.error(field, "missing");
        }
    };
    double bits = env.os_bits;
    pick("os_bits", bits);
    if (bits != std::floor(bits)) rec.error("os_bits", "expected 32 or 64");
    env.os_bits = static_cast<int>(bits);
    pick("clock_ghz", env.clock_ghz);
    pick("ram_gb", env.ram_gb);
    pick("disk_gb", env.disk_gb);
    env.validate();
    return env;
}

Dataset::Dataset(std::vector<BacklogItem> items, std::vector<ReleaseRecord> releases)
    : items_(std::move(items)), releases_(std::move(releases)) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const auto& item = items_[i];
        if (item.story_points && !is_story_point(*item.story_points)) {
            fail(ErrorCode::validation, "item '" + item.id + "': invalid story points");
        }
        if (!index_.emplace(item.id, i).second) {
            fail(ErrorCode::validation, "duplicate id '" + item.id + "'");
        }
    }
    std::unordered_map<std::string, std::string> shipped_in;
    for (std::size_t r = 0; r < releases_.size(); ++r) {
        const auto& rel = releases_[r];
        rel.env.validate();
        if (r > 0 && compare_versions(releases_[r - 1].version, rel.version) != std::strong_ordering::less) {
            fail(ErrorCode::validation, "release versions are not strictly ordered at '" + rel.version + "'");
        }
        for (double v : rel.rt_runs_ms) {
            if (!(v > 0.0)) fail(ErrorCode::validation, "release '" + rel.version + "': non-positive response time");
        }
        for (const auto& id : rel.items) {
            if (!index_.count(id)) {
                fail(ErrorCode::validation, "release '" + rel.version + "' references unknown item '" + id + "'");
            }
            auto [it, inserted] = shipped_in.emplace(id, rel.version);
            if (!inserted) {
                fail(ErrorCode::validation, "item '" + id + "' appears in releases '" + it->second + "' and '" +
                                                rel.version + "'");
            }
        }
    }
}

const BacklogItem* Dataset::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &items_[it->second];
}

const BacklogItem& Dataset::at(std::string_view id) const {
    const BacklogItem* item = find(id);
    if (!item) fail(ErrorCode::validation, "unknown item '" + std::string(id) + "'");
    return *item;
}

std::vector<BacklogItem> Dataset::open_items() const {
    std::unordered_set<std::string> shipped;
    for (const auto& rel : releases_) shipped.insert(rel.items.begin(), rel.items.end());
    std::vector<BacklogItem> out;
    for (const auto& item : items_) {
        if (!shipped.count(item.id)) out.push_back(item);
    }
    return out;
}

FileFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (iequals(ext, ".csv")) return FileFormat::csv;
    return FileFormat::json;
}

std::strong_ordering compare_versions(std::string_view a, std::string_view b) {
    const auto pa = split_list(a, '.');
    const auto pb = split_list(b, '.');
    auto check = [](const std::vector<std::string>& parts, std::string_view v) {
        if (parts.empty()) fail(ErrorCode::validation, "unorderable version '" + std::string(v) + "'");
        for (const auto& p : parts) {
            if (p.empty()) fail(ErrorCode::validation, "unorderable version '" + std::string(v) + "'");
        }
    };
    check(pa, a);
    check(pb, b);
    auto numeric = [](const std::string& s) {
        return std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    };
    const std::size_t n = std::min(pa.size(), pb.size());
    for (std::size_t i = 0; i < n; ++i) {
        const bool na = numeric(pa[i]);
        const bool nb = numeric(pb[i]);
        if (na && nb) {
            // compare digit strings without overflow: strip leading zeros, then length, then text
            auto strip = [](const std::string& s) {
                auto pos = s.find_first_not_of('0');
                return pos == std::string::npos ? std::string("0") : s.substr(pos);
            };
            const std::string sa = strip(pa[i]);
            const std::string sb = strip(pb[i]);
            if (sa.size() != sb.size()) return sa.size() <=> sb.size();
            if (auto c = sa.compare(sb); c != 0) return c <=> 0;
        } else if (na != nb) {
            return na ? std::strong_ordering::less : std::strong_ordering::greater;
        } else if (auto c = pa[i].compare(pb[i]); c != 0) {
            return c <=> 0;
        }
    }
    return pa.size() <=> pb.size();
}

void sort_releases(std::vector<ReleaseRecord>& releases) {
    std::stable_sort(releases.begin(), releases.end(), [](const ReleaseRecord& x, const ReleaseRecord& y) {
        return compare_versions(x.version, y.version) == std::strong_ordering::less;
    });
    for (std::size_t i = 1; i < releases.size(); ++i) {
        if (compare_versions(releases[i - 1].version, releases[i].version) == std::strong_ordering::equal) {
            fail(ErrorCode::validation, "unorderable versions: '" + releases[i - 1].version + "' and '" +
                                            releases[i].version + "' compare equal");
        }
    }
}

std::vector<BacklogItem> parse_backlog_json(const json& doc) {
    if (!doc.is_array()) fail(ErrorCode::validation, "backlog: expected a JSON array of records");
    std::vector<std::pair<json, std::string>> records;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        records.emplace_back(doc[i], "backlog record " + std::to_string(i + 1));
    }
    return parse_item_records(records, false);
}

std::vector<BacklogItem> parse_backlog_json(std::string_view text) {
    return parse_backlog_json(parse_json_text(text, "backlog"));
}

std::vector<BacklogItem> parse_backlog_csv(std::string_view text) {
    return parse_item_records(csv_records(text, "backlog"), true);
}

std::vector<BacklogItem> parse_backlog(const std::filesystem::path& path, FileFormat format) {
    const std::string text = read_text_file(path);
    return format == FileFormat::csv ? parse_backlog_csv(text) : parse_backlog_json(std::string_view(text));
}

std::vector<BacklogItem> parse_backlog(const std::filesystem::path& path) {
    return parse_backlog(path, format_from_path(path));
}

std::vector<ReleaseRecord> parse_releases_json(const json& doc) {
    if (!doc.is_array()) fail(ErrorCode::validation, "releases: expected a JSON array of records");
    std::vector<ReleaseRecord> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        RecordReader rec(doc[i], "release record " + std::to_string(i + 1), false);
        out.push_back(parse_release(rec));
    }
    sort_releases(out);
    return out;
}

std::vector<ReleaseRecord> parse_releases_json(std::string_view text) {
    return parse_releases_json(parse_json_text(text, "releases"));
}

std::vector<ReleaseRecord> parse_releases_csv(std::string_view text) {
    std::vector<ReleaseRecord> out;
    for (auto& [obj, context] : csv_records(text, "releases")) {
        // flat env columns fold into the nested env object
        json env = json::object();
        for (const char* key : {"os_bits", "clock_ghz", "ram_gb", "disk_gb"}) {
            if (obj.contains(key)) {
                const std::string raw = trim(obj[key].get<std::string>());
                if (!raw.empty()) {
                    RecordReader tmp(obj, context, true);
                    env[key] = tmp.parse_double(key, raw);
                }
                obj.erase(key);
            }
        }
        obj["env"] = env;
        RecordReader rec(obj, context, true);
        out.push_back(parse_release(rec));
    }
    sort_releases(out);
    return out;
}

std::vector<ReleaseRecord> parse_measurements(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    return format_from_path(path) == FileFormat::csv ? parse_releases_csv(text) : parse_releases_json(std::string_view(text));
}

double mean_rt(const ReleaseRecord& release) {
    if (release.rt_runs_ms.empty()) {
        fail(ErrorCode::validation, "release '" + release.version + "': no measurements");
    }
    double sum = 0.0;
    for (double v : release.rt_runs_ms) sum += v;
    return sum / static_cast<double>(release.rt_runs_ms.size());
}

json to_json(const BacklogItem& item) {
    json j = {{"id", item.id},
              {"title", item.title},
              {"description", item.description},
              {"kind", to_string(item.kind)}};
    if (item.severity) j["severity"] = to_string(*item.severity);
    if (item.story_points) j["story_points"] = *item.story_points;
    j["sign"] = to_int(item.sign);
    return j;
}

json to_json(const EnvironmentSpec& env) {
    return {{"os_bits", env.os_bits}, {"clock_ghz", env.clock_ghz}, {"ram_gb", env.ram_gb}, {"disk_gb", env.disk_gb}};
}

json to_json(const ReleaseRecord& release) {
    return {{"version", release.version},
            {"items", release.items},
            {"env", to_json(release.env)},
            {"rt_runs_ms", release.rt_runs_ms}};
}

json backlog_to_json(std::span<const BacklogItem> items) {
    json out = json::array();
    for (const auto& item : items) out.push_back(to_json(item));
    return out;
}

json releases_to_json(std::span<const ReleaseRecord> releases) {
    json out = json::array();
    for (const auto& rel : releases) out.push_back(to_json(rel));
    return out;
}

std::string backlog_to_csv(std::span<const BacklogItem> items) {
    std::string out = csv::format_row({"id", "title", "description", "kind", "severity", "story_points", "sign"});
    for (const auto& item : items) {
        out += csv::format_row({item.id, item.title, item.description, std::string(to_string(item.kind)),
                                item.severity ? std::string(to_string(*item.severity)) : "",
                                item.story_points ? std::to_string(*item.story_points) : "",
                                std::to_string(to_int(item.sign))});
    }
    return out;
}

std::string releases_to_csv(std::span<const ReleaseRecord> releases) {
    std::string out =
        csv::format_row({"version", "items", "os_bits", "clock_ghz", "ram_gb", "disk_gb", "rt_runs_ms"});
    for (const auto& rel : releases) {
        std::string ids, runs;
        for (std::size_t i = 0; i < rel.items.size(); ++i) ids += (i ? ";" : "") + rel.items[i];
        for (std::size_t i = 0; i < rel.rt_runs_ms.size(); ++i) runs += (i ? ";" : "") + format_number(rel.rt_runs_ms[i]);
        out += csv::format_row({rel.version, ids, std::to_string(rel.env.os_bits), format_number(rel.env.clock_ghz),
                                format_number(rel.env.ram_gb), format_number(rel.env.disk_gb), runs});
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) fail(ErrorCode::io, "write failed for '" + path.string() + "'");
}

std::string dump_json(const json& doc) {
    return doc.dump(2) + "\n";
}

} // namespace swphm
