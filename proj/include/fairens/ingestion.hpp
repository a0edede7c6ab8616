#ifndef FAIRENS_INGESTION_HPP
#define FAIRENS_INGESTION_HPP

#include "fairens/core.hpp"
#include "fairens/io.hpp"
#include "fairens/random.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace fairens {

// ---------------------------------------------------------------------------
// Synthetic protected attribute

/// Seeded group assignment that over-represents outliers in group 0.
///
/// Inliers land in each of the v groups with probability 1/v. Outliers land
/// in group 0 with probability (1 + b(v-1))/v and in each other group with
/// (1 - b)/v, so b = 0 is label-independent and b = 1 puts every outlier in
/// group 0. One uniform draw per instance, in index order.
inline std::vector<int> sample_biased_groups(const std::vector<int>& labels, int v_groups, double bias_strength,
                                             std::uint64_t seed)
{
    const double v = v_groups;
    const double p0_out = (1.0 + bias_strength * (v - 1.0)) / v;
    const double p_other_out = (1.0 - bias_strength) / v;
    Rng rng(seed);
    std::vector<int> groups(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double u = rng.uniform01();
        double cumulative = 0.0;
        int g = v_groups - 1;
        for (int j = 0; j < v_groups - 1; ++j) {
            cumulative += labels[i] == 1 ? (j == 0 ? p0_out : p_other_out) : 1.0 / v;
            if (u < cumulative) {
                g = j;
                break;
            }
        }
        groups[i] = g;
    }
    return groups;
}

inline Dataset inject_protected_attribute(Dataset d, int v_groups, double bias_strength, std::uint64_t seed)
{
    if (!d.labels) {
        throw InvalidInput("inject_protected_attribute: dataset '" + d.name + "' has no labels");
    }
    if (v_groups < 2) {
        throw InvalidConfig("inject_protected_attribute: need at least 2 groups");
    }
    if (static_cast<std::size_t>(v_groups) > d.size()) {
        throw InvalidConfig("inject_protected_attribute: " + std::to_string(v_groups) + " groups exceed n = " +
                            std::to_string(d.size()));
    }
    if (!(bias_strength >= 0.0 && bias_strength <= 1.0)) {
        throw InvalidConfig("inject_protected_attribute: bias strength must lie in [0,1]");
    }
    d.groups = sample_biased_groups(*d.labels, v_groups, bias_strength, seed);
    std::vector<std::size_t> sizes(static_cast<std::size_t>(v_groups), 0);
    for (int g : d.groups) {
        ++sizes[static_cast<std::size_t>(g)];
    }
    for (int g = 0; g < v_groups; ++g) {
        if (sizes[static_cast<std::size_t>(g)] == 0) {
            throw InvalidInput("inject_protected_attribute: group " + std::to_string(g) +
                               " received no instances; choose another seed");
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Dataset roster

struct NativeGroups {};

struct SyntheticGroups {
    int v_groups = 2;
    double bias_strength = 0.5;
    std::uint64_t seed = 0;
};

using GroupRule = std::variant<NativeGroups, SyntheticGroups>;

/// Published inlier/outlier sizes and group counts of the benchmark datasets.
struct DatasetStats {
    const char* name;
    std::size_t inliers;
    std::size_t outliers;
    int groups;
    bool native_groups;
};

inline constexpr std::array<DatasetStats, 8> kBenchmarks{{
    {"communities", 1717, 277, 4, true},
    {"german_credit", 700, 300, 4, true},
    {"annthyroid", 6666, 534, 2, false},
    {"cardio", 1655, 176, 2, false},
    {"japanese_vowels", 1406, 50, 3, false},
    {"breast_cancer", 444, 239, 3, false},
    {"mammography", 10923, 260, 4, false},
    {"pima", 500, 268, 4, false},
}};

inline const DatasetStats* find_benchmark(const std::string& name)
{
    for (const auto& b : kBenchmarks) {
        if (name == b.name) {
            return &b;
        }
    }
    return nullptr;
}

/// Default bias strength for synthetic groups on the outlier-detection datasets.
inline constexpr double kDefaultBiasStrength = 0.5;

struct DatasetSpec {
    std::string name = "custom";  // one of kBenchmarks or "custom"
    std::filesystem::path source_path;
    GroupRule group_rule = NativeGroups{};
    // German Credit: zero-based column holding the personal-status/sex code.
    int group_column = 8;
};

/// Default spec for a benchmark name: native groups where the data has a
/// protected attribute, otherwise synthetic groups with the published count.
inline DatasetSpec benchmark_spec(const std::string& name, std::filesystem::path path, std::uint64_t seed,
                                  double bias_strength = kDefaultBiasStrength)
{
    const auto* b = find_benchmark(name);
    if (!b) {
        throw InvalidConfig("unknown dataset '" + name + "'");
    }
    DatasetSpec spec;
    spec.name = name;
    spec.source_path = std::move(path);
    if (!b->native_groups) {
        spec.group_rule = SyntheticGroups{b->groups, bias_strength, seed};
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Cache format
//
//   # dataset: <name>
//   <feature names...>,group[,label]
//   rows...

inline constexpr const char* kGroupColumn = "group";
inline constexpr const char* kLabelColumn = "label";

inline void save_dataset(const Dataset& d, const std::filesystem::path& path, const io::KeyValues& meta = {})
{
    validate(d);
    std::string text = "# dataset: " + d.name + "\n";
    std::vector<std::string> names = d.feature_names;
    if (names.empty()) {
        for (std::size_t c = 0; c < d.dims(); ++c) {
            names.push_back("x" + std::to_string(c));
        }
    }
    for (const auto& nm : names) {
        if (nm == kGroupColumn || nm == kLabelColumn || nm.find(',') != std::string::npos || nm.empty()) {
            throw InvalidInput("save_dataset: unusable feature name '" + nm + "'");
        }
        text += nm + ",";
    }
    text += kGroupColumn;
    if (d.labels) {
        text += std::string(",") + kLabelColumn;
    }
    text += "\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t c = 0; c < d.dims(); ++c) {
            text += io::format_double(d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
            text += ",";
        }
        text += std::to_string(d.groups[i]);
        if (d.labels) {
            text += "," + std::to_string((*d.labels)[i]);
        }
        text += "\n";
    }
    io::write_text(path, text);
    if (!meta.empty()) {
        io::write_key_values(path.string() + ".meta", meta);
    }
}

/// Reads the cache format, or any CSV whose header names a `group` column
/// (and optionally a `label` column); every other column is a feature.
inline Dataset load_cached(const std::filesystem::path& path)
{
    const auto lines = io::read_lines(path);
    std::size_t at = 0;
    Dataset d;
    d.name = path.stem().string();
    while (at < lines.size() && (io::trim(lines[at]).empty() || io::trim(lines[at]).front() == '#')) {
        const auto body = io::trim(lines[at]);
        constexpr std::string_view tag = "# dataset:";
        if (body.substr(0, tag.size()) == tag) {
            d.name = std::string(io::trim(body.substr(tag.size())));
        }
        ++at;
    }
    if (at >= lines.size()) {
        throw ParseError(path.string() + ": missing header row");
    }
    const auto header = io::split(lines[at++], ',');
    int group_col = -1;
    int label_col = -1;
    std::vector<int> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == kGroupColumn) {
            group_col = static_cast<int>(c);
        } else if (header[c] == kLabelColumn) {
            label_col = static_cast<int>(c);
        } else {
            if (header[c].empty()) {
                throw ParseError(path.string() + ": empty column name in header");
            }
            feature_cols.push_back(static_cast<int>(c));
            d.feature_names.push_back(header[c]);
        }
    }
    if (group_col < 0) {
        throw ParseError(path.string() + ": header has no '" + kGroupColumn + "' column");
    }
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (; at < lines.size(); ++at) {
        if (io::trim(lines[at]).empty()) {
            continue;
        }
        const auto cells = io::split(lines[at], ',');
        const auto where = path.string() + ":" + std::to_string(at + 1);
        if (cells.size() != header.size()) {
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(feature_cols.size());
        for (int c : feature_cols) {
            const auto v = io::parse_double(cells[static_cast<std::size_t>(c)]);
            if (!v) {
                throw ParseError(where + ": column '" + header[static_cast<std::size_t>(c)] + "' is not numeric");
            }
            row.push_back(*v);
        }
        const auto g = io::parse_int(cells[static_cast<std::size_t>(group_col)]);
        if (!g) {
            throw ParseError(where + ": column 'group' is not an integer");
        }
        d.groups.push_back(static_cast<int>(*g));
        if (label_col >= 0) {
            const auto l = io::parse_int(cells[static_cast<std::size_t>(label_col)]);
            if (!l) {
                throw ParseError(where + ": column 'label' is not an integer");
            }
            labels.push_back(static_cast<int>(*l));
        }
        rows.push_back(std::move(row));
    }
    d.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < feature_cols.size(); ++c) {
            d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    if (label_col >= 0) {
        d.labels = std::move(labels);
    }
    validate(d);
    return d;
}

// ---------------------------------------------------------------------------
// Raw benchmark loaders

namespace detail {

struct RawTable {
    std::vector<std::vector<std::string>> rows;
    std::size_t columns = 0;
};

/// Reads a delimited file, skipping one leading header row when its first
/// field is not numeric and `may_have_header` is set.
inline RawTable read_table(const std::filesystem::path& path, char delim, bool may_have_header)
{
    RawTable t;
    const auto lines = io::read_lines(path);
    bool first = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (io::trim(lines[i]).empty()) {
            continue;
        }
        auto cells = io::split(lines[i], delim);
        if (first) {
            first = false;
            if (may_have_header && !io::parse_double(cells.front())) {
                continue;
            }
            t.columns = cells.size();
        }
        if (t.columns == 0) {
            t.columns = cells.size();
        }
        if (cells.size() != t.columns) {
            throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": expected " +
                             std::to_string(t.columns) + " fields, got " + std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.rows.empty()) {
        throw ParseError(path.string() + ": no data rows");
    }
    return t;
}

inline bool is_missing(const std::string& cell)
{
    return cell.empty() || cell == "?" || cell == "NA" || cell == "nan";
}

inline void check_counts(const Dataset& d, const DatasetStats& stats)
{
    std::size_t outliers = 0;
    for (int l : *d.labels) {
        outliers += static_cast<std::size_t>(l);
    }
    const std::size_t inliers = d.size() - outliers;
    if (inliers != stats.inliers || outliers != stats.outliers) {
        throw SizeMismatch(std::string("dataset '") + stats.name + "': expected " + std::to_string(stats.inliers) +
                           "/" + std::to_string(stats.outliers) + " inliers/outliers, got " +
                           std::to_string(inliers) + "/" + std::to_string(outliers) + " (diff " +
                           std::to_string(static_cast<long long>(inliers) - static_cast<long long>(stats.inliers)) +
                           "/" +
                           std::to_string(static_cast<long long>(outliers) - static_cast<long long>(stats.outliers)) +
                           ")");
    }
    if (d.group_count() != stats.groups) {
        throw SizeMismatch(std::string("dataset '") + stats.name + "': expected " + std::to_string(stats.groups) +
                           " groups, got " + std::to_string(d.group_count()));
    }
}

inline double numeric_cell(const RawTable& t, std::size_t r, std::size_t c, const std::filesystem::path& path)
{
    const auto v = io::parse_double(t.rows[r][c]);
    if (!v) {
        throw ParseError(path.string() + ": row " + std::to_string(r + 1) + ", column " + std::to_string(c) +
                         " is not numeric ('" + t.rows[r][c] + "')");
    }
    return *v;
}

// Communities and Crime column positions (zero-based).
inline constexpr std::size_t kCommunitiesColumns = 128;
inline constexpr std::size_t kCommunitiesNonPredictive = 5;  // state, county, community, name, fold
inline constexpr std::array<std::size_t, 4> kCommunitiesRace{7, 8, 9, 10};  // black, white, asian, hispanic
inline constexpr std::size_t kCommunitiesCrime = 127;

inline Dataset load_communities(const DatasetSpec& spec)
{
    const auto t = read_table(spec.source_path, ',', true);
    if (t.columns != kCommunitiesColumns) {
        throw ParseError(spec.source_path.string() + ": expected 128 columns for communities, got " +
                         std::to_string(t.columns));
    }
    // Predictive columns with any missing entry are dropped as whole columns;
    // the police-statistics block is missing for most communities.
    std::vector<std::size_t> feature_cols;
    std::size_t dropped = 0;
    for (std::size_t c = kCommunitiesNonPredictive; c < kCommunitiesCrime; ++c) {
        if (std::find(kCommunitiesRace.begin(), kCommunitiesRace.end(), c) != kCommunitiesRace.end()) {
            continue;
        }
        const bool missing =
            std::any_of(t.rows.begin(), t.rows.end(), [&](const auto& row) { return is_missing(row[c]); });
        if (missing) {
            ++dropped;
        } else {
            feature_cols.push_back(c);
        }
    }
    if (dropped > 0) {
        warn("communities: dropped " + std::to_string(dropped) + " columns with missing values");
    }
    Dataset d;
    d.name = spec.name;
    d.features.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
    d.labels.emplace();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 0; c < feature_cols.size(); ++c) {
            d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                numeric_cell(t, r, feature_cols[c], spec.source_path);
        }
        std::size_t best = 0;
        double best_share = -1.0;
        for (std::size_t g = 0; g < kCommunitiesRace.size(); ++g) {
            const double share = numeric_cell(t, r, kCommunitiesRace[g], spec.source_path);
            if (share > best_share) {
                best_share = share;
                best = g;
            }
        }
        d.groups.push_back(static_cast<int>(best));
        d.labels->push_back(numeric_cell(t, r, kCommunitiesCrime, spec.source_path) > 0.5 ? 1 : 0);
    }
    for (auto c : feature_cols) {
        d.feature_names.push_back("c" + std::to_string(c));
    }
    return d;
}

inline constexpr std::size_t kGermanColumns = 25;  // 24 numeric attributes + class

inline Dataset load_german_credit(const DatasetSpec& spec)
{
    const auto t = read_table(spec.source_path, ' ', false);
    if (t.columns != kGermanColumns) {
        throw ParseError(spec.source_path.string() + ": expected 25 columns for german credit (numeric), got " +
                         std::to_string(t.columns));
    }
    const auto gcol = static_cast<std::size_t>(spec.group_column);
    if (spec.group_column < 0 || gcol >= kGermanColumns - 1) {
        throw InvalidConfig("german_credit: group column out of range");
    }
    std::set<long long> codes;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        codes.insert(static_cast<long long>(numeric_cell(t, r, gcol, spec.source_path)));
    }
    const std::vector<long long> code_list(codes.begin(), codes.end());
    Dataset d;
    d.name = spec.name;
    d.features.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(kGermanColumns - 2));
    d.labels.emplace();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Eigen::Index out_c = 0;
        for (std::size_t c = 0; c + 1 < kGermanColumns; ++c) {
            if (c != gcol) {
                d.features(static_cast<Eigen::Index>(r), out_c++) = numeric_cell(t, r, c, spec.source_path);
            }
        }
        const auto code = static_cast<long long>(numeric_cell(t, r, gcol, spec.source_path));
        d.groups.push_back(static_cast<int>(std::lower_bound(code_list.begin(), code_list.end(), code) -
                                            code_list.begin()));
        const double cls = numeric_cell(t, r, kGermanColumns - 1, spec.source_path);
        if (cls != 1.0 && cls != 2.0) {
            throw ParseError(spec.source_path.string() + ": class column must be 1 (good) or 2 (bad)");
        }
        d.labels->push_back(cls == 1.0 ? 0 : 1);
    }
    for (std::size_t c = 0; c + 1 < kGermanColumns; ++c) {
        if (c != gcol) {
            d.feature_names.push_back("a" + std::to_string(c + 1));
        }
    }
    return d;
}

/// Outlier-detection benchmark exported to CSV: features, then a 0/1 label
/// as the last column. Rows with missing cells are dropped and counted.
inline Dataset load_labelled_csv(const DatasetSpec& spec)
{
    const auto t = read_table(spec.source_path, ',', true);
    if (t.columns < 2) {
        throw ParseError(spec.source_path.string() + ": need at least one feature column and a label column");
    }
    const std::size_t m = t.columns - 1;
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (std::none_of(t.rows[r].begin(), t.rows[r].end(), is_missing)) {
            keep.push_back(r);
        }
    }
    if (keep.size() != t.rows.size()) {
        warn(spec.name + ": dropped " + std::to_string(t.rows.size() - keep.size()) + " rows with missing values");
    }
    Dataset d;
    d.name = spec.name;
    d.features.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(m));
    d.labels.emplace();
    for (std::size_t k = 0; k < keep.size(); ++k) {
        for (std::size_t c = 0; c < m; ++c) {
            d.features(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) =
                numeric_cell(t, keep[k], c, spec.source_path);
        }
        const double l = numeric_cell(t, keep[k], m, spec.source_path);
        if (l != 0.0 && l != 1.0) {
            throw ParseError(spec.source_path.string() + ": label column must be 0 or 1");
        }
        d.labels->push_back(static_cast<int>(l));
        d.groups.push_back(0);
    }
    for (std::size_t c = 0; c < m; ++c) {
        d.feature_names.push_back("x" + std::to_string(c));
    }
    return d;
}

}  // namespace detail

/// Loads a benchmark from its raw file (or a custom cache-format CSV) and
/// applies the group rule. Benchmark sizes are checked against the
/// published statistics and a mismatch is a hard error.
inline Dataset load_dataset(const DatasetSpec& spec)
{
    if (spec.name == "custom") {
        Dataset d = load_cached(spec.source_path);
        if (const auto* syn = std::get_if<SyntheticGroups>(&spec.group_rule)) {
            d = inject_protected_attribute(std::move(d), syn->v_groups, syn->bias_strength, syn->seed);
        }
        validate(d);
        return d;
    }
    const auto* stats = find_benchmark(spec.name);
    if (!stats) {
        throw InvalidConfig("unknown dataset '" + spec.name + "'");
    }
    Dataset d;
    if (spec.name == "communities") {
        d = detail::load_communities(spec);
    } else if (spec.name == "german_credit") {
        d = detail::load_german_credit(spec);
    } else {
        d = detail::load_labelled_csv(spec);
    }
    if (const auto* syn = std::get_if<SyntheticGroups>(&spec.group_rule)) {
        d = inject_protected_attribute(std::move(d), syn->v_groups, syn->bias_strength, syn->seed);
    } else if (!stats->native_groups) {
        throw InvalidConfig("dataset '" + spec.name + "' has no protected attribute; use synthetic groups");
    }
    detail::check_counts(d, *stats);
    validate(d);
    return d;
}

}  // namespace fairens

#endif  // FAIRENS_INGESTION_HPP
