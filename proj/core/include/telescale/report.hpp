#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telescale/harness.hpp"

namespace telescale {

/// The per-trial columns of the CSV export.
struct TrialRow {
    std::string scenario;
    std::uint64_t seed = 0;
    double time_s = 0.0;
    int weighted_error = 0;
    std::size_t n_events = 0;

    friend bool operator==(const TrialRow&, const TrialRow&) = default;
};

TrialRow to_row(const TrialRecord& record);
std::vector<TrialRow> to_rows(std::span<const TrialRecord> records);

/// Paired comparison of one condition against a baseline over shared seeds.
struct PairedComparison {
    std::size_t pairs = 0;
    double t = 0.0;
    double p = 1.0;

    friend bool operator==(const PairedComparison&, const PairedComparison&) = default;
};

struct ConditionSummary {
    std::string scenario;
    std::size_t n = 0;
    double error_mean = 0.0;
    double error_std = 0.0;
    double time_mean = 0.0;
    double time_std = 0.0;
    std::optional<PairedComparison> error_vs_high;
    std::optional<PairedComparison> time_vs_high;
    std::optional<PairedComparison> error_vs_mid;
    std::optional<PairedComparison> time_vs_mid;

    friend bool operator==(const ConditionSummary&, const ConditionSummary&) = default;
};

/// Mean +- sample std per condition, with paired p-values against the two
/// constant-scaling baselines (c = 0.3 and c = 0.2 by default).
struct StudyTable {
    std::string high_baseline = "const-0.3";
    std::string mid_baseline = "const-0.2";
    std::vector<ConditionSummary> rows;

    const ConditionSummary* find(const std::string& scenario) const;

    friend bool operator==(const StudyTable&, const StudyTable&) = default;
};

/// Order of rows: the five preset conditions first, then other names sorted.
StudyTable summarize(std::span<const TrialRow> rows, const std::string& high_baseline = "const-0.3",
                     const std::string& mid_baseline = "const-0.2");
StudyTable summarize(std::span<const TrialRecord> records);

std::string render_table(const StudyTable& table);

std::string to_csv(std::span<const TrialRow> rows);
std::vector<TrialRow> parse_csv(const std::string& text);
void write_csv(const std::filesystem::path& path, std::span<const TrialRow> rows);
std::vector<TrialRow> read_csv(const std::filesystem::path& path);

nlohmann::json record_to_json(const TrialRecord& record);
TrialRecord record_from_json(const nlohmann::json& doc);
nlohmann::json records_to_json(std::span<const TrialRecord> records);
std::vector<TrialRecord> records_from_json(const nlohmann::json& doc);
void write_json(const std::filesystem::path& path, std::span<const TrialRecord> records);
std::vector<TrialRecord> read_json(const std::filesystem::path& path);

nlohmann::json event_to_json(const ErrorEvent& event);
ErrorEvent event_from_json(const nlohmann::json& doc);

}  // namespace telescale
