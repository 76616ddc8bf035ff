#include "telescale/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "telescale/error.hpp"
#include "telescale/stats.hpp"

namespace telescale {
namespace {

using nlohmann::json;

const std::vector<std::string>& preset_order() {
    static const std::vector<std::string> order{"const-0.3", "const-0.2", "const-0.1", "positional", "velocity"};
    return order;
}

std::optional<PairedComparison> compare(const std::map<std::uint64_t, double>& a,
                                        const std::map<std::uint64_t, double>& b) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [seed, value] : a) {
        if (auto it = b.find(seed); it != b.end()) {
            xs.push_back(value);
            ys.push_back(it->second);
        }
    }
    if (xs.size() < 2) return std::nullopt;
    const auto r = paired_t_test(xs, ys);
    return PairedComparison{xs.size(), r.t, r.p};
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_p(const std::optional<PairedComparison>& c) {
    if (!c) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, c->p < 1e-4 ? "%.2e" : "%.4f", c->p);
    return buf;
}

std::string mean_std(double m, double s, int precision) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << m << " ± " << s;
    return out.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

TrialRow to_row(const TrialRecord& r) {
    return TrialRow{r.scenario, r.seed, r.completion_time_s, r.weighted_error, r.events.size()};
}

std::vector<TrialRow> to_rows(std::span<const TrialRecord> records) {
    std::vector<TrialRow> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(to_row(r));
    return rows;
}

const ConditionSummary* StudyTable::find(const std::string& scenario) const {
    for (const auto& row : rows) {
        if (row.scenario == scenario) return &row;
    }
    return nullptr;
}

StudyTable summarize(std::span<const TrialRow> rows, const std::string& high, const std::string& mid) {
    std::map<std::string, std::map<std::uint64_t, double>> errors;
    std::map<std::string, std::map<std::uint64_t, double>> times;
    for (const auto& r : rows) {
        errors[r.scenario][r.seed] = r.weighted_error;
        times[r.scenario][r.seed] = r.time_s;
    }

    std::vector<std::string> names;
    for (const auto& name : preset_order()) {
        if (errors.contains(name)) names.push_back(name);
    }
    for (const auto& [name, _] : errors) {
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }

    StudyTable table;
    table.high_baseline = high;
    table.mid_baseline = mid;
    for (const auto& name : names) {
        ConditionSummary s;
        s.scenario = name;
        std::vector<double> e;
        std::vector<double> t;
        for (const auto& [seed, v] : errors[name]) e.push_back(v);
        for (const auto& [seed, v] : times[name]) t.push_back(v);
        s.n = e.size();
        s.error_mean = mean(e);
        s.error_std = sample_std(e);
        s.time_mean = mean(t);
        s.time_std = sample_std(t);
        if (name != high && errors.contains(high)) {
            s.error_vs_high = compare(errors[name], errors[high]);
            s.time_vs_high = compare(times[name], times[high]);
        }
        if (name != mid && errors.contains(mid)) {
            s.error_vs_mid = compare(errors[name], errors[mid]);
            s.time_vs_mid = compare(times[name], times[mid]);
        }
        table.rows.push_back(std::move(s));
    }
    return table;
}

StudyTable summarize(std::span<const TrialRecord> records) {
    const auto rows = to_rows(records);
    return summarize(rows);
}

std::string render_table(const StudyTable& table) {
    std::ostringstream out;
    char line[256];
    const std::string vs_high = "p vs " + table.high_baseline;
    const std::string vs_mid = "p vs " + table.mid_baseline;
    std::snprintf(line, sizeof line, "%-12s %4s  %-18s %-14s %-14s  %-18s %-14s %-14s\n", "condition", "n",
                  "error", vs_high.c_str(), vs_mid.c_str(), "time (s)", vs_high.c_str(), vs_mid.c_str());
    out << line;
    for (const auto& r : table.rows) {
        std::snprintf(line, sizeof line, "%-12s %4zu  %-18s %-14s %-14s  %-18s %-14s %-14s\n", r.scenario.c_str(),
                      r.n, mean_std(r.error_mean, r.error_std, 2).c_str(), fmt_p(r.error_vs_high).c_str(),
                      fmt_p(r.error_vs_mid).c_str(), mean_std(r.time_mean, r.time_std, 1).c_str(),
                      fmt_p(r.time_vs_high).c_str(), fmt_p(r.time_vs_mid).c_str());
        out << line;
    }
    return out.str();
}

std::string to_csv(std::span<const TrialRow> rows) {
    std::string out = "scenario,seed,time_s,weighted_error,n_events\n";
    for (const auto& r : rows) {
        out += r.scenario + ',' + std::to_string(r.seed) + ',' + format_double(r.time_s) + ',' +
               std::to_string(r.weighted_error) + ',' + std::to_string(r.n_events) + '\n';
    }
    return out;
}

std::vector<TrialRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "scenario,seed,time_s,weighted_error,n_events") {
        throw ConfigError("CSV header must be scenario,seed,time_s,weighted_error,n_events");
    }
    std::vector<TrialRow> rows;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 5) throw ConfigError("CSV line " + std::to_string(number) + ": expected 5 fields");
        try {
            TrialRow r;
            r.scenario = f[0];
            r.seed = std::stoull(f[1]);
            r.time_s = std::stod(f[2]);
            r.weighted_error = std::stoi(f[3]);
            r.n_events = std::stoull(f[4]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw ConfigError("CSV line " + std::to_string(number) + ": malformed number");
        }
    }
    return rows;
}

void write_csv(const std::filesystem::path& path, std::span<const TrialRow> rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_csv(rows);
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<TrialRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_csv(text.str());
}

json event_to_json(const ErrorEvent& e) {
    return {{"kind", to_string(e.kind)}, {"tick", e.tick}, {"weight", e.weight}, {"source", e.source}};
}

ErrorEvent event_from_json(const json& doc) {
    ErrorEvent e;
    e.kind = error_kind_from_string(doc.at("kind").get<std::string>());
    e.tick = doc.at("tick").get<std::int64_t>();
    e.weight = doc.at("weight").get<int>();
    e.source = doc.value("source", std::string());
    if (e.weight != weight(e.kind)) throw ConfigError("event weight does not match its kind");
    return e;
}

json record_to_json(const TrialRecord& r) {
    json events = json::array();
    for (const auto& e : r.events) events.push_back(event_to_json(e));
    return {{"scenario", r.scenario},
            {"seed", r.seed},
            {"completion_time_s", r.completion_time_s},
            {"timed_out", r.timed_out},
            {"weighted_error", r.weighted_error},
            {"events", events},
            {"trajectory_log", r.trajectory_log}};
}

TrialRecord record_from_json(const json& doc) {
    TrialRecord r;
    r.scenario = doc.at("scenario").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.completion_time_s = doc.at("completion_time_s").get<double>();
    r.timed_out = doc.at("timed_out").get<bool>();
    r.weighted_error = doc.at("weighted_error").get<int>();
    for (const auto& e : doc.at("events")) r.events.push_back(event_from_json(e));
    r.trajectory_log = doc.value("trajectory_log", std::string());
    if (r.weighted_error != weighted_error(r.events)) {
        throw ConfigError("record weighted_error does not match its events");
    }
    return r;
}

json records_to_json(std::span<const TrialRecord> records) {
    json out = json::array();
    for (const auto& r : records) out.push_back(record_to_json(r));
    return out;
}

std::vector<TrialRecord> records_from_json(const json& doc) {
    std::vector<TrialRecord> out;
    for (const auto& r : doc) out.push_back(record_from_json(r));
    return out;
}

void write_json(const std::filesystem::path& path, std::span<const TrialRecord> records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << records_to_json(records).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<TrialRecord> read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return records_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace telescale
