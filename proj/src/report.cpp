#include "ragbench/evaluation.hpp"

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ragbench {

using nlohmann::json;
using metrics::MetricId;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json bands_json(const std::array<std::size_t, 4>& b) {
    return {{"excellent", b[0]}, {"good", b[1]}, {"fair", b[2]}, {"poor", b[3]}};
}

std::string num(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out << content;
        if (!out) throw Error("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

AggregateReport build_report(const std::vector<EvaluationRecord>& records) {
    AggregateReport report;
    std::map<std::string, std::size_t> slot;
    std::vector<std::vector<double>> aggregates;
    std::vector<std::map<MetricId, std::pair<double, std::size_t>>> sums;  // sum, passes
    std::vector<double> numeric_sums;

    for (const auto& r : records) {
        auto [it, fresh] = slot.emplace(r.configuration_id, report.configurations.size());
        if (fresh) {
            ConfigurationSummary c;
            c.configuration_id = r.configuration_id;
            c.strategy = r.strategy;
            c.fusion_mode = r.fusion_mode;
            c.profile = r.profile;
            c.model = r.model;
            report.configurations.push_back(std::move(c));
            aggregates.emplace_back();
            sums.emplace_back();
            numeric_sums.push_back(0.0);
        }
        const std::size_t k = it->second;
        auto& c = report.configurations[k];
        ++c.records;
        if (r.metric_scores.empty() && r.error_status) ++c.generation_errors;
        if (r.agent_trace.contains("terminated_by") && r.agent_trace["terminated_by"].is_string()) {
            ++c.terminations[r.agent_trace["terminated_by"].get<std::string>()];
        }
        for (const auto& [id, s] : r.metric_scores) {
            auto& m = c.metrics[id];
            if (s.failed) {
                ++m.failed;
                ++c.metric_failures;
                continue;
            }
            ++m.count;
            auto& [sum, passes] = sums[k][id];
            sum += s.value;
            passes += s.passed ? 1 : 0;
            ++m.bands[static_cast<std::size_t>(classify_band(id, s.value))];
        }
        if (r.numerical_accuracy) {
            ++c.numerical_count;
            numeric_sums[k] += *r.numerical_accuracy;
        }
        if (r.verdict && r.aggregate_score) {
            ++c.scored;
            if (*r.verdict == Verdict::pass) ++c.passed;
            aggregates[k].push_back(*r.aggregate_score);
            ++c.aggregate_bands[static_cast<std::size_t>(classify_standard_band(*r.aggregate_score))];
        }
    }

    for (std::size_t k = 0; k < report.configurations.size(); ++k) {
        auto& c = report.configurations[k];
        if (c.scored > 0) {
            c.pass_rate = static_cast<double>(c.passed) / static_cast<double>(c.scored);
            double sum = 0.0;
            for (double a : aggregates[k]) sum += a;
            const double mean = sum / static_cast<double>(aggregates[k].size());
            double var = 0.0;
            for (double a : aggregates[k]) var += (a - mean) * (a - mean);
            c.mean_aggregate = mean;
            c.std_aggregate = std::sqrt(var / static_cast<double>(aggregates[k].size()));
        }
        for (auto& [id, m] : c.metrics) {
            if (m.count == 0) continue;
            const auto& [sum, passes] = sums[k][id];
            m.mean = sum / static_cast<double>(m.count);
            m.pass_rate = static_cast<double>(passes) / static_cast<double>(m.count);
        }
        if (c.numerical_count > 0) c.numerical_accuracy_mean = numeric_sums[k] / static_cast<double>(c.numerical_count);
        report.records += c.records;
        report.scored += c.scored;
        report.passed += c.passed;
    }
    if (report.scored > 0) report.pass_rate = static_cast<double>(report.passed) / static_cast<double>(report.scored);
    return report;
}

json to_json(const AggregateReport& report) {
    json configs = json::array();
    for (const auto& c : report.configurations) {
        json ms = json::object();
        for (const auto& [id, m] : c.metrics) {
            ms[metrics::to_string(id)] = {{"weight", metrics::spec(id).weight},
                                          {"category", metrics::to_string(metrics::spec(id).category)},
                                          {"count", m.count},
                                          {"failed", m.failed},
                                          {"mean", opt(m.mean)},
                                          {"pass_rate", opt(m.pass_rate)},
                                          {"bands", bands_json(m.bands)}};
        }
        configs.push_back({{"configuration_id", c.configuration_id},
                           {"strategy", c.strategy},
                           {"fusion_mode", c.fusion_mode.empty() ? json(nullptr) : json(c.fusion_mode)},
                           {"profile", c.profile},
                           {"model", c.model},
                           {"records", c.records},
                           {"scored", c.scored},
                           {"passed", c.passed},
                           {"pass_rate", opt(c.pass_rate)},
                           {"mean_aggregate", opt(c.mean_aggregate)},
                           {"std_aggregate", opt(c.std_aggregate)},
                           {"aggregate_bands", bands_json(c.aggregate_bands)},
                           {"numerical_accuracy_mean", opt(c.numerical_accuracy_mean)},
                           {"numerical_count", c.numerical_count},
                           {"errors", {{"generation", c.generation_errors}, {"metric_failures", c.metric_failures}}},
                           {"terminations", c.terminations},
                           {"metrics", ms}});
    }
    return {{"records", report.records},
            {"scored", report.scored},
            {"passed", report.passed},
            {"pass_rate", opt(report.pass_rate)},
            {"configurations", configs}};
}

RecordsFile read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read records file " + path);
    RecordsFile out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            out.records.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            ++out.skipped;
            out.warnings.push_back("line " + std::to_string(lineno) + ": skipped corrupt record (" + e.what() + ")");
        }
    }
    return out;
}

std::string metric_means_csv(const AggregateReport& report) {
    std::ostringstream out;
    out << "configuration_id";
    for (const auto& s : metrics::metric_specs()) out << ',' << s.name;
    out << ",aggregate,aggregate_std,numerical_accuracy\n";
    for (const auto& c : report.configurations) {
        out << csv_field(c.configuration_id);
        for (const auto& s : metrics::metric_specs()) {
            auto it = c.metrics.find(s.id);
            out << ',' << (it == c.metrics.end() ? "" : num(it->second.mean));
        }
        out << ',' << num(c.mean_aggregate) << ',' << num(c.std_aggregate) << ',' << num(c.numerical_accuracy_mean)
            << '\n';
    }
    return out.str();
}

std::string pass_rates_csv(const AggregateReport& report) {
    std::ostringstream out;
    out << "configuration_id,records,scored,passed,pass_rate";
    for (const auto& s : metrics::metric_specs()) out << ',' << s.name;
    out << '\n';
    for (const auto& c : report.configurations) {
        out << csv_field(c.configuration_id) << ',' << c.records << ',' << c.scored << ',' << c.passed << ','
            << num(c.pass_rate);
        for (const auto& s : metrics::metric_specs()) {
            auto it = c.metrics.find(s.id);
            out << ',' << (it == c.metrics.end() ? "" : num(it->second.pass_rate));
        }
        out << '\n';
    }
    return out.str();
}

std::string bands_csv(const AggregateReport& report) {
    std::ostringstream out;
    out << "configuration_id,metric,excellent,good,fair,poor\n";
    const auto row = [&](const std::string& cfg, const std::string& metric, const std::array<std::size_t, 4>& b) {
        out << csv_field(cfg) << ',' << metric << ',' << b[0] << ',' << b[1] << ',' << b[2] << ',' << b[3] << '\n';
    };
    for (const auto& c : report.configurations) {
        for (const auto& s : metrics::metric_specs()) {
            auto it = c.metrics.find(s.id);
            row(c.configuration_id, std::string(s.name), it == c.metrics.end() ? std::array<std::size_t, 4>{} : it->second.bands);
        }
        row(c.configuration_id, "aggregate", c.aggregate_bands);
    }
    return out.str();
}

std::string comparison_csv(const std::vector<std::pair<std::string, AggregateReport>>& runs) {
    std::vector<std::pair<std::string, const ConfigurationSummary*>> columns;
    for (const auto& [label, report] : runs) {
        for (const auto& c : report.configurations) columns.emplace_back(label + ":" + c.configuration_id, &c);
    }
    std::ostringstream out;
    out << "metric";
    for (const auto& [name, _] : columns) out << ',' << csv_field(name);
    out << '\n';
    out << "pass_rate";
    for (const auto& [_, c] : columns) out << ',' << num(c->pass_rate);
    out << "\nmean_aggregate";
    for (const auto& [_, c] : columns) out << ',' << num(c->mean_aggregate);
    out << '\n';
    for (const auto& s : metrics::metric_specs()) {
        out << s.name;
        for (const auto& [_, c] : columns) {
            auto it = c->metrics.find(s.id);
            out << ',' << (it == c->metrics.end() ? "" : num(it->second.pass_rate));
        }
        out << '\n';
    }
    return out.str();
}

void write_report_files(const AggregateReport& report, const std::string& dir) {
    const std::filesystem::path d(dir);
    std::filesystem::create_directories(d);
    write_text(d / "report.json", to_json(report).dump(2) + "\n");
    write_text(d / "metrics_means.csv", metric_means_csv(report));
    write_text(d / "pass_rates.csv", pass_rates_csv(report));
    write_text(d / "bands.csv", bands_csv(report));
}

}  // namespace ragbench
