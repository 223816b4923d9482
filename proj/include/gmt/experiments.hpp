#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gmt {

struct ReportTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    /// Comma-separated with a header row and LF endings.
    std::string to_csv() const;
    /// Numeric value of a cell, by column name.
    double number(std::size_t row, const std::string& column) const;
};

struct ReportCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExperimentReport {
    std::string id;
    std::string config_text;  // canonical JSON of the merged config
    std::string inputs_hash;  // FNV-1a of the experiment id, config_text and quick flag
    std::string environment;  // compiler and build stamp; kept out of the rows
    bool quick = false;
    std::vector<ReportTable> tables;
    std::vector<ReportCheck> checks;

    bool passed() const;
    const ReportTable& table(const std::string& name) const;
    const ReportCheck& check(const std::string& name) const;
    /// Rows and checks only, so reruns compare byte for byte.
    std::string rows_text() const;
    std::string to_json_text() const;
};

const std::vector<std::string>& experiment_names();

/// Runs one of cantor_divergence, mv_identity, curve_pipeline, corona_packing, cotlar_scan.
/// Unknown config keys are rejected; missing ones take the shipped defaults.
ExperimentReport run_experiment(const std::string& name, const nlohmann::json& config = nlohmann::json::object(),
                                bool quick = false);

/// The defaults each experiment runs with, for documentation and the CLI.
nlohmann::json default_config(const std::string& name, bool quick = false);

}  // namespace gmt
