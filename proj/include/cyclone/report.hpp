#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cyclone/pipeline.hpp"

namespace cyclone {

enum class ReportFormat { json, csv_bundle };

std::optional<ReportFormat> parse_report_format(std::string_view text);

/// Pretty-printed JSON with keys in a fixed order; identical reports give
/// identical bytes.
std::string report_to_json(const DetectionReport& report);
/// Throws InputError on malformed JSON or missing keys.
DetectionReport report_from_json(std::string_view text);

/// JSON writes a single file at `path`; csv_bundle writes cycles.csv,
/// flagged_accounts.csv, funnel.csv and histogram.csv into the directory
/// `path`, creating it if needed.
void write_report(const DetectionReport& report, const std::filesystem::path& path,
                  ReportFormat format = ReportFormat::json);
DetectionReport read_report(const std::filesystem::path& path);

/// The settings part of a report's `config` block, as JSON text.
std::string config_to_json(const PipelineConfig& config);
/// Overlays keys present in `text` onto `base`. Unknown keys are rejected.
PipelineConfig config_from_json(std::string_view text, PipelineConfig base = {});

}  // namespace cyclone
