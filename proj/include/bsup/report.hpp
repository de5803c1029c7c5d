#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "bsup/metrics.hpp"
#include "bsup/stats.hpp"

namespace bsup {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolkitVersion = "1.0.0";

/// Finite values become numbers; +/-infinity becomes the string "inf"/"-inf";
/// NaN and nullopt become null.
Json json_number(double value);
Json json_number(const std::optional<double>& value);

/// Shortest CSV rendering used by every report: "%.10g", "inf", or empty.
std::string csv_number(double value);
std::string csv_number(const std::optional<double>& value);

Json to_json(const ImageMetricsReport& r);
Json to_json(const ConfusionMetrics& m);
Json to_json(const TestResult& r);
Json to_json(const ComparisonReport& r);

}  // namespace bsup
