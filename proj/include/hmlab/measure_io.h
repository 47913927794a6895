#pragma once

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "hmlab/measure.h"

namespace hmlab {

/// CSV with header row x1..xd,weight. The intrinsic dimension defaults to
/// d - 1.
PointMeasure read_measure_csv(std::istream& in);
void write_measure_csv(std::ostream& out, const PointMeasure& mu);

/// {"dim", "n", "points": [[...]], "weights": [...]}.
nlohmann::json measure_to_json(const PointMeasure& mu);
PointMeasure measure_from_json(const nlohmann::json& j);

/// Dispatches on the file extension (.csv or .json).
PointMeasure load_measure(const std::string& path);
void save_measure(const std::string& path, const PointMeasure& mu);

}  // namespace hmlab
