#pragma once

#include <string>
#include <vector>

#include "hmlab/config.h"
#include "hmlab/report.h"

namespace hmlab {

struct ExperimentInfo {
    std::string name;
    std::string description;
};

/// Registered experiments in a fixed order.
const std::vector<ExperimentInfo>& list_experiments();

/// Runs cfg.str("experiment") and returns its report. Library errors
/// propagate unchanged; an unknown name is a ConfigError.
Report run_experiment(const Config& cfg);

}  // namespace hmlab
