#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "spikelab/inference.hpp"
#include "spikelab/montecarlo.hpp"
#include "spikelab/spikes.hpp"

namespace spikelab {

using nlohmann::json;

inline constexpr const char* kSchema = "spikelab/v1";

/// Comma separated, rows are variables (p), columns are observations (n).
/// ParseError on ragged rows, empty input or non-numeric cells.
Eigen::MatrixXd read_matrix_csv(const std::string& path, bool header = false);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& X);

/// One integer label per line or a single comma separated row.
std::vector<int> read_labels_csv(const std::string& path);

/// Model from JSON, either {"preset": name, ...parameters} or an explicit
/// {"p", "fractions", "means", "sigma0", "noise"} description. `n` feeds presets
/// whose means depend on it. SchemaError on anything malformed.
PopulationModel model_from_json(const json& j, int n);
std::vector<std::string> model_presets();

/// {"preset": name, overrides...} or a full study description.
ExperimentConfig config_from_json(const json& j);
ExperimentConfig study_preset(const std::string& name);
std::vector<std::string> study_presets();

json to_json(const StudyResult& r);
StudyResult study_result_from_json(const json& j);
json to_json(const ClusterScore& s);
json to_json(const SpikeReport& r);

/// Reads a whole file; ParseError when it cannot be opened.
std::string read_text(const std::string& path);
json read_json(const std::string& path);

}  // namespace spikelab
