#pragma once

#include <string>

#include "gm/data.hpp"
#include "gm/harness.hpp"
#include "gm/learn.hpp"

namespace gm {

// File and parse failures throw IoError (core.hpp); schema violations throw
// std::invalid_argument (configuration errors).

// Graph-pair JSON: { "g1": {"features": [[...]], "edges": [[i,j],...]},
//                    "g2": {...}, "truth": [perm] }, "truth" optional
// (-1 marks outliers). Field names are the wire contract.
KeypointPairSample read_instance_json(const std::string& path);
void write_instance_json(const KeypointPairSample& s, const std::string& path);
KeypointPairSample instance_from_json_text(const std::string& text);
std::string instance_to_json_text(const KeypointPairSample& s);

// Dataset file: JSON array of instance objects.
std::vector<KeypointPairSample> read_dataset_json(const std::string& path);
void write_dataset_json(const std::vector<KeypointPairSample>& samples,
                        const std::string& path);

// Checkpoint: { "W": [[...]] }.
WeightMatrix read_weights_json(const std::string& path);
void write_weights_json(const WeightMatrix& W, const std::string& path);

// Experiment config mirroring ExperimentConfig field names; unknown fields
// rejected, missing ones defaulted.
ExperimentConfig read_experiment_json(const std::string& path);
ExperimentConfig experiment_from_json_text(const std::string& text);

}  // namespace gm
