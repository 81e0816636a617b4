#pragma once

#include <string>

#include "csgrl/hetgraph.hpp"
#include "csgrl/trainer.hpp"

namespace csgrl::io {

/// Stable summary of the graph shape a model was trained on; a mismatch at
/// load time means the model cannot be applied to the given graph.
std::string graph_signature(const HeteroGraph& g);

/// Flat binary: magic, version, JSON header (config + graph signature),
/// then named parameter blocks as little-endian 64-bit floats.
void save_model(const std::string& path, const train::CsgrlModel& m,
                const HeteroGraph& g);

/// Missing, malformed, or truncated model file.
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Model file does not fit the graph it is being applied to.
struct IncompatibleModel : ModelError {
  using ModelError::ModelError;
};

/// Throws IncompatibleModel when the stored signature does not match g.
train::CsgrlModel load_model(const std::string& path, const HeteroGraph& g);

}  // namespace csgrl::io
