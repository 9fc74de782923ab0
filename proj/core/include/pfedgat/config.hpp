#pragma once

#include <string>

#include "pfedgat/orchestrator.hpp"

// Flat key = value experiment configuration. '#' starts a comment, blank
// lines are skipped, unknown or duplicate keys are rejected, missing keys
// take the documented defaults. Every error names the key and the line.

namespace pfedgat {

// Parses and validates the file at `path`.
ExperimentConfig load_config(const std::string& path);

// Same, for in-memory text (diagnostics use `name` as the file name).
ExperimentConfig parse_config(const std::string& text, const std::string& name = "<config>");

// Renders a config with every key explicit; parse_config(emit_config(c))
// reproduces c exactly.
std::string emit_config(const ExperimentConfig& cfg);

const char* strategy_name(Strategy s);
const char* partition_mode_name(PartitionMode m);

}  // namespace pfedgat
