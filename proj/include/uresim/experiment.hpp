#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uresim/simulator.hpp"

namespace uresim {

// Names of the settable SimConfig fields, in canonical (CSV) order.
std::vector<std::string> sim_config_field_names();

// Sets one field from its text form; throws std::invalid_argument naming
// the field on an unknown key or unparsable value.
void sim_config_set(SimConfig& config, std::string_view key,
                    std::string_view value);

// Canonical text form of one field.
std::string sim_config_get(const SimConfig& config, std::string_view key);

// Flat JSON object with one entry per field; from_json applies entries on
// top of the given base and rejects unknown keys.
std::string sim_config_to_json(const SimConfig& config);
SimConfig sim_config_from_json(std::string_view json_text,
                               const SimConfig& base = SimConfig{});

// A Cartesian sweep over SimConfig fields, one simulation per cell per seed.
struct ExperimentSpec {
  SimConfig base;
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::vector<std::uint64_t> seeds;  // empty means {base.seed}
  int threads = 1;

  void add_axis(std::string_view field, std::string_view comma_values);
  long long total_rows() const;
};

struct ExperimentResult {
  std::string header;             // CSV header line (no newline)
  std::vector<std::string> rows;  // CSV rows in deterministic cell order
  std::vector<MetricsReport> reports;  // aligned with rows

  std::string csv() const;
};

// Stable, versioned CSV schema: every config field followed by every metric.
std::string experiment_csv_header();
std::string experiment_csv_row(const SimConfig& config,
                               const MetricsReport& report);

// Runs the sweep; rows come back in cell-major, seed-minor order regardless
// of the thread count. Throws on invalid axes or an oversized product.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Writes via a temporary file and renames on success, so a failed run
// leaves nothing behind.
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace uresim
