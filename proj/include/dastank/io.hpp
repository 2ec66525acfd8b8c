#pragma once

// Record files, run configuration and result documents.
//
// Record encodings:
//   binary  "DASR" | u32 version | f64 fs | u32 n_ch | u32 n_samp |
//           f64 positions[n_ch] | f64 data[n_ch * n_samp] (channel-major),
//           all little-endian, optionally followed by a metadata trailer
//           "META" | u32 length | JSON text (gauge/pulse length, start time).
//   csv     "# das-record v1", "# fs_hz=", "# x0_m=", "# dx_m=", "# n_channels="
//           comment lines (plus optional "# key=value" metadata lines), then
//           one row per sample and one column per channel.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dastank/das_sim.hpp"
#include "dastank/estimators.hpp"
#include "dastank/wavefield.hpp"

namespace dastank::io {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.1";
inline constexpr std::uint32_t kBinaryVersion = 1;

enum class RecordFormat { kBinary, kCsv };

RecordFormat record_format_from_string(const std::string& s);
/// ".csv" selects CSV; everything else is binary.
RecordFormat record_format_for_path(const std::filesystem::path& path);

void write_das_record(const sim::DasRecord& rec, const std::filesystem::path& path, RecordFormat format);
void write_das_record(const sim::DasRecord& rec, const std::filesystem::path& path);
/// Detects the encoding from the leading bytes. Throws FormatError.
sim::DasRecord read_das_record(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_binary_record(const sim::DasRecord& rec);
sim::DasRecord decode_binary_record(const std::vector<std::uint8_t>& bytes);
std::string encode_csv_record(const sim::DasRecord& rec);
sim::DasRecord decode_csv_record(const std::string& text);

// ---------------------------------------------------------------- config

struct AnalysisConfig {
  std::array<double, 2> channel_range_m{161.0, 176.0};
  double channel_x_m = 168.05;
  std::array<double, 2> band_hz{0.05, 3.0};
  double welch_segment_s = 60.0;
  double welch_overlap = 0.5;
  double rms_window_s = 10.0;
  double rms_lowpass_hz = 3.0;  // 0 disables the pre-RMS low-pass
  std::size_t k_grid_points = 2048;
  double theta_step_deg = 0.1;
  double delta_deg = 15.0;
  double min_peak_to_median = 10.0;
};

struct RunConfig {
  wavefield::WaveSpec wave = wavefield::WaveSpec::make(0.30, 2.5, -20.0, {});
  wavefield::TankEnvironment environment;
  sim::CableGeometry geometry = sim::CableGeometry::uniform(161.65, 0.80, 18);
  sim::SimConfig sim;
  AnalysisConfig analysis;
};

/// Parses and validates a config object; omitted keys take the defaults above.
/// Unknown keys are rejected when `strict`. Throws ConfigError naming the field.
RunConfig parse_run_config(const json& doc, bool strict = true);
RunConfig load_run_config(const std::filesystem::path& path, bool strict = true);
json to_json(const RunConfig& cfg);

// ---------------------------------------------------------------- results

json to_json(const est::HeightCalibration& cal);
est::HeightCalibration calibration_from_json(const json& doc);
est::HeightCalibration load_calibration(const std::filesystem::path& path);

json to_json(const est::PeriodEstimate& p);
json to_json(const est::DoaEstimate& d);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct ResultDocument {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  json outputs = json::object();
  json diagnostics = json::object();

  json to_json() const;
};

/// Throws std::runtime_error if any number in the document is non-finite.
void check_finite(const json& doc, const std::string& where = "");
void write_json(const json& doc, const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

/// Writes a CSV with a header row; all columns must share a length.
void write_columns_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

/// Shortest round-trip decimal representation, locale independent.
std::string format_double(double v);

}  // namespace dastank::io
