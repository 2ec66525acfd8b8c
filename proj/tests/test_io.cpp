#include <clocale>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "dastank/das_sim.hpp"
#include "dastank/errors.hpp"
#include "dastank/io.hpp"
#include "support.hpp"

using namespace dastank;
using io::json;

namespace {

sim::DasRecord small_record(std::size_t n_ch = 5, std::size_t n_samp = 97) {
  sim::DasRecord r;
  r.sample_rate_hz = 2000.0;
  for (std::size_t c = 0; c < n_ch; ++c) r.channel_positions_m.push_back(161.65 + 0.8 * static_cast<double>(c));
  r.gauge_length_m = 1.6;
  r.pulse_width_m = 2.0;
  r.start_time_s = 12.5;
  r.n_samples = n_samp;
  r.data = testing::white_noise(n_ch * n_samp, 1e-3, 21);
  r.data[3] = 1.0 / 3.0;
  r.data[4] = -0.0;
  r.data[5] = std::numeric_limits<double>::denorm_min();
  return r;
}

void check_same(const sim::DasRecord& a, const sim::DasRecord& b) {
  CHECK(a.sample_rate_hz == b.sample_rate_hz);
  CHECK(a.channel_positions_m == b.channel_positions_m);
  CHECK(a.gauge_length_m == b.gauge_length_m);
  CHECK(a.pulse_width_m == b.pulse_width_m);
  CHECK(a.start_time_s == b.start_time_s);
  CHECK(a.n_samples == b.n_samples);
  REQUIRE(a.data.size() == b.data.size());
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST_CASE("binary layout") {
  const auto rec = small_record(3, 4);
  const auto bytes = io::encode_binary_record(rec);
  REQUIRE(bytes.size() >= 24 + 8 * 3 + 8 * 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DASR");
  CHECK(read_u32(bytes, 4) == 1);
  double fs;
  std::memcpy(&fs, bytes.data() + 8, 8);
  CHECK(fs == 2000.0);
  CHECK(read_u32(bytes, 16) == 3);
  CHECK(read_u32(bytes, 20) == 4);
  double p0, d0, d5;
  std::memcpy(&p0, bytes.data() + 24, 8);
  std::memcpy(&d0, bytes.data() + 48, 8);
  std::memcpy(&d5, bytes.data() + 48 + 5 * 8, 8);  // channel 1, sample 1
  CHECK(p0 == rec.channel_positions_m[0]);
  CHECK(d0 == rec.data[0]);
  CHECK(d5 == rec.channel(1)[1]);
}

TEST_CASE("binary round trip is bit-identical") {
  const auto rec = small_record();
  check_same(io::decode_binary_record(io::encode_binary_record(rec)), rec);

  testing::TempDir dir("io");
  io::write_das_record(rec, dir / "r.bin");
  check_same(io::read_das_record(dir / "r.bin"), rec);
}

TEST_CASE("full-size record round trip") {
  const wavefield::TankEnvironment env;
  sim::SimConfig cfg;
  cfg.seed = 42;
  const auto rec = sim::synthesize_das(wavefield::WaveSpec::make(0.3, 2.5, -20.0, env),
                                       sim::CableGeometry::uniform(161.25, 0.8, 19), env, cfg);
  REQUIRE(rec.n_channels() == 19);
  REQUIRE(rec.n_samples == 240000);
  testing::TempDir dir("io");
  io::write_das_record(rec, dir / "big.bin");
  check_same(io::read_das_record(dir / "big.bin"), rec);
}

TEST_CASE("csv round trip") {
  const auto rec = small_record();
  const auto text = io::encode_csv_record(rec);
  CHECK(text.rfind("# das-record v1\n", 0) == 0);
  CHECK(text.find("# fs_hz=2000\n") != std::string::npos);
  CHECK(text.find("# n_channels=5\n") != std::string::npos);
  CHECK(text.find("# x0_m=161.65\n") != std::string::npos);
  check_same(io::decode_csv_record(text), rec);

  testing::TempDir dir("io");
  io::write_das_record(rec, dir / "r.csv");
  check_same(io::read_das_record(dir / "r.csv"), rec);
  CHECK(io::record_format_for_path(dir / "r.csv") == io::RecordFormat::kCsv);
  CHECK(io::record_format_for_path(dir / "r.dasr") == io::RecordFormat::kBinary);
}

TEST_CASE("minimal csv with only the required header lines") {
  const std::string text =
      "# das-record v1\n# fs_hz=10\n# x0_m=1.5\n# dx_m=0.5\n# n_channels=2\n"
      "1,2\n3,4\n5,6\n";
  const auto rec = io::decode_csv_record(text);
  CHECK(rec.sample_rate_hz == 10.0);
  CHECK(rec.channel_positions_m == std::vector<double>{1.5, 2.0});
  CHECK(rec.n_samples == 3);
  CHECK(rec.channel(1)[2] == 6.0);
}

TEST_CASE("truncated binary reports a byte offset") {
  const auto full = io::encode_binary_record(small_record());
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, std::size_t{30}, full.size() / 2}) {
    const std::vector<std::uint8_t> part(full.begin(), full.begin() + static_cast<long>(cut));
    try {
      io::decode_binary_record(part);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() >= 0);
      CHECK(e.offset() <= static_cast<std::int64_t>(cut));
    }
  }
}

TEST_CASE("binary header claiming more channels than present") {
  // 19 channels of data, header rewritten to claim 20.
  auto bytes = io::encode_binary_record(small_record(19, 10));
  put_u32(bytes, 16, 20);
  CHECK_THROWS_AS(io::decode_binary_record(bytes), FormatError);

  auto bad_magic = io::encode_binary_record(small_record());
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(io::decode_binary_record(bad_magic), FormatError);

  auto nan = io::encode_binary_record(small_record(2, 3));
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan.data() + 24 + 16, &q, 8);
  CHECK_THROWS_AS(io::decode_binary_record(nan), FormatError);
}

TEST_CASE("csv shape mismatch") {
  const std::string text =
      "# das-record v1\n# fs_hz=10\n# x0_m=0\n# dx_m=1\n# n_channels=20\n"
      "1,2,3\n";
  try {
    io::decode_csv_record(text);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("shape mismatch") != std::string::npos);
    CHECK(e.offset() == 6);
  }
  CHECK_THROWS_AS(io::decode_csv_record("1,2\n3,4\n"), FormatError);
  CHECK_THROWS_AS(io::decode_csv_record("# das-record v1\n# fs_hz=10\n# x0_m=0\n# dx_m=1\n# n_channels=2\n1,nan\n"),
                  FormatError);
}

TEST_CASE("unknown file content") {
  testing::TempDir dir("io");
  std::ofstream(dir / "junk.bin") << "hello";
  CHECK_THROWS_AS(io::read_das_record(dir / "junk.bin"), FormatError);
  CHECK_THROWS_AS(io::read_das_record(dir / "missing.bin"), FormatError);
}

TEST_CASE("reading ignores the C locale") {
  const char* prev = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = prev ? prev : "C";
  const bool switched = std::setlocale(LC_NUMERIC, "de_DE.UTF-8") != nullptr;
  const auto rec = io::decode_csv_record("# das-record v1\n# fs_hz=12.5\n# x0_m=0.25\n# dx_m=0.5\n# n_channels=2\n0.5,1.25\n");
  std::setlocale(LC_NUMERIC, saved.c_str());
  CHECK(rec.sample_rate_hz == 12.5);
  CHECK(rec.channel(1)[0] == 1.25);
  if (!switched) MESSAGE("de_DE locale unavailable; checked under the default locale only");
}

TEST_CASE("empty config gives the defaults") {
  const auto c = io::parse_run_config(json::object());
  CHECK(c.sim.sample_rate_hz == 2000.0);
  CHECK(c.sim.duration_s == 120.0);
  CHECK(c.sim.sample_count() == 240000);
  CHECK(c.environment.depth_m == 4.5);
  CHECK(c.environment.gravity_mps2 == 9.80665);
  CHECK(c.geometry.is_uniform());
  CHECK(c.geometry.channel_positions_m[1] - c.geometry.channel_positions_m[0] == doctest::Approx(0.8));
  CHECK(c.sim.gauge_length_m == 1.6);
  CHECK(c.sim.pulse_width_m == 2.0);
  CHECK(c.wave.height_m == 0.30);
  CHECK(c.wave.period_s == 2.5);
  CHECK(c.analysis.channel_range_m == std::array<double, 2>{161.0, 176.0});
  CHECK(c.analysis.channel_x_m == 168.05);
  CHECK(c.analysis.welch_segment_s == 60.0);
  CHECK(c.analysis.rms_window_s == 10.0);
  CHECK(c.analysis.delta_deg == 15.0);
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const json& doc) {
    try {
      io::parse_run_config(doc);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<no error>");
  };
  CHECK(field_of({{"wave", {{"height_m", -1}}}}) == "wave.height_m");
  CHECK(field_of({{"wave", {{"period_s", 0}}}}) == "wave.period_s");
  CHECK(field_of({{"geometry", {{"spacing_m", 0}}}}) == "geometry.spacing_m");
  CHECK(field_of({{"geometry", {{"positions_m", {1.0, 1.0, 2.0}}}}}) == "geometry.positions_m");
  CHECK(field_of({{"geometry", {{"positions_m", {1.0, 2.0}}, {"count", 2}}}}) == "geometry.positions_m");
  CHECK(field_of({{"sim", {{"sample_rate_hz", 2.0}}}}) == "sim.sample_rate_hz");
  CHECK(field_of({{"sim", {{"harmonic_gains", {0.5}}}}}) == "sim.harmonic_gains");
  CHECK(field_of({{"sim", {{"coupling_mode", "loud"}}}}) == "sim.coupling_mode");
  CHECK(field_of({{"environment", {{"depth_m", "deep"}}}}) == "environment.depth_m");
  CHECK(field_of({{"analysis", {{"delta_deg", 0}}}}) == "analysis.delta_deg");
  CHECK(field_of({{"wave", {{"heigth_m", 0.2}}}}) == "wave.heigth_m");
  CHECK(field_of({{"colour", 1}}) == "colour");

  CHECK_NOTHROW(io::parse_run_config({{"colour", 1}}, false));
}

TEST_CASE("config round trip") {
  const json doc = {{"wave", {{"height_m", 0.15}, {"period_s", 1.25}, {"doa_deg", -5}}},
                    {"geometry", {{"start_m", 100.0}, {"spacing_m", 1.0}, {"count", 8}, {"axis_angle_deg", 12.0}}},
                    {"sim", {{"seed", 99}, {"noise_rms", 0.002}, {"coupling_mode", "pressure-attenuated"}}},
                    {"analysis", {{"channel_range_m", {100.0, 105.0}}}}};
  const auto a = io::parse_run_config(doc);
  const auto b = io::parse_run_config(io::to_json(a));
  CHECK(io::to_json(a) == io::to_json(b));
  CHECK(b.wave.height_m == 0.15);
  CHECK(b.geometry.channel_positions_m.size() == 8);
  CHECK(b.geometry.axis_angle_deg == 12.0);
  CHECK(b.sim.seed == 99);
  CHECK(b.sim.coupling_mode == sim::CouplingMode::kPressureAttenuated);
  CHECK(b.analysis.channel_range_m[1] == 105.0);

  testing::TempDir dir("io");
  io::write_json(doc, dir / "c.json");
  CHECK(io::to_json(io::load_run_config(dir / "c.json")) == io::to_json(a));
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(io::load_run_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("calibration documents") {
  est::HeightCalibration cal;
  cal.slope = 0.51;
  cal.rmspe_percent = 1.2;
  cal.fit_points = {{0.15, 0.08, 0.01, 12}, {0.3, 0.15, 0.01, 12}};
  const auto j = io::to_json(cal);
  const auto back = io::calibration_from_json(j);
  CHECK(back.slope == cal.slope);
  CHECK(back.rmspe_percent == cal.rmspe_percent);
  REQUIRE(back.fit_points.size() == 2);
  CHECK(back.fit_points[1].median_rms == 0.15);

  // Also accepted wrapped in a result document.
  CHECK(io::calibration_from_json({{"outputs", {{"calibration", j}}}}).slope == cal.slope);
  CHECK_THROWS_AS(io::calibration_from_json({{"slope", -1.0}}), ConfigError);
}

TEST_CASE("result documents") {
  testing::TempDir dir("io");
  std::ofstream(dir / "abc.txt") << "abc";
  CHECK(io::sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  io::ResultDocument doc;
  doc.command = "analyze";
  doc.inputs = {{"abc.txt", io::sha256_file(dir / "abc.txt")}};
  doc.outputs["period_s"] = 2.5;
  const auto j = doc.to_json();
  CHECK(j["tool_version"] == io::kToolVersion);
  CHECK(j["inputs"][0]["sha256"] == doc.inputs[0].second);

  doc.outputs["bad"] = std::numeric_limits<double>::infinity();
  CHECK_THROWS(doc.to_json());
}

TEST_CASE("number formatting") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(io::format_double(2.0 / 3.0)) == 2.0 / 3.0);
}
