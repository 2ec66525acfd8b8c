#include "dastank/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <set>
#include <sstream>

#include "dastank/errors.hpp"

namespace dastank::io {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'D', 'A', 'S', 'R'};
constexpr char kMetaMagic[4] = {'M', 'E', 'T', 'A'};

// ---------------------------------------------------------------- binary

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    const auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(to_little(v));
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }
  void put_raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* field) {
    if (remaining() < sizeof(T)) {
      throw FormatError(std::string("truncated file while reading '") + field + "'",
                        static_cast<std::int64_t>(pos_));
    }
    std::array<std::uint8_t, sizeof(T)> b;
    std::memcpy(b.data(), bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(std::bit_cast<T>(b));
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }
  const std::uint8_t* here() const { return bytes_.data() + pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

json record_metadata(const sim::DasRecord& rec) {
  return {{"gauge_length_m", rec.gauge_length_m},
          {"pulse_width_m", rec.pulse_width_m},
          {"start_time_s", rec.start_time_s}};
}

void apply_metadata(sim::DasRecord& rec, const json& meta) {
  rec.gauge_length_m = meta.value("gauge_length_m", rec.gauge_length_m);
  rec.pulse_width_m = meta.value("pulse_width_m", rec.pulse_width_m);
  rec.start_time_s = meta.value("start_time_s", rec.start_time_s);
}

// ---------------------------------------------------------------- text

double parse_double(std::string_view s, const std::string& what, std::int64_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("cannot parse " + what + " from '" + std::string(s) + "'", line);
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    parts.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return parts;
}

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------- config

// Reads keys from one JSON object and remembers which were consumed so that
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) {
      obj_ = json::object();
    } else if (!doc.is_object()) {
      throw ConfigError(path_, "expected an object");
    } else {
      obj_ = doc;
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
    return d;
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(field(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(field(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  template <std::size_t N>
  std::array<double, N> fixed(const std::string& key, const std::array<double, N>& fallback) {
    if (!has(key)) return fallback;
    const auto v = numbers(key, {});
    if (v.size() != N) throw ConfigError(field(key), "expected " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }

  ObjectReader child(const std::string& key) {
    if (!has(key)) return ObjectReader(json(), field(key));
    return ObjectReader(raw(key), field(key));
  }

  void finish(bool strict) const {
    if (!strict) return;
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown key");
    }
  }

 private:
  json obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

// ---------------------------------------------------------------- records

RecordFormat record_format_from_string(const std::string& s) {
  if (s == "bin" || s == "binary") return RecordFormat::kBinary;
  if (s == "csv") return RecordFormat::kCsv;
  throw InvalidArgument("unknown record format '" + s + "' (expected csv or bin)");
}

RecordFormat record_format_for_path(const fs::path& path) {
  return path.extension() == ".csv" ? RecordFormat::kCsv : RecordFormat::kBinary;
}

std::vector<std::uint8_t> encode_binary_record(const sim::DasRecord& rec) {
  rec.validate();
  if (rec.n_channels() > UINT32_MAX || rec.n_samples > UINT32_MAX) {
    throw InvalidArgument("record too large for the binary encoding");
  }
  ByteWriter w;
  w.reserve(28 + 8 * (rec.n_channels() + rec.data.size()) + 128);
  w.put_raw(kMagic, 4);
  w.put<std::uint32_t>(kBinaryVersion);
  w.put<double>(rec.sample_rate_hz);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.n_channels()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.n_samples));
  for (double p : rec.channel_positions_m) w.put<double>(p);
  if constexpr (std::endian::native == std::endian::little) {
    w.put_raw(rec.data.data(), rec.data.size() * sizeof(double));
  } else {
    for (double v : rec.data) w.put<double>(v);
  }
  const std::string meta = record_metadata(rec).dump();
  w.put_raw(kMetaMagic, 4);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  w.put_raw(meta.data(), meta.size());
  return w.take();
}

sim::DasRecord decode_binary_record(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("missing DASR magic bytes", 0);
  }
  r.skip(4);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kBinaryVersion) {
    throw FormatError("unsupported binary record version " + std::to_string(version), 4);
  }
  sim::DasRecord rec;
  rec.sample_rate_hz = r.get<double>("fs");
  if (!(rec.sample_rate_hz > 0.0) || !std::isfinite(rec.sample_rate_hz)) {
    throw FormatError("header field 'fs' must be finite and > 0", 8);
  }
  const auto n_ch = r.get<std::uint32_t>("n_ch");
  const auto n_samp = r.get<std::uint32_t>("n_samp");
  if (n_ch == 0) throw FormatError("header field 'n_ch' is zero", 16);

  if (r.remaining() < std::size_t{8} * n_ch) {
    throw FormatError("truncated file in channel positions (header claims " + std::to_string(n_ch) +
                          " channels)",
                      static_cast<std::int64_t>(r.pos()));
  }
  rec.channel_positions_m.resize(n_ch);
  for (std::uint32_t i = 0; i < n_ch; ++i) {
    const std::size_t at = r.pos();
    rec.channel_positions_m[i] = r.get<double>("positions");
    if (!std::isfinite(rec.channel_positions_m[i])) {
      throw FormatError("non-finite channel position " + std::to_string(i), static_cast<std::int64_t>(at));
    }
    if (i > 0 && !(rec.channel_positions_m[i] > rec.channel_positions_m[i - 1])) {
      throw FormatError("channel positions not strictly increasing at channel " + std::to_string(i),
                        static_cast<std::int64_t>(at));
    }
  }

  const std::size_t n_values = std::size_t{n_ch} * n_samp;
  if (r.remaining() < n_values * 8) {
    const std::size_t rows = r.remaining() / (std::size_t{8} * std::max<std::uint32_t>(n_samp, 1));
    throw FormatError("shape mismatch: header claims " + std::to_string(n_ch) + " channels x " +
                          std::to_string(n_samp) + " samples but the data section holds " +
                          std::to_string(r.remaining()) + " bytes (" + std::to_string(rows) +
                          " complete channel rows); file truncated",
                      static_cast<std::int64_t>(bytes.size()));
  }
  rec.n_samples = n_samp;
  rec.data.resize(n_values);
  const std::size_t data_start = r.pos();
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(rec.data.data(), r.here(), n_values * 8);
    r.skip(n_values * 8);
  } else {
    for (auto& v : rec.data) v = r.get<double>("data");
  }
  for (std::size_t i = 0; i < n_values; ++i) {
    if (!std::isfinite(rec.data[i])) {
      throw FormatError("non-finite sample (channel " + std::to_string(i / std::max<std::uint32_t>(n_samp, 1)) +
                            ", sample " + std::to_string(i % std::max<std::uint32_t>(n_samp, 1)) + ")",
                        static_cast<std::int64_t>(data_start + 8 * i));
    }
  }

  if (r.remaining() > 0) {
    const std::size_t at = r.pos();
    if (r.remaining() < 8 || std::memcmp(r.here(), kMetaMagic, 4) != 0) {
      throw FormatError("unexpected trailing bytes after sample data", static_cast<std::int64_t>(at));
    }
    r.skip(4);
    const auto len = r.get<std::uint32_t>("meta length");
    if (r.remaining() != len) {
      throw FormatError("metadata trailer length " + std::to_string(len) + " does not match the " +
                            std::to_string(r.remaining()) + " bytes remaining",
                        static_cast<std::int64_t>(r.pos()));
    }
    try {
      apply_metadata(rec, json::parse(r.here(), r.here() + len));
    } catch (const json::exception& e) {
      throw FormatError(std::string("malformed metadata trailer: ") + e.what(), static_cast<std::int64_t>(r.pos()));
    }
  }
  return rec;
}

std::string encode_csv_record(const sim::DasRecord& rec) {
  rec.validate();
  std::string out;
  out.reserve(rec.data.size() * 22 + 256);
  const double x0 = rec.channel_positions_m.front();
  const double dx = rec.n_channels() > 1 ? rec.channel_positions_m[1] - rec.channel_positions_m[0] : 0.0;
  out += "# das-record v1\n";
  out += "# fs_hz=" + format_double(rec.sample_rate_hz) + "\n";
  out += "# x0_m=" + format_double(x0) + "\n";
  out += "# dx_m=" + format_double(dx) + "\n";
  out += "# n_channels=" + std::to_string(rec.n_channels()) + "\n";
  out += "# positions_m=";
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    if (c) out += ',';
    out += format_double(rec.channel_positions_m[c]);
  }
  out += "\n";
  out += "# gauge_length_m=" + format_double(rec.gauge_length_m) + "\n";
  out += "# pulse_width_m=" + format_double(rec.pulse_width_m) + "\n";
  out += "# start_time_s=" + format_double(rec.start_time_s) + "\n";
  char buf[64];
  for (std::size_t i = 0; i < rec.n_samples; ++i) {
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      if (c) out += ',';
      const auto res = std::to_chars(buf, buf + sizeof(buf), rec.data[c * rec.n_samples + i]);
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

sim::DasRecord decode_csv_record(const std::string& text) {
  std::string_view rest(text);
  std::int64_t line_no = 0;
  bool saw_magic = false;
  std::optional<double> fs_hz, x0, dx;
  std::optional<std::size_t> n_channels;
  std::vector<double> positions;
  sim::DasRecord rec;
  std::vector<std::vector<double>> columns;

  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    if (line.front() == '#') {
      std::string_view body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body == "das-record v1") {
        saw_magic = true;
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(body.substr(0, eq));
      const std::string_view value = body.substr(eq + 1);
      if (key == "fs_hz") {
        fs_hz = parse_double(value, "fs_hz", line_no);
      } else if (key == "x0_m") {
        x0 = parse_double(value, "x0_m", line_no);
      } else if (key == "dx_m") {
        dx = parse_double(value, "dx_m", line_no);
      } else if (key == "n_channels") {
        const double n = parse_double(value, "n_channels", line_no);
        if (!(n >= 1.0) || n != std::floor(n)) throw FormatError("n_channels must be a positive integer", line_no);
        n_channels = static_cast<std::size_t>(n);
      } else if (key == "positions_m") {
        for (auto part : split(value, ',')) positions.push_back(parse_double(part, "positions_m", line_no));
      } else if (key == "gauge_length_m") {
        rec.gauge_length_m = parse_double(value, key, line_no);
      } else if (key == "pulse_width_m") {
        rec.pulse_width_m = parse_double(value, key, line_no);
      } else if (key == "start_time_s") {
        rec.start_time_s = parse_double(value, key, line_no);
      }
      continue;
    }

    if (!saw_magic) throw FormatError("missing '# das-record v1' header line", line_no);
    if (!fs_hz) throw FormatError("missing '# fs_hz=' header line", line_no);
    if (!n_channels) throw FormatError("missing '# n_channels=' header line", line_no);
    if (columns.empty()) columns.resize(*n_channels);

    const auto cells = split(line, ',');
    if (cells.size() != *n_channels) {
      throw FormatError("shape mismatch: header claims " + std::to_string(*n_channels) + " channels but row has " +
                            std::to_string(cells.size()) + " columns",
                        line_no);
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_double(cells[c], "sample", line_no);
      if (!std::isfinite(v)) throw FormatError("non-finite sample in column " + std::to_string(c), line_no);
      columns[c].push_back(v);
    }
  }

  if (!saw_magic) throw FormatError("missing '# das-record v1' header line", line_no);
  if (!fs_hz || !(*fs_hz > 0.0)) throw FormatError("missing or invalid fs_hz", line_no);
  if (!n_channels) throw FormatError("missing n_channels", line_no);

  if (!positions.empty()) {
    if (positions.size() != *n_channels) {
      throw FormatError("shape mismatch: positions_m lists " + std::to_string(positions.size()) +
                        " channels, header claims " + std::to_string(*n_channels));
    }
  } else {
    if (!x0 || !dx) throw FormatError("missing x0_m/dx_m header lines");
    for (std::size_t c = 0; c < *n_channels; ++c) positions.push_back(*x0 + static_cast<double>(c) * *dx);
  }
  for (std::size_t c = 1; c < positions.size(); ++c) {
    if (!(positions[c] > positions[c - 1])) throw FormatError("channel positions not strictly increasing");
  }

  rec.sample_rate_hz = *fs_hz;
  rec.channel_positions_m = std::move(positions);
  rec.n_samples = columns.empty() ? 0 : columns.front().size();
  rec.data.reserve(rec.n_channels() * rec.n_samples);
  if (columns.empty()) columns.resize(rec.n_channels());
  for (const auto& col : columns) rec.data.insert(rec.data.end(), col.begin(), col.end());
  return rec;
}

void write_das_record(const sim::DasRecord& rec, const fs::path& path, RecordFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  if (format == RecordFormat::kBinary) {
    const auto bytes = encode_binary_record(rec);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  } else {
    const auto text = encode_csv_record(rec);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
  }
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_das_record(const sim::DasRecord& rec, const fs::path& path) {
  write_das_record(rec, path, record_format_for_path(path));
}

sim::DasRecord read_das_record(const fs::path& path) {
  const std::string raw = read_file_bytes(path);
  if (raw.size() >= 4 && std::memcmp(raw.data(), kMagic, 4) == 0) {
    return decode_binary_record(std::vector<std::uint8_t>(raw.begin(), raw.end()));
  }
  if (!raw.empty() && raw.front() == '#') return decode_csv_record(raw);
  throw FormatError("'" + path.string() + "' is neither a binary (DASR) nor a CSV das-record", 0);
}

// ---------------------------------------------------------------- config

RunConfig parse_run_config(const json& doc, bool strict) {
  RunConfig cfg;
  ObjectReader root(doc, "");

  {
    auto env = root.child("environment");
    cfg.environment.depth_m = env.number("depth_m", cfg.environment.depth_m);
    cfg.environment.gravity_mps2 = env.number("gravity_mps2", cfg.environment.gravity_mps2);
    require(cfg.environment.depth_m > 0.0, env.field("depth_m"), "must be > 0");
    require(cfg.environment.gravity_mps2 > 0.0, env.field("gravity_mps2"), "must be > 0");
    env.finish(strict);
  }

  {
    auto w = root.child("wave");
    const double height = w.number("height_m", cfg.wave.height_m);
    const double period = w.number("period_s", cfg.wave.period_s);
    const double doa = w.number("doa_deg", cfg.wave.doa_deg);
    const double phase = w.number("phase_rad", cfg.wave.phase_rad);
    require(height > 0.0, w.field("height_m"), "must be > 0");
    require(period > 0.0, w.field("period_s"), "must be > 0");
    require(doa > -180.0 && doa <= 180.0, w.field("doa_deg"), "must lie in (-180, 180]");
    w.finish(strict);
    cfg.wave = wavefield::WaveSpec::make(height, period, doa, cfg.environment, phase);
  }

  {
    auto g = root.child("geometry");
    const bool explicit_positions = g.has("positions_m");
    const bool parametric = g.has("start_m") || g.has("spacing_m") || g.has("count");
    require(!(explicit_positions && parametric), g.field("positions_m"),
            "give either positions_m or start_m/spacing_m/count, not both");
    if (explicit_positions) {
      cfg.geometry.channel_positions_m = g.numbers("positions_m", {});
    } else {
      const double start = g.number("start_m", 161.65);
      const double spacing = g.number("spacing_m", 0.80);
      const auto count = g.unsigned_int("count", 18);
      require(spacing > 0.0, g.field("spacing_m"), "must be > 0 (channel positions must be strictly increasing)");
      require(count >= 2, g.field("count"), "must be >= 2");
      cfg.geometry = sim::CableGeometry::uniform(start, spacing, count);
    }
    cfg.geometry.axis_angle_deg = g.number("axis_angle_deg", 0.0);
    cfg.geometry.origin_xy_m = g.fixed<2>("origin_xy_m", {0.0, 0.0});
    const auto& pos = cfg.geometry.channel_positions_m;
    require(pos.size() >= 2, g.field("positions_m"), "need at least 2 channels");
    for (std::size_t i = 1; i < pos.size(); ++i) {
      require(pos[i] > pos[i - 1], g.field("positions_m"), "positions must be strictly increasing");
    }
    g.finish(strict);
  }

  {
    auto s = root.child("sim");
    auto& c = cfg.sim;
    c.sample_rate_hz = s.number("sample_rate_hz", c.sample_rate_hz);
    c.duration_s = s.number("duration_s", c.duration_s);
    c.amplitude_scale = s.number("amplitude_scale", c.amplitude_scale);
    c.poisson_ratio = s.number("poisson_ratio", c.poisson_ratio);
    c.harmonic_gains = s.numbers("harmonic_gains", c.harmonic_gains);
    c.noise_rms = s.number("noise_rms", c.noise_rms);
    c.seed = s.unsigned_int("seed", c.seed);
    c.gauge_length_m = s.number("gauge_length_m", c.gauge_length_m);
    c.pulse_width_m = s.number("pulse_width_m", c.pulse_width_m);
    try {
      c.coupling_mode = sim::coupling_mode_from_string(s.string("coupling_mode", to_string(c.coupling_mode)));
    } catch (const InvalidArgument& e) {
      throw ConfigError(s.field("coupling_mode"), e.what());
    }
    require(c.sample_rate_hz > 0.0, s.field("sample_rate_hz"), "must be > 0");
    require(c.duration_s > 0.0, s.field("duration_s"), "must be > 0");
    require(c.sample_count() >= 2, s.field("duration_s"), "record must hold at least 2 samples");
    require(c.amplitude_scale > 0.0, s.field("amplitude_scale"), "must be > 0");
    require(c.poisson_ratio >= 0.0 && c.poisson_ratio < 0.5, s.field("poisson_ratio"), "must lie in [0, 0.5)");
    require(!c.harmonic_gains.empty() && c.harmonic_gains[0] == 1.0, s.field("harmonic_gains"),
            "first entry is the fundamental and must equal 1");
    for (double gval : c.harmonic_gains) require(gval >= 0.0, s.field("harmonic_gains"), "gains must be >= 0");
    require(c.noise_rms >= 0.0, s.field("noise_rms"), "must be >= 0");
    require(c.gauge_length_m > 0.0, s.field("gauge_length_m"), "must be > 0");
    require(c.pulse_width_m > 0.0, s.field("pulse_width_m"), "must be > 0");
    const double top = static_cast<double>(c.harmonic_gains.size()) / cfg.wave.period_s;
    require(top < 0.5 * c.sample_rate_hz, s.field("sample_rate_hz"),
            "must exceed twice the highest synthesized harmonic (" + format_double(top) + " Hz)");
    s.finish(strict);
  }

  {
    auto a = root.child("analysis");
    auto& c = cfg.analysis;
    c.channel_range_m = a.fixed<2>("channel_range_m", c.channel_range_m);
    c.channel_x_m = a.number("channel_x_m", c.channel_x_m);
    c.band_hz = a.fixed<2>("band_hz", c.band_hz);
    c.welch_segment_s = a.number("welch_segment_s", c.welch_segment_s);
    c.welch_overlap = a.number("welch_overlap", c.welch_overlap);
    c.rms_window_s = a.number("rms_window_s", c.rms_window_s);
    c.rms_lowpass_hz = a.number("rms_lowpass_hz", c.rms_lowpass_hz);
    c.k_grid_points = a.unsigned_int("k_grid_points", c.k_grid_points);
    c.theta_step_deg = a.number("theta_step_deg", c.theta_step_deg);
    c.delta_deg = a.number("delta_deg", c.delta_deg);
    c.min_peak_to_median = a.number("min_peak_to_median", c.min_peak_to_median);
    require(c.channel_range_m[0] <= c.channel_range_m[1], a.field("channel_range_m"), "must be [lo, hi] with lo <= hi");
    require(c.band_hz[0] > 0.0 && c.band_hz[1] > c.band_hz[0], a.field("band_hz"), "must satisfy 0 < lo < hi");
    require(c.welch_segment_s > 0.0, a.field("welch_segment_s"), "must be > 0");
    require(c.welch_overlap >= 0.0 && c.welch_overlap < 1.0, a.field("welch_overlap"), "must lie in [0, 1)");
    require(c.rms_window_s > 0.0, a.field("rms_window_s"), "must be > 0");
    require(c.rms_lowpass_hz >= 0.0, a.field("rms_lowpass_hz"), "must be >= 0 (0 disables)");
    require(c.k_grid_points >= 3, a.field("k_grid_points"), "must be >= 3");
    require(c.theta_step_deg > 0.0 && c.theta_step_deg < 90.0, a.field("theta_step_deg"), "must lie in (0, 90)");
    require(std::abs(c.delta_deg) > 0.0 && std::abs(c.delta_deg) < 90.0, a.field("delta_deg"),
            "must satisfy 0 < |delta| < 90");
    a.finish(strict);
  }

  root.finish(strict);
  return cfg;
}

RunConfig load_run_config(const fs::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, strict);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["wave"] = {{"height_m", cfg.wave.height_m},
               {"period_s", cfg.wave.period_s},
               {"doa_deg", cfg.wave.doa_deg},
               {"phase_rad", cfg.wave.phase_rad}};
  j["environment"] = {{"depth_m", cfg.environment.depth_m}, {"gravity_mps2", cfg.environment.gravity_mps2}};
  j["geometry"] = {{"positions_m", cfg.geometry.channel_positions_m},
                   {"axis_angle_deg", cfg.geometry.axis_angle_deg},
                   {"origin_xy_m", cfg.geometry.origin_xy_m}};
  const auto& s = cfg.sim;
  j["sim"] = {{"sample_rate_hz", s.sample_rate_hz}, {"duration_s", s.duration_s},
              {"amplitude_scale", s.amplitude_scale}, {"poisson_ratio", s.poisson_ratio},
              {"harmonic_gains", s.harmonic_gains},   {"noise_rms", s.noise_rms},
              {"seed", s.seed},                       {"coupling_mode", to_string(s.coupling_mode)},
              {"gauge_length_m", s.gauge_length_m},   {"pulse_width_m", s.pulse_width_m}};
  const auto& a = cfg.analysis;
  j["analysis"] = {{"channel_range_m", a.channel_range_m}, {"channel_x_m", a.channel_x_m},
                   {"band_hz", a.band_hz},                 {"welch_segment_s", a.welch_segment_s},
                   {"welch_overlap", a.welch_overlap},     {"rms_window_s", a.rms_window_s},
                   {"rms_lowpass_hz", a.rms_lowpass_hz},   {"k_grid_points", a.k_grid_points},
                   {"theta_step_deg", a.theta_step_deg},   {"delta_deg", a.delta_deg},
                   {"min_peak_to_median", a.min_peak_to_median}};
  return j;
}

// ---------------------------------------------------------------- results

json to_json(const est::HeightCalibration& cal) {
  json points = json::array();
  for (const auto& p : cal.fit_points) {
    points.push_back({{"height_m", p.height_m}, {"median_rms", p.median_rms}, {"iqr", p.iqr}, {"n_values", p.n_values}});
  }
  return {{"kind", "height-calibration"}, {"slope", cal.slope}, {"rmspe_percent", cal.rmspe_percent}, {"fit_points", points}};
}

est::HeightCalibration calibration_from_json(const json& doc) {
  est::HeightCalibration cal;
  try {
    const json& body = doc.contains("outputs") && doc["outputs"].contains("calibration") ? doc["outputs"]["calibration"] : doc;
    cal.slope = body.at("slope").get<double>();
    cal.rmspe_percent = body.value("rmspe_percent", 0.0);
    for (const auto& p : body.value("fit_points", json::array())) {
      cal.fit_points.push_back({p.at("height_m").get<double>(), p.at("median_rms").get<double>(),
                                p.value("iqr", 0.0), p.value("n_values", std::size_t{0})});
    }
  } catch (const json::exception& e) {
    throw ConfigError("calibration", std::string("malformed calibration document: ") + e.what());
  }
  if (!(cal.slope > 0.0) || !std::isfinite(cal.slope)) throw ConfigError("calibration.slope", "must be > 0");
  return cal;
}

est::HeightCalibration load_calibration(const fs::path& path) {
  try {
    return calibration_from_json(read_json(path));
  } catch (const json::exception& e) {
    throw ConfigError("calibration", "cannot read '" + path.string() + "': " + e.what());
  }
}

json to_json(const est::PeriodEstimate& p) {
  return {{"period_s", p.period_s},
          {"peak_freq_hz", p.peak_freq_hz},
          {"peak_power", p.peak_power},
          {"peak_to_median", p.peak_to_median}};
}

json to_json(const est::DoaEstimate& d) {
  auto cand = [](const est::DoaCandidate& c) {
    json j = {{"doa_c1_deg", c.doa_c1_deg}, {"doa_c2_deg", c.doa_c2_deg}, {"wavelength_m", c.wavelength_m}};
    if (c.beam_power >= 0.0) j["beam_power"] = c.beam_power;
    return j;
  };
  return {{"doa_c1_deg", d.doa_c1_deg},
          {"doa_c2_deg", d.doa_c2_deg},
          {"wavelength_m", d.wavelength_m},
          {"apparent_wavelength_c1_m", d.apparent_wavelength_c1_m},
          {"apparent_wavelength_c2_m", d.apparent_wavelength_c2_m},
          {"delta_deg", d.delta_deg},
          {"ambiguity_flag", d.ambiguity_flag},
          {"mirror_candidate", cand(d.mirror)},
          {"chosen_candidate", cand(d.chosen)}};
}

std::string sha256_file(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

json ResultDocument::to_json() const {
  json in = json::array();
  for (const auto& [p, digest] : inputs) in.push_back({{"path", p}, {"sha256", digest}});
  json doc = {{"tool", "dastank"},
              {"tool_version", kToolVersion},
              {"command", command},
              {"inputs", in},
              {"outputs", outputs},
              {"diagnostics", diagnostics}};
  check_finite(doc);
  return doc;
}

void check_finite(const json& doc, const std::string& where) {
  if (doc.is_number_float()) {
    if (!std::isfinite(doc.get<double>())) throw std::runtime_error("non-finite value at '" + where + "'");
  } else if (doc.is_object()) {
    for (const auto& [k, v] : doc.items()) check_finite(v, where.empty() ? k : where + "." + k);
  } else if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) check_finite(doc[i], where + "[" + std::to_string(i) + "]");
  }
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return json::parse(in);
}

void write_columns_csv(const fs::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw InvalidArgument("CSV header/column count mismatch");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw InvalidArgument("CSV columns differ in length");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_double(columns[c][r]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace dastank::io
