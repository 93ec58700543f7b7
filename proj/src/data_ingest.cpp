#include "rted/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rted/error.hpp"
#include "rted/marginals.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rted {

namespace {

// Howard Hinnant's civil-calendar conversions.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(ErrorKind kind, const fs::path& file, std::size_t line, std::size_t column,
                       const std::string& msg) {
  std::ostringstream os;
  os << file.string() << ':' << line;
  if (column > 0) os << ':' << column;
  os << ": " << msg;
  throw Error(kind, os.str());
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::size_t> line_numbers;
  std::string storage;
};

CsvTable read_csv(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Schema, "cannot open " + file.string());
  CsvTable t;
  t.storage.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  std::string_view all(t.storage);
  std::size_t line_no = 0, pos = 0;
  bool have_header = false;
  while (pos <= all.size()) {
    auto end = all.find('\n', pos);
    if (end == std::string_view::npos) end = all.size();
    const std::string_view line = trim(all.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == all.size()) break;
      continue;
    }
    auto fields = split_csv(line);
    if (!have_header) {
      for (auto f : fields) t.header.emplace_back(f);
      have_header = true;
    } else {
      if (fields.size() != t.header.size())
        fail(ErrorKind::Format, file, line_no, 0,
             "expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
      t.rows.push_back(std::move(fields));
      t.line_numbers.push_back(line_no);
    }
    if (end == all.size()) break;
  }
  if (!have_header) throw Error(ErrorKind::Schema, file.string() + ": missing header row");
  return t;
}

std::size_t column_index(const CsvTable& t, const std::string& name, const fs::path& file) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw Error(ErrorKind::Schema, file.string() + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - t.header.begin());
}

bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(v);
}

struct PlantSource {
  PlantId id;
  fs::path file;
  ColumnSchema columns;
};

}  // namespace

const char* to_string(PlantKind kind) { return kind == PlantKind::Wind ? "wind" : "solar"; }

PlantKind plant_kind_from_string(const std::string& s) {
  if (s == "wind" || s == "Wind") return PlantKind::Wind;
  if (s == "solar" || s == "Solar" || s == "pv") return PlantKind::Solar;
  throw Error(ErrorKind::Schema, "unknown plant kind '" + s + "'");
}

std::string format_timestamp(std::int64_t minutes) {
  const std::int64_t days = minutes >= 0 ? minutes / 1440 : -((-minutes + 1439) / 1440);
  const std::int64_t rem = minutes - days * 1440;
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld", static_cast<long long>(y), m, d,
                static_cast<long long>(rem / 60), static_cast<long long>(rem % 60));
  return buf;
}

std::int64_t parse_timestamp(const std::string& text) {
  // Integer minutes, or ISO "YYYY-MM-DD[T ]HH:MM[:SS]".
  std::int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return v;
  int y, mo, d, h, mi, s = 0;
  char sep;
  const int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (n < 6 || (sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 ||
      mi < 0 || mi > 59)
    throw Error(ErrorKind::Format, "unparseable timestamp '" + text + "'");
  if (s != 0) throw Error(ErrorKind::Format, "timestamp '" + text + "' is not on a whole minute");
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 1440 + h * 60 + mi;
}

double HistoricalDataset::total_capacity_mw() const {
  double c = 0.0;
  for (const auto& p : plants) c += p.capacity_mw;
  return c;
}

void HistoricalDataset::validate() const {
  const auto n = static_cast<Eigen::Index>(timestamps.size());
  if (forecast.rows() != actual.rows() || forecast.cols() != actual.cols())
    throw Error(ErrorKind::Data, "forecast and actual matrices differ in shape");
  if (actual.rows() != n) throw Error(ErrorKind::Data, "timestamp count does not match sample count");
  if (actual.cols() != static_cast<Eigen::Index>(plants.size()))
    throw Error(ErrorKind::Data, "plant count does not match matrix columns");
  std::set<int> seen;
  for (const auto& p : plants) {
    if (!(p.capacity_mw > 0.0)) throw Error(ErrorKind::Data, "plant " + p.name + " has non-positive capacity");
    if (!seen.insert(p.index).second) throw Error(ErrorKind::Data, "duplicate plant index");
  }
  if (step_minutes <= 0) throw Error(ErrorKind::Format, "time step must be positive");
  for (Eigen::Index i = 1; i < n; ++i)
    if (timestamps[i] - timestamps[i - 1] != step_minutes)
      throw Error(ErrorKind::Format, "timestamps not at a constant " + std::to_string(step_minutes) +
                                         "-minute step at sample " + std::to_string(i));
  auto in_unit = [](const Eigen::MatrixXd& m) { return m.allFinite() && (m.array() >= 0.0).all() && (m.array() <= 1.0).all(); };
  if (!in_unit(forecast) || !in_unit(actual)) throw Error(ErrorKind::Data, "values outside [0,1] p.u.");
}

HistoricalDataset load_historical(const fs::path& path, const ColumnSchema& schema) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::Schema, "cannot open manifest " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.parent_path();

  std::vector<PlantSource> sources;
  bool per_mw = false;
  int step = 0;
  try {
    per_mw = manifest.value("units", std::string("pu")) == "mw";
    step = manifest.value("step_minutes", 0);
    int idx = 0;
    for (const auto& p : manifest.at("plants")) {
      PlantSource src;
      src.id.index = p.value("index", idx);
      src.id.name = p.value("name", "plant" + std::to_string(idx));
      src.id.kind = plant_kind_from_string(p.value("kind", std::string("wind")));
      src.id.capacity_mw = p.at("capacity_mw").get<double>();
      src.id.bus = p.value("bus", 0);
      src.file = base / p.at("file").get<std::string>();
      src.columns = schema;
      if (p.contains("columns")) {
        const auto& c = p.at("columns");
        src.columns.timestamp = c.value("timestamp", src.columns.timestamp);
        src.columns.forecast = c.value("forecast", src.columns.forecast);
        src.columns.actual = c.value("actual", src.columns.actual);
      }
      sources.push_back(std::move(src));
      ++idx;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, manifest_path.string() + ": " + e.what());
  }
  if (sources.empty()) throw Error(ErrorKind::Schema, manifest_path.string() + ": no plants listed");

  HistoricalDataset out;
  std::map<fs::path, CsvTable> tables;
  for (std::size_t j = 0; j < sources.size(); ++j) {
    const auto& src = sources[j];
    auto it = tables.find(src.file);
    if (it == tables.end()) it = tables.emplace(src.file, read_csv(src.file)).first;
    const CsvTable& t = it->second;
    const std::size_t ct = column_index(t, src.columns.timestamp, src.file);
    const std::size_t cf = column_index(t, src.columns.forecast, src.file);
    const std::size_t ca = column_index(t, src.columns.actual, src.file);
    const auto n = static_cast<Eigen::Index>(t.rows.size());

    if (j == 0) {
      out.forecast.resize(n, static_cast<Eigen::Index>(sources.size()));
      out.actual.resize(n, static_cast<Eigen::Index>(sources.size()));
      out.timestamps.resize(static_cast<std::size_t>(n));
    } else if (n != out.actual.rows()) {
      throw Error(ErrorKind::Format, src.file.string() + ": " + std::to_string(n) + " rows, expected " +
                                         std::to_string(out.actual.rows()) + " (plants must be synchronized)");
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = t.rows[static_cast<std::size_t>(i)];
      const std::size_t line = t.line_numbers[static_cast<std::size_t>(i)];
      std::int64_t ts;
      try {
        ts = parse_timestamp(std::string(row[ct]));
      } catch (const Error& e) {
        fail(ErrorKind::Format, src.file, line, ct + 1, e.what());
      }
      if (j == 0) {
        if (i > 0) {
          const std::int64_t prev = out.timestamps[static_cast<std::size_t>(i - 1)];
          if (ts <= prev) fail(ErrorKind::Format, src.file, line, ct + 1, "non-monotone timestamp");
          if (step == 0) step = static_cast<int>(ts - prev);
          if (ts - prev != step)
            fail(ErrorKind::Format, src.file, line, ct + 1,
                 "timestamp step " + std::to_string(ts - prev) + " min differs from " + std::to_string(step));
        }
        out.timestamps[static_cast<std::size_t>(i)] = ts;
      } else if (ts != out.timestamps[static_cast<std::size_t>(i)]) {
        fail(ErrorKind::Format, src.file, line, ct + 1, "timestamp not synchronized with other plants");
      }
      const double scale = per_mw ? 1.0 / src.id.capacity_mw : 1.0;
      for (auto [col, target] : {std::pair{cf, &out.forecast}, std::pair{ca, &out.actual}}) {
        double v;
        if (!parse_double(row[col], v))
          fail(ErrorKind::Data, src.file, line, col + 1,
               "non-numeric or NaN value in column '" + t.header[col] + "'");
        v *= scale;
        if (v < 0.0 || v > 1.0)
          fail(ErrorKind::Data, src.file, line, col + 1,
               "value " + std::to_string(v) + " p.u. outside [0,1] in column '" + t.header[col] + "'");
        (*target)(i, static_cast<Eigen::Index>(j)) = v;
      }
    }
    out.plants.push_back(src.id);
  }
  out.step_minutes = step == 0 ? 5 : step;
  out.validate();
  return out;
}

void write_canonical(const HistoricalDataset& data, const fs::path& dir) {
  data.validate();
  fs::create_directories(dir);
  json plants = json::array();
  for (std::size_t j = 0; j < data.plants.size(); ++j) {
    const auto& p = data.plants[j];
    const std::string file = p.name + ".csv";
    plants.push_back({{"index", p.index},
                      {"name", p.name},
                      {"kind", to_string(p.kind)},
                      {"capacity_mw", p.capacity_mw},
                      {"bus", p.bus},
                      {"file", file}});
    std::ofstream out(dir / file, std::ios::binary);
    out << "timestamp,forecast_pu,actual_pu\n";
    const auto c = static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < data.samples(); ++i)
      out << format_timestamp(data.timestamps[static_cast<std::size_t>(i)]) << ','
          << exact_decimal(data.forecast(i, c)) << ',' << exact_decimal(data.actual(i, c)) << '\n';
    if (!out) throw Error(ErrorKind::Resource, "failed writing " + (dir / file).string());
  }
  json manifest = {{"step_minutes", data.step_minutes}, {"units", "pu"}, {"plants", plants}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

PersistencePair persistence_forecast(const Eigen::MatrixXd& actual, int horizon_steps) {
  if (horizon_steps < 1) throw Error(ErrorKind::Domain, "persistence horizon must be at least one step");
  if (actual.size() == 0) throw Error(ErrorKind::Domain, "persistence forecast of an empty series");
  if (horizon_steps >= actual.rows())
    throw Error(ErrorKind::EmptyResult, "persistence horizon " + std::to_string(horizon_steps) +
                                            " leaves no samples out of " + std::to_string(actual.rows()));
  const Eigen::Index n = actual.rows() - horizon_steps;
  return {actual.topRows(n), actual.bottomRows(n)};
}

HistoricalDataset with_persistence_forecast(const HistoricalDataset& data, int horizon_steps) {
  auto pair = persistence_forecast(data.actual, horizon_steps);
  HistoricalDataset out;
  out.plants = data.plants;
  out.step_minutes = data.step_minutes;
  out.timestamps.assign(data.timestamps.begin() + horizon_steps, data.timestamps.end());
  out.forecast = std::move(pair.forecast);
  out.actual = std::move(pair.actual);
  return out;
}

}  // namespace rted
