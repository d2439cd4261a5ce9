#include "atp/io/formats.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace atp {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw std::runtime_error("failed to format a double");
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

[[noreturn]] void csv_error(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double_cell(const std::string& cell, const std::string& path, std::size_t line,
                         const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    csv_error(path, line, "column '" + col + "': '" + cell + "' is not a number");
  return v;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return std::move(buf).str();
}

void write_file_bytes(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << content;
  if (!f.good()) throw std::runtime_error("failed writing '" + path + "'");
}

nlohmann::json parse_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

int CsvTable::require_column(const std::string& name, const std::string& path) const {
  const int i = column(name);
  if (i < 0) throw std::runtime_error(path + ": missing required column '" + name + "'");
  return i;
}

CsvTable read_csv(const std::string& path) {
  const std::string content = read_file_bytes(path);

  CsvTable table;
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  bool was_quoted = false;
  std::size_t line = 1;

  const auto end_field = [&] {
    fields.push_back(std::move(cur));
    cur.clear();
    was_quoted = false;
  };
  const auto end_row = [&] {
    end_field();
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        csv_error(path, line, "expected " + std::to_string(table.header.size()) +
                                  " fields, found " + std::to_string(fields.size()));
      table.rows.push_back(std::move(fields));
    }
    fields.clear();
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
        if (c == '\n') ++line;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!cur.empty() || was_quoted) csv_error(path, line, "stray quote inside a field");
        in_quotes = true;
        was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 >= content.size() || content[i + 1] != '\n')
          csv_error(path, line, "bare carriage return");
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        if (was_quoted) csv_error(path, line, "data after a closing quote");
        cur += c;
    }
  }
  if (in_quotes) csv_error(path, line, "unterminated quoted field");
  if (!cur.empty() || was_quoted || !fields.empty()) end_row();
  if (table.header.empty()) throw std::runtime_error(path + ": empty file, expected a header");
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  const auto append_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += csv_quote(row[i]);
    }
    out += '\n';
  };
  append_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("row width does not match the header");
    append_row(row);
  }
  write_file_bytes(path, out);
}

// ---------------------------------------------------------------------------
// Traces

std::vector<GpsFix> read_traces(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_vehicle = t.require_column("vehicle_id", path);
  const int c_time = t.require_column("timestamp", path);
  const int c_lat = t.require_column("lat", path);
  const int c_lon = t.require_column("lon", path);
  const int c_speed = t.require_column("speed_kmh", path);

  std::vector<GpsFix> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + 2;
    GpsFix fix;
    fix.vehicle_id = row[static_cast<std::size_t>(c_vehicle)];
    if (fix.vehicle_id.empty()) csv_error(path, line, "empty vehicle_id");
    try {
      fix.t = parse_iso8601(row[static_cast<std::size_t>(c_time)]);
    } catch (const std::exception& e) {
      csv_error(path, line, e.what());
    }
    fix.lat = parse_double_cell(row[static_cast<std::size_t>(c_lat)], path, line, "lat");
    fix.lon = parse_double_cell(row[static_cast<std::size_t>(c_lon)], path, line, "lon");
    const std::string& speed = row[static_cast<std::size_t>(c_speed)];
    if (!speed.empty()) fix.speed_kmh = parse_double_cell(speed, path, line, "speed_kmh");
    out.push_back(std::move(fix));
  }
  return out;
}

void write_traces(const std::string& path, const std::vector<GpsFix>& fixes) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(fixes.size());
  for (const auto& f : fixes)
    rows.push_back({f.vehicle_id, format_iso8601(f.t), fmt_double(f.lat), fmt_double(f.lon),
                    f.speed_kmh ? fmt_double(*f.speed_kmh) : std::string()});
  write_csv(path, {"vehicle_id", "timestamp", "lat", "lon", "speed_kmh"}, rows);
}

// ---------------------------------------------------------------------------
// Stops

std::vector<Stop> read_stops(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_id = t.require_column("stop_id", path);
  const int c_name = t.require_column("name", path);
  const int c_lat = t.require_column("lat", path);
  const int c_lon = t.require_column("lon", path);
  const int c_radius = t.require_column("radius_m", path);

  std::vector<Stop> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + 2;
    Stop s;
    s.stop_id = row[static_cast<std::size_t>(c_id)];
    if (s.stop_id.empty()) csv_error(path, line, "empty stop_id");
    s.name = row[static_cast<std::size_t>(c_name)];
    s.lat = parse_double_cell(row[static_cast<std::size_t>(c_lat)], path, line, "lat");
    s.lon = parse_double_cell(row[static_cast<std::size_t>(c_lon)], path, line, "lon");
    s.radius_m =
        parse_double_cell(row[static_cast<std::size_t>(c_radius)], path, line, "radius_m");
    if (s.radius_m <= 0.0) csv_error(path, line, "radius_m must be > 0");
    out.push_back(std::move(s));
  }
  return out;
}

void write_stops(const std::string& path, const std::vector<Stop>& stops) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(stops.size());
  for (const auto& s : stops)
    rows.push_back(
        {s.stop_id, s.name, fmt_double(s.lat), fmt_double(s.lon), fmt_double(s.radius_m)});
  write_csv(path, {"stop_id", "name", "lat", "lon", "radius_m"}, rows);
}

// ---------------------------------------------------------------------------
// Routes

std::vector<Route> read_routes(const std::string& path) {
  const nlohmann::json j = parse_json_file(path);
  if (!j.is_array()) throw std::runtime_error(path + ": expected a JSON array of routes");
  std::vector<Route> out;
  for (const auto& rj : j) {
    Route r;
    r.route_id = rj.at("route_id").get<std::string>();
    r.stops = rj.at("stops").get<std::vector<std::string>>();
    if (r.stops.size() < 2)
      throw std::runtime_error(path + ": route '" + r.route_id + "' needs at least two stops");
    if (rj.contains("stop_order_exceptions"))
      r.stop_order_exceptions =
          rj.at("stop_order_exceptions").get<std::vector<std::vector<std::string>>>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_routes(const std::string& path, const std::vector<Route>& routes) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : routes)
    j.push_back({{"route_id", r.route_id},
                 {"stops", r.stops},
                 {"stop_order_exceptions", r.stop_order_exceptions}});
  write_file_bytes(path, j.dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Weather

std::vector<WeatherRecord> read_weather(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_hour = t.require_column("hour_iso", path);
  const int c_temp = t.require_column("temp_c", path);
  const int c_precip = t.require_column("precip_mm", path);
  const int c_wind = t.require_column("wind_ms", path);

  std::vector<WeatherRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + 2;
    WeatherRecord w;
    try {
      w.hour = parse_iso8601(row[static_cast<std::size_t>(c_hour)]);
    } catch (const std::exception& e) {
      csv_error(path, line, e.what());
    }
    w.temp_c = parse_double_cell(row[static_cast<std::size_t>(c_temp)], path, line, "temp_c");
    w.precip_mm =
        parse_double_cell(row[static_cast<std::size_t>(c_precip)], path, line, "precip_mm");
    w.wind_ms = parse_double_cell(row[static_cast<std::size_t>(c_wind)], path, line, "wind_ms");
    out.push_back(w);
  }
  return out;
}

void write_weather(const std::string& path, const std::vector<WeatherRecord>& weather) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(weather.size());
  for (const auto& w : weather)
    rows.push_back({format_iso8601(w.hour), fmt_double(w.temp_c), fmt_double(w.precip_mm),
                    fmt_double(w.wind_ms)});
  write_csv(path, {"hour_iso", "temp_c", "precip_mm", "wind_ms"}, rows);
}

// ---------------------------------------------------------------------------
// Events

EventStream read_events(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_kind = t.require_column("kind", path);
  const int c_vehicle = t.require_column("vehicle_id", path);
  const int c_key = t.require_column("key", path);
  const int c_start = t.require_column("start_iso", path);
  const int c_end = t.require_column("end_iso", path);
  const int c_temp = t.require_column("temp_c", path);
  const int c_precip = t.require_column("precip_mm", path);
  const int c_wind = t.require_column("wind_ms", path);

  EventStream stream;
  std::vector<std::optional<WeatherRecord>> weather;
  bool any_weather = false;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + 2;
    const std::string& kind = row[static_cast<std::size_t>(c_kind)];
    const std::string& key = row[static_cast<std::size_t>(c_key)];
    TimestampMs start = 0;
    TimestampMs end = 0;
    try {
      start = parse_iso8601(row[static_cast<std::size_t>(c_start)]);
      end = parse_iso8601(row[static_cast<std::size_t>(c_end)]);
    } catch (const std::exception& e) {
      csv_error(path, line, e.what());
    }
    try {
      if (kind == "dwell") {
        stream.events.push_back(
            Event::dwell(row[static_cast<std::size_t>(c_vehicle)], key, start, end));
      } else if (kind == "run") {
        const std::size_t arrow = key.find("->");
        if (arrow == std::string::npos || arrow == 0 || arrow + 2 >= key.size())
          csv_error(path, line, "run key '" + key + "' is not of the form FROM->TO");
        stream.events.push_back(
            Event::run(row[static_cast<std::size_t>(c_vehicle)],
                       Segment{key.substr(0, arrow), key.substr(arrow + 2)}, start, end));
      } else {
        csv_error(path, line, "unknown event kind '" + kind + "'");
      }
    } catch (const std::invalid_argument& e) {
      csv_error(path, line, e.what());
    }

    const std::string& temp = row[static_cast<std::size_t>(c_temp)];
    const std::string& precip = row[static_cast<std::size_t>(c_precip)];
    const std::string& wind = row[static_cast<std::size_t>(c_wind)];
    const int empty = static_cast<int>(temp.empty()) + static_cast<int>(precip.empty()) +
                      static_cast<int>(wind.empty());
    if (empty == 3) {
      weather.push_back(std::nullopt);
    } else if (empty == 0) {
      WeatherRecord w;
      w.hour = floor_to_hour(start);
      w.temp_c = parse_double_cell(temp, path, line, "temp_c");
      w.precip_mm = parse_double_cell(precip, path, line, "precip_mm");
      w.wind_ms = parse_double_cell(wind, path, line, "wind_ms");
      weather.push_back(w);
      any_weather = true;
    } else {
      csv_error(path, line, "weather cells must be all present or all empty");
    }
  }
  if (any_weather) stream.weather = std::move(weather);
  return stream;
}

void write_events(const std::string& path, const EventStream& stream) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(stream.events.size());
  const bool has_weather = stream.has_weather();
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    std::vector<std::string> row;
    row.push_back(e.kind == EventKind::kDwell ? "dwell" : "run");
    row.push_back(e.vehicle_id);
    row.push_back(e.kind == EventKind::kDwell ? e.stop_id : e.segment.key());
    row.push_back(format_iso8601(e.start));
    row.push_back(format_iso8601(e.end));
    row.push_back(fmt_double(e.duration_s()));
    if (has_weather && stream.weather[i]) {
      row.push_back(fmt_double(stream.weather[i]->temp_c));
      row.push_back(fmt_double(stream.weather[i]->precip_mm));
      row.push_back(fmt_double(stream.weather[i]->wind_ms));
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    rows.push_back(std::move(row));
  }
  write_csv(path,
            {"kind", "vehicle_id", "key", "start_iso", "end_iso", "duration_s", "temp_c",
             "precip_mm", "wind_ms"},
            rows);
}

// ---------------------------------------------------------------------------
// Dataset

Dataset read_dataset(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_target = t.require_column("target", path);
  const int c_scope = t.require_column("scope", path);
  const int c_vehicle = t.require_column("vehicle_id", path);
  const int c_key = t.require_column("key", path);
  const int c_time = t.require_column("timestamp", path);
  const int c_y = t.require_column("y", path);

  Dataset data;
  for (const auto& name : t.header) {
    if (name.rfind("v:", 0) == 0) data.vehicle_vocab.push_back(name.substr(2));
    if (name.rfind("k:", 0) == 0) data.key_vocab.push_back(name.substr(2));
  }
  const int c_tod_sin = t.require_column("tod_sin", path);
  const int c_tod_cos = t.require_column("tod_cos", path);
  const int c_dow_sin = t.require_column("dow_sin", path);
  const int c_dow_cos = t.require_column("dow_cos", path);
  const int c_temp = t.require_column("temp_c", path);
  const int c_precip = t.require_column("precip_mm", path);
  const int c_wind = t.require_column("wind_ms", path);
  const int c_l1 = t.require_column("l1", path);
  const int c_l2 = t.require_column("l2", path);
  const int c_l1_imp = t.require_column("l1_imputed", path);
  const int c_l2_imp = t.require_column("l2_imputed", path);

  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + 2;
    const auto cell = [&](int c) -> const std::string& {
      return row[static_cast<std::size_t>(c)];
    };
    if (i == 0) {
      data.target = target_kind_from_string(cell(c_target));
      data.scope = lag_scope_from_string(cell(c_scope));
    } else if (cell(c_target) != to_string(data.target) ||
               cell(c_scope) != to_string(data.scope)) {
      csv_error(path, line, "mixed target or scope values in one dataset");
    }
    FeatureRow r;
    r.vehicle_id = cell(c_vehicle);
    r.key = cell(c_key);
    try {
      r.t = parse_iso8601(cell(c_time));
    } catch (const std::exception& e) {
      csv_error(path, line, e.what());
    }
    r.tau.tod_sin = parse_double_cell(cell(c_tod_sin), path, line, "tod_sin");
    r.tau.tod_cos = parse_double_cell(cell(c_tod_cos), path, line, "tod_cos");
    r.tau.dow_sin = parse_double_cell(cell(c_dow_sin), path, line, "dow_sin");
    r.tau.dow_cos = parse_double_cell(cell(c_dow_cos), path, line, "dow_cos");
    r.temp_c = parse_double_cell(cell(c_temp), path, line, "temp_c");
    r.precip_mm = parse_double_cell(cell(c_precip), path, line, "precip_mm");
    r.wind_ms = parse_double_cell(cell(c_wind), path, line, "wind_ms");
    r.lags.l1 = parse_double_cell(cell(c_l1), path, line, "l1");
    r.lags.l2 = parse_double_cell(cell(c_l2), path, line, "l2");
    r.lags.l1_imputed = parse_double_cell(cell(c_l1_imp), path, line, "l1_imputed") != 0.0;
    r.lags.l2_imputed = parse_double_cell(cell(c_l2_imp), path, line, "l2_imputed") != 0.0;
    r.y = parse_double_cell(cell(c_y), path, line, "y");
    if (data.vehicle_index(r.vehicle_id) < 0)
      csv_error(path, line, "vehicle '" + r.vehicle_id + "' has no one-hot column");
    if (data.key_index(r.key) < 0)
      csv_error(path, line, "key '" + r.key + "' has no one-hot column");
    data.rows.push_back(std::move(r));
  }
  return data;
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::vector<std::string> header = {"target", "scope", "vehicle_id", "key", "timestamp"};
  for (const auto& name : data.feature_names()) header.push_back(name);
  header.push_back("y");

  std::vector<std::vector<std::string>> rows;
  rows.reserve(data.rows.size());
  for (const auto& r : data.rows) {
    std::vector<std::string> row = {to_string(data.target), to_string(data.scope), r.vehicle_id,
                                    r.key, format_iso8601(r.t)};
    const Eigen::VectorXd x = data.design_row(r);
    for (long c = 0; c < x.size(); ++c) row.push_back(fmt_double(x[c]));
    row.push_back(fmt_double(r.y));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

// ---------------------------------------------------------------------------
// Metrics, profiles, scope tables

MetricsReport read_metrics(const std::string& path) {
  const nlohmann::json j = parse_json_file(path);
  MetricsReport r;
  r.model = j.at("model").get<std::string>();
  r.target = j.at("target").get<std::string>();
  r.rmse = j.at("rmse").get<double>();
  r.mae = j.at("mae").get<double>();
  r.n = j.at("n").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

void write_metrics(const std::string& path, const MetricsReport& report) {
  const nlohmann::json j = {{"model", report.model}, {"target", report.target},
                            {"rmse", report.rmse},   {"mae", report.mae},
                            {"n", report.n},         {"seed", report.seed}};
  write_file_bytes(path, j.dump(1) + "\n");
}

ErrorProfile read_profile(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_index = t.require_column("stop_index", path);
  const int c_mean = t.require_column("mean_err_s", path);
  const int c_pos = t.require_column("max_pos_s", path);
  const int c_neg = t.require_column("max_neg_s", path);
  const int c_abs = t.require_column("mean_abs_s", path);

  ErrorProfile p;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + 2;
    const long idx = static_cast<long>(
        parse_double_cell(row[static_cast<std::size_t>(c_index)], path, line, "stop_index"));
    if (idx != static_cast<long>(i + 1))
      csv_error(path, line, "stop_index must count up from 1 without gaps");
    p.mean_err_s.push_back(
        parse_double_cell(row[static_cast<std::size_t>(c_mean)], path, line, "mean_err_s"));
    p.max_pos_s.push_back(
        parse_double_cell(row[static_cast<std::size_t>(c_pos)], path, line, "max_pos_s"));
    p.max_neg_s.push_back(
        parse_double_cell(row[static_cast<std::size_t>(c_neg)], path, line, "max_neg_s"));
    p.mean_abs_s.push_back(
        parse_double_cell(row[static_cast<std::size_t>(c_abs)], path, line, "mean_abs_s"));
  }
  return p;
}

void write_profile(const std::string& path, const ErrorProfile& profile) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(profile.mean_err_s.size());
  for (std::size_t m = 0; m < profile.mean_err_s.size(); ++m)
    rows.push_back({std::to_string(m + 1), fmt_double(profile.mean_err_s[m]),
                    fmt_double(profile.max_pos_s[m]), fmt_double(profile.max_neg_s[m]),
                    fmt_double(profile.mean_abs_s[m])});
  write_csv(path, {"stop_index", "mean_err_s", "max_pos_s", "max_neg_s", "mean_abs_s"}, rows);
}

void write_scope_table(const std::string& path, const std::vector<ScopeMetrics>& rows) {
  std::vector<std::vector<std::string>> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    out.push_back({r.model, to_string(r.scope), fmt_double(r.rmse), fmt_double(r.mae),
                   std::to_string(r.n), r.note});
  write_csv(path, {"model", "scope", "rmse", "mae", "n", "note"}, out);
}

// ---------------------------------------------------------------------------
// Configs

PreprocessConfig read_preprocess_config(const std::string& path) {
  const nlohmann::json j = parse_json_file(path);
  PreprocessConfig c;
  if (j.contains("detection_mode")) {
    const std::string mode = j.at("detection_mode").get<std::string>();
    if (mode == "speed_and_gps") {
      c.detection_mode = DetectionMode::kSpeedAndGps;
    } else if (mode == "gps_only") {
      c.detection_mode = DetectionMode::kGpsOnly;
    } else {
      throw std::runtime_error(path + ": unknown detection_mode '" + mode + "'");
    }
  }
  if (j.contains("jitter_threshold_m")) c.jitter_threshold_m = j.at("jitter_threshold_m");
  if (j.contains("max_weather_gap_h")) c.max_weather_gap_h = j.at("max_weather_gap_h");
  if (j.contains("corridor_m")) c.corridor_m = j.at("corridor_m");
  if (j.contains("max_gap_s")) c.max_gap_s = j.at("max_gap_s");
  if (j.contains("exclusion_zones")) {
    for (const auto& zj : j.at("exclusion_zones")) {
      ExclusionZone z;
      z.lat = zj.at("lat").get<double>();
      z.lon = zj.at("lon").get<double>();
      z.radius_m = zj.at("radius_m").get<double>();
      c.exclusion_zones.push_back(z);
    }
  }
  if (j.contains("rate_change")) {
    const auto& rj = j.at("rate_change");
    if (rj.contains("tolerance")) c.rate_change.tolerance = rj.at("tolerance");
    if (rj.contains("window")) c.rate_change.window = rj.at("window");
    if (rj.contains("policy")) c.rate_change.policy = rj.at("policy");
  }
  return c;
}

void write_preprocess_config(const std::string& path, const PreprocessConfig& config) {
  nlohmann::json zones = nlohmann::json::array();
  for (const auto& z : config.exclusion_zones)
    zones.push_back({{"lat", z.lat}, {"lon", z.lon}, {"radius_m", z.radius_m}});
  const nlohmann::json j = {
      {"detection_mode",
       config.detection_mode == DetectionMode::kSpeedAndGps ? "speed_and_gps" : "gps_only"},
      {"jitter_threshold_m", config.jitter_threshold_m},
      {"exclusion_zones", std::move(zones)},
      {"max_weather_gap_h", config.max_weather_gap_h},
      {"corridor_m", config.corridor_m},
      {"max_gap_s", config.max_gap_s},
      {"rate_change",
       {{"tolerance", config.rate_change.tolerance},
        {"window", config.rate_change.window},
        {"policy", config.rate_change.policy}}}};
  write_file_bytes(path, j.dump(1) + "\n");
}

SiteSpec read_site_spec(const std::string& path) {
  const nlohmann::json j = parse_json_file(path);
  SiteSpec s;
  if (j.contains("preset")) s = preset(j.at("preset").get<std::string>());
  const auto set_str = [&](const char* key, std::string& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
  };
  const auto set_int = [&](const char* key, int& out) {
    if (j.contains(key)) out = j.at(key).get<int>();
  };
  const auto set_double = [&](const char* key, double& out) {
    if (j.contains(key)) out = j.at(key).get<double>();
  };
  const auto set_bool = [&](const char* key, bool& out) {
    if (j.contains(key)) out = j.at(key).get<bool>();
  };
  set_str("site_id", s.site_id);
  set_int("n_stops", s.n_stops);
  set_double("stop_spacing_m", s.stop_spacing_m);
  set_double("stop_radius_m", s.stop_radius_m);
  set_double("center_lat", s.center_lat);
  set_double("center_lon", s.center_lon);
  set_int("n_vehicles", s.n_vehicles);
  set_int("days", s.days);
  set_str("start_date", s.start_date);
  set_int("service_start_hour", s.service_start_hour);
  set_int("service_hours", s.service_hours);
  set_double("sampling_period_s", s.sampling_period_s);
  set_double("cruise_speed_kmh", s.cruise_speed_kmh);
  set_double("accel_ms2", s.accel_ms2);
  set_double("p_zero", s.p_zero);
  if (j.contains("dwell_modes")) {
    s.dwell_modes.clear();
    for (const auto& mj : j.at("dwell_modes")) {
      DwellMode m;
      m.mean_s = mj.at("mean_s").get<double>();
      m.std_s = mj.at("std_s").get<double>();
      m.weight = mj.at("weight").get<double>();
      s.dwell_modes.push_back(m);
    }
  }
  if (j.contains("zero_pattern")) {
    const std::string p = j.at("zero_pattern").get<std::string>();
    if (p == "bernoulli") {
      s.zero_pattern = ZeroPattern::kBernoulli;
    } else if (p == "stop_hour_grid") {
      s.zero_pattern = ZeroPattern::kStopHourGrid;
    } else {
      throw std::runtime_error(path + ": unknown zero_pattern '" + p + "'");
    }
  }
  set_bool("stop_linked_modes", s.stop_linked_modes);
  set_double("per_vehicle_speed_offset_kmh", s.per_vehicle_speed_offset_kmh);
  set_double("run_tod_drift", s.run_tod_drift);
  set_double("run_speed_noise", s.run_speed_noise);
  set_double("gps_noise_sigma_m", s.gps_noise_sigma_m);
  set_bool("speed_channel", s.speed_channel);
  set_double("temp_base_c", s.temp_base_c);
  set_double("temp_amp_c", s.temp_amp_c);
  set_double("precip_prob", s.precip_prob);
  set_double("wind_base_ms", s.wind_base_ms);
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

void write_site_spec(const std::string& path, const SiteSpec& s) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : s.dwell_modes)
    modes.push_back({{"mean_s", m.mean_s}, {"std_s", m.std_s}, {"weight", m.weight}});
  const nlohmann::json j = {
      {"site_id", s.site_id},
      {"n_stops", s.n_stops},
      {"stop_spacing_m", s.stop_spacing_m},
      {"stop_radius_m", s.stop_radius_m},
      {"center_lat", s.center_lat},
      {"center_lon", s.center_lon},
      {"n_vehicles", s.n_vehicles},
      {"days", s.days},
      {"start_date", s.start_date},
      {"service_start_hour", s.service_start_hour},
      {"service_hours", s.service_hours},
      {"sampling_period_s", s.sampling_period_s},
      {"cruise_speed_kmh", s.cruise_speed_kmh},
      {"accel_ms2", s.accel_ms2},
      {"p_zero", s.p_zero},
      {"dwell_modes", std::move(modes)},
      {"zero_pattern",
       s.zero_pattern == ZeroPattern::kBernoulli ? "bernoulli" : "stop_hour_grid"},
      {"stop_linked_modes", s.stop_linked_modes},
      {"per_vehicle_speed_offset_kmh", s.per_vehicle_speed_offset_kmh},
      {"run_tod_drift", s.run_tod_drift},
      {"run_speed_noise", s.run_speed_noise},
      {"gps_noise_sigma_m", s.gps_noise_sigma_m},
      {"speed_channel", s.speed_channel},
      {"temp_base_c", s.temp_base_c},
      {"temp_amp_c", s.temp_amp_c},
      {"precip_prob", s.precip_prob},
      {"wind_base_ms", s.wind_base_ms},
      {"seed", s.seed}};
  write_file_bytes(path, j.dump(1) + "\n");
}

std::string read_text_file(const std::string& path) { return read_file_bytes(path); }

void write_text_file(const std::string& path, const std::string& content) {
  write_file_bytes(path, content);
}

}  // namespace atp
