#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atp/core/types.hpp"
#include "atp/eval/eval.hpp"
#include "atp/features/features.hpp"
#include "atp/preprocess/preprocess.hpp"
#include "atp/synth/synth.hpp"

namespace atp {

// Shortest decimal form that round-trips the exact double.
std::string fmt_double(double v);

// Minimal CSV with RFC-style quoting; readers throw std::runtime_error
// carrying file, line, and column context on malformed input.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  int require_column(const std::string& name, const std::string& path) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// traces CSV: vehicle_id,timestamp,lat,lon,speed_kmh (speed empty if absent)
std::vector<GpsFix> read_traces(const std::string& path);
void write_traces(const std::string& path, const std::vector<GpsFix>& fixes);

// stops CSV: stop_id,name,lat,lon,radius_m
std::vector<Stop> read_stops(const std::string& path);
void write_stops(const std::string& path, const std::vector<Stop>& stops);

// routes JSON: [{route_id, stops:[...], stop_order_exceptions:[[...]]}]
std::vector<Route> read_routes(const std::string& path);
void write_routes(const std::string& path, const std::vector<Route>& routes);

// weather CSV: hour_iso,temp_c,precip_mm,wind_ms
std::vector<WeatherRecord> read_weather(const std::string& path);
void write_weather(const std::string& path, const std::vector<WeatherRecord>& weather);

// events CSV: kind,vehicle_id,key,start_iso,end_iso,duration_s,
// temp_c,precip_mm,wind_ms (weather cells empty when missing)
EventStream read_events(const std::string& path);
void write_events(const std::string& path, const EventStream& stream);

// dataset CSV: target,scope,vehicle_id,key,timestamp, then the numeric
// design columns (vehicle one-hots prefixed v:, key one-hots k:), y last.
// The header alone reconstructs the vocabularies.
Dataset read_dataset(const std::string& path);
void write_dataset(const std::string& path, const Dataset& data);

// metrics JSON: {model,target,rmse,mae,n,seed}
MetricsReport read_metrics(const std::string& path);
void write_metrics(const std::string& path, const MetricsReport& report);

// profile CSV: stop_index,mean_err_s,max_pos_s,max_neg_s,mean_abs_s
void write_profile(const std::string& path, const ErrorProfile& profile);
ErrorProfile read_profile(const std::string& path);

// lag-scope table CSV: model,scope,rmse,mae,n,note
void write_scope_table(const std::string& path, const std::vector<ScopeMetrics>& rows);

PreprocessConfig read_preprocess_config(const std::string& path);
void write_preprocess_config(const std::string& path, const PreprocessConfig& config);

SiteSpec read_site_spec(const std::string& path);
void write_site_spec(const std::string& path, const SiteSpec& spec);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace atp
