#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "atp/eval/eval.hpp"
#include "atp/features/features.hpp"
#include "atp/graph/graph.hpp"
#include "atp/io/formats.hpp"
#include "atp/io/manifest.hpp"
#include "atp/models/model.hpp"
#include "atp/preprocess/preprocess.hpp"
#include "atp/synth/synth.hpp"

namespace fs = std::filesystem;

namespace {

std::string now_iso() {
  const auto since_epoch = std::chrono::system_clock::now().time_since_epoch();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(since_epoch).count();
  return atp::format_iso8601(static_cast<atp::TimestampMs>(ms));
}

atp::RunManifest start_manifest(const std::string& command, std::uint64_t seed,
                                const std::string& config_blob) {
  atp::RunManifest m;
  m.command = command;
  m.config_digest = atp::sha256_hex(config_blob);
  m.seed = seed;
  m.started = now_iso();
  return m;
}

void add_input(atp::RunManifest& m, const std::string& path) {
  m.inputs[path] = atp::sha256_file(path);
}

void add_output(atp::RunManifest& m, const std::string& path) {
  m.outputs[path] = atp::sha256_file(path);
}

void finish_manifest(atp::RunManifest& m, const std::string& path) {
  m.finished = now_iso();
  atp::write_manifest(path, m);
}

// Sorted so downstream processing is independent of directory enumeration
// order.
std::vector<std::string> list_files(const std::string& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir + "' is not a directory");
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == extension)
      out.push_back(entry.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

atp::Route single_route(const std::string& path) {
  const std::vector<atp::Route> routes = atp::read_routes(path);
  if (routes.size() != 1)
    throw std::runtime_error("'" + path + "' holds " + std::to_string(routes.size()) +
                             " routes; this command expects exactly one");
  return routes.front();
}

struct SynthArgs {
  std::string preset_name;
  std::string spec_file;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void run_synth(const SynthArgs& a, const std::string& command) {
  atp::SiteSpec spec;
  if (!a.preset_name.empty()) {
    spec = atp::preset(a.preset_name);
  } else if (!a.spec_file.empty()) {
    spec = atp::read_site_spec(a.spec_file);
  } else {
    throw std::runtime_error("synth needs --preset or --spec");
  }
  if (a.seed_given) spec.seed = a.seed;

  const atp::SiteData site = atp::generate_site(spec);

  fs::create_directories(fs::path(a.out_dir) / "traces");
  const auto at = [&](const std::string& name) { return (fs::path(a.out_dir) / name).string(); };

  atp::write_site_spec(at("site_spec.json"), spec);
  atp::RunManifest m = start_manifest(command, spec.seed, atp::read_text_file(at("site_spec.json")));
  if (!a.spec_file.empty()) add_input(m, a.spec_file);

  atp::write_stops(at("stops.csv"), site.stops);
  atp::write_routes(at("routes.json"), {site.route});
  atp::write_weather(at("weather.csv"), site.weather);
  atp::EventStream truth;
  truth.events = site.truth.events;
  atp::write_events(at("truth.csv"), truth);
  for (const auto& [vehicle_id, fixes] : site.traces)
    atp::write_traces(at("traces/" + vehicle_id + ".csv"), fixes);

  add_output(m, at("site_spec.json"));
  add_output(m, at("stops.csv"));
  add_output(m, at("routes.json"));
  add_output(m, at("weather.csv"));
  add_output(m, at("truth.csv"));
  for (const auto& [vehicle_id, fixes] : site.traces)
    add_output(m, at("traces/" + vehicle_id + ".csv"));
  finish_manifest(m, at("manifest.json"));
}

struct PreprocessArgs {
  std::string traces_dir;
  std::string stops_file;
  std::string routes_file;
  std::string weather_file;
  std::string config_file;
  std::string out_file;
};

void run_preprocess(const PreprocessArgs& a, const std::string& command) {
  const std::string config_blob =
      a.config_file.empty() ? std::string("{}") : atp::read_text_file(a.config_file);
  atp::RunManifest m = start_manifest(command, 0, config_blob);

  std::vector<atp::GpsFix> fixes;
  for (const std::string& path : list_files(a.traces_dir, ".csv")) {
    add_input(m, path);
    std::vector<atp::GpsFix> part = atp::read_traces(path);
    fixes.insert(fixes.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
  }
  add_input(m, a.stops_file);
  add_input(m, a.routes_file);
  add_input(m, a.weather_file);
  if (!a.config_file.empty()) add_input(m, a.config_file);

  const std::vector<atp::Stop> stops = atp::read_stops(a.stops_file);
  const atp::Route route = single_route(a.routes_file);
  const std::vector<atp::WeatherRecord> weather = atp::read_weather(a.weather_file);
  const atp::PreprocessConfig config = a.config_file.empty()
                                           ? atp::PreprocessConfig{}
                                           : atp::read_preprocess_config(a.config_file);

  const atp::EventStream events = atp::preprocess_traces(fixes, route, stops, weather, config);
  atp::write_events(a.out_file, events);
  for (const std::string& d : events.diagnostics) std::cerr << "note: " << d << "\n";

  add_output(m, a.out_file);
  finish_manifest(m, a.out_file + ".manifest.json");
}

struct FeaturesArgs {
  std::string events_file;
  std::string target = "dwell";
  std::string scope = "per-vehicle";
  std::string out_file;
};

void run_features(const FeaturesArgs& a, const std::string& command) {
  const nlohmann::json config = {{"target", a.target}, {"scope", a.scope}};
  atp::RunManifest m = start_manifest(command, 0, config.dump(1));
  add_input(m, a.events_file);

  const atp::EventStream stream = atp::read_events(a.events_file);
  const atp::TargetKind target = atp::target_kind_from_string(a.target);
  const atp::LagScope scope = atp::lag_scope_from_string(a.scope);
  const atp::Dataset data =
      atp::assemble_dataset(stream, target, scope, atp::vehicle_vocab_of(stream),
                            atp::key_vocab_of(stream, target));
  atp::write_dataset(a.out_file, data);

  add_output(m, a.out_file);
  finish_manifest(m, a.out_file + ".manifest.json");
}

struct TrainArgs {
  std::string dataset_file;
  std::string model_kind;
  std::string params_file;
  std::string routes_file;
  std::uint64_t seed = 0;
  std::string out_file;
};

void run_train(const TrainArgs& a, const std::string& command) {
  const std::string params_blob =
      a.params_file.empty() ? std::string("{}") : atp::read_text_file(a.params_file);
  atp::RunManifest m = start_manifest(command, a.seed, params_blob);
  add_input(m, a.dataset_file);
  if (!a.params_file.empty()) add_input(m, a.params_file);
  if (!a.routes_file.empty()) add_input(m, a.routes_file);

  nlohmann::json params;
  try {
    params = nlohmann::json::parse(params_blob);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed JSON in '" + a.params_file + "': " + e.what());
  }

  const atp::Dataset data = atp::read_dataset(a.dataset_file);
  std::optional<atp::GraphSpec> graph;
  if (!a.routes_file.empty()) {
    const std::vector<atp::Route> routes = atp::read_routes(a.routes_file);
    graph = data.target == atp::TargetKind::kDwell ? atp::build_stop_graph(routes)
                                                   : atp::build_segment_graph(routes);
  }

  const auto model = atp::train_model(a.model_kind, data, params, graph, a.seed);
  model->save(a.out_file);

  add_output(m, a.out_file);
  finish_manifest(m, a.out_file + ".manifest.json");
}

struct EvaluateArgs {
  std::string model_file;
  std::string dataset_file;
  std::string out_file;
};

void run_evaluate(const EvaluateArgs& a, const std::string& command) {
  const auto model = atp::Model::load(a.model_file);
  atp::RunManifest m = start_manifest(command, model->seed(), "{}");
  add_input(m, a.model_file);
  add_input(m, a.dataset_file);

  const atp::Dataset data = atp::read_dataset(a.dataset_file);
  const atp::MetricsReport report = atp::evaluate_model(*model, data);
  atp::write_metrics(a.out_file, report);

  add_output(m, a.out_file);
  finish_manifest(m, a.out_file + ".manifest.json");
}

struct JourneyArgs {
  std::string dwell_model_file;
  std::string run_model_file;
  std::string events_file;
  std::string routes_file;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string out_file;
};

void run_journey(const JourneyArgs& a, const std::string& command) {
  atp::RunManifest m = start_manifest(command, a.seed, "{}");
  add_input(m, a.dwell_model_file);
  add_input(m, a.run_model_file);
  add_input(m, a.events_file);
  add_input(m, a.routes_file);

  const auto dwell_model = atp::Model::load(a.dwell_model_file);
  const auto run_model = atp::Model::load(a.run_model_file);
  const atp::EventStream stream = atp::read_events(a.events_file);
  const atp::Route route = single_route(a.routes_file);

  std::vector<atp::Journey> journeys = atp::extract_journeys(stream, route);
  if (a.samples > 0) journeys = atp::sample_journeys(journeys, a.samples, a.seed);
  if (journeys.empty()) throw std::runtime_error("no complete journeys in the event stream");

  const atp::LagIndex dwell_lags(atp::observations_of(stream, atp::TargetKind::kDwell),
                                 dwell_model->scope());
  const atp::LagIndex run_lags(atp::observations_of(stream, atp::TargetKind::kRun),
                               run_model->scope());
  const atp::ErrorProfile profile = atp::accumulated_error_profile(
      journeys, *dwell_model, *run_model, route, dwell_lags, run_lags);
  atp::write_profile(a.out_file, profile);

  add_output(m, a.out_file);
  finish_manifest(m, a.out_file + ".manifest.json");
}

struct LagScopeArgs {
  std::string events_file;
  std::string models = "lag,mean,linreg,rf,gbt,mlp";
  std::string target = "dwell";
  double test_days = 2.0;
  std::uint64_t seed = 7;
  std::string out_file;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void run_lag_scope(const LagScopeArgs& a, const std::string& command) {
  const nlohmann::json config = {{"models", a.models},
                                 {"target", a.target},
                                 {"test_days", a.test_days}};
  atp::RunManifest m = start_manifest(command, a.seed, config.dump(1));
  add_input(m, a.events_file);

  const atp::EventStream stream = atp::read_events(a.events_file);
  const std::vector<atp::ScopeMetrics> table = atp::lag_scope_experiment(
      stream, split_list(a.models), atp::target_kind_from_string(a.target), a.test_days, a.seed);
  atp::write_scope_table(a.out_file, table);
  for (const auto& row : table)
    if (!row.note.empty()) std::cerr << "note: " << row.note << "\n";

  add_output(m, a.out_file);
  finish_manifest(m, a.out_file + ".manifest.json");
}

struct ReportArgs {
  std::string metrics_dir;
  std::string out_file;
};

void run_report(const ReportArgs& a, const std::string& command) {
  atp::RunManifest m = start_manifest(command, 0, "{}");

  std::vector<atp::MetricsReport> reports;
  for (const std::string& path : list_files(a.metrics_dir, ".json")) {
    if (fs::path(path).filename().string().find("manifest") != std::string::npos) continue;
    add_input(m, path);
    reports.push_back(atp::read_metrics(path));
  }
  if (reports.empty())
    throw std::runtime_error("no metrics files under '" + a.metrics_dir + "'");
  std::sort(reports.begin(), reports.end(),
            [](const atp::MetricsReport& x, const atp::MetricsReport& y) {
              return std::tie(x.target, x.model, x.seed) < std::tie(y.target, y.model, y.seed);
            });

  std::vector<std::vector<std::string>> rows;
  rows.reserve(reports.size());
  for (const auto& r : reports)
    rows.push_back({r.target, r.model, atp::fmt_double(r.rmse), atp::fmt_double(r.mae),
                    std::to_string(r.n), std::to_string(r.seed)});
  atp::write_csv(a.out_file, {"target", "model", "rmse", "mae", "n", "seed"}, rows);

  add_output(m, a.out_file);
  finish_manifest(m, a.out_file + ".manifest.json");
}

}  // namespace

int main(int argc, char** argv) {
  std::string command;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) command += ' ';
    command += argv[i];
  }

  CLI::App app{"Arrival-time prediction toolkit for fixed-route shuttles"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic site");
  synth_cmd->add_option("--preset", synth.preset_name,
                        "linkoping_like | lesmureaux_like | tampere_like");
  synth_cmd->add_option("--spec", synth.spec_file, "Site spec JSON");
  CLI::Option* synth_seed =
      synth_cmd->add_option("--seed", synth.seed, "Overrides the spec's seed");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();

  PreprocessArgs pre;
  CLI::App* pre_cmd = app.add_subcommand("preprocess", "Detect dwell/run events from traces");
  pre_cmd->add_option("--traces", pre.traces_dir, "Directory of per-vehicle trace CSVs")
      ->required();
  pre_cmd->add_option("--stops", pre.stops_file, "Stops CSV")->required();
  pre_cmd->add_option("--routes", pre.routes_file, "Routes JSON")->required();
  pre_cmd->add_option("--weather", pre.weather_file, "Hourly weather CSV")->required();
  pre_cmd->add_option("--config", pre.config_file, "Preprocess config JSON");
  pre_cmd->add_option("--out", pre.out_file, "Output events CSV")->required();

  FeaturesArgs feat;
  CLI::App* feat_cmd = app.add_subcommand("features", "Assemble a supervised dataset");
  feat_cmd->add_option("--events", feat.events_file, "Events CSV")->required();
  feat_cmd->add_option("--target", feat.target, "dwell | run");
  feat_cmd->add_option("--scope", feat.scope, "per-vehicle | fleet");
  feat_cmd->add_option("--out", feat.out_file, "Output dataset CSV")->required();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit a model on a dataset");
  train_cmd->add_option("--dataset", train.dataset_file, "Dataset CSV")->required();
  train_cmd->add_option("--model", train.model_kind,
                        "lag | mean | linreg | rf | gbt | mlp | gcn | rf-gcn")
      ->required();
  train_cmd->add_option("--params", train.params_file, "Hyperparameter JSON");
  train_cmd->add_option("--routes", train.routes_file, "Routes JSON (graph models)");
  train_cmd->add_option("--seed", train.seed, "Training seed");
  train_cmd->add_option("--out", train.out_file, "Output model file")->required();

  EvaluateArgs ev;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "Score a model on a dataset");
  ev_cmd->add_option("--model", ev.model_file, "Model file")->required();
  ev_cmd->add_option("--dataset", ev.dataset_file, "Dataset CSV")->required();
  ev_cmd->add_option("--out", ev.out_file, "Output metrics JSON")->required();

  JourneyArgs jour;
  CLI::App* jour_cmd = app.add_subcommand("journey", "Accumulated-error profile over journeys");
  jour_cmd->add_option("--dwell-model", jour.dwell_model_file, "Dwell model file")->required();
  jour_cmd->add_option("--run-model", jour.run_model_file, "Run model file")->required();
  jour_cmd->add_option("--events", jour.events_file, "Events CSV")->required();
  jour_cmd->add_option("--routes", jour.routes_file, "Routes JSON")->required();
  jour_cmd->add_option("--samples", jour.samples, "Journeys to sample (0 = all)");
  jour_cmd->add_option("--seed", jour.seed, "Sampling seed");
  jour_cmd->add_option("--out", jour.out_file, "Output profile CSV")->required();

  LagScopeArgs scope;
  CLI::App* exp_cmd = app.add_subcommand("experiment", "Canned experiments");
  exp_cmd->require_subcommand(1);
  CLI::App* scope_cmd =
      exp_cmd->add_subcommand("lag-scope", "Per-vehicle vs fleet lags across models");
  scope_cmd->add_option("--events", scope.events_file, "Events CSV")->required();
  scope_cmd->add_option("--models", scope.models, "Comma-separated model kinds");
  scope_cmd->add_option("--target", scope.target, "dwell | run");
  scope_cmd->add_option("--test-days", scope.test_days, "Held-out tail length in days");
  scope_cmd->add_option("--seed", scope.seed, "Training seed");
  scope_cmd->add_option("--out", scope.out_file, "Output table CSV")->required();

  ReportArgs rep;
  CLI::App* rep_cmd = app.add_subcommand("report", "Collate metrics JSONs into one table");
  rep_cmd->add_option("--metrics", rep.metrics_dir, "Directory of metrics JSON files")
      ->required();
  rep_cmd->add_option("--out", rep.out_file, "Output table CSV")->required();

  try {
    app.parse(argc, argv);
    synth.seed_given = synth_seed->count() > 0;
    if (synth_cmd->parsed()) run_synth(synth, command);
    if (pre_cmd->parsed()) run_preprocess(pre, command);
    if (feat_cmd->parsed()) run_features(feat, command);
    if (train_cmd->parsed()) run_train(train, command);
    if (ev_cmd->parsed()) run_evaluate(ev, command);
    if (jour_cmd->parsed()) run_journey(jour, command);
    if (exp_cmd->parsed() && scope_cmd->parsed()) run_lag_scope(scope, command);
    if (rep_cmd->parsed()) run_report(rep, command);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
