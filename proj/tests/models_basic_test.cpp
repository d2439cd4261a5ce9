#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "atp/eval/eval.hpp"
#include "atp/models/model.hpp"

using namespace atp;

namespace {

FeatureRow row(const std::string& vehicle, const std::string& key, TimestampMs t, double l1,
               double l2, double y) {
  FeatureRow r;
  r.vehicle_id = vehicle;
  r.key = key;
  r.t = t;
  r.tau = encode_time(t);
  r.temp_c = 4.0;
  r.precip_mm = 0.1;
  r.wind_ms = 2.0;
  r.lags = Lags{l1, l2, false, false};
  r.y = y;
  return r;
}

// Two vehicles over three stops with a mix of zero and positive dwells,
// enough variety to exercise every trainer.
Dataset small_dataset(TargetKind target = TargetKind::kDwell) {
  Dataset d;
  d.target = target;
  d.scope = LagScope::kFleet;
  d.vehicle_vocab = {"V1", "V2"};
  d.key_vocab = {"A", "B", "C"};
  const TimestampMs base = parse_iso8601("2023-01-09T06:00:00Z");
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(5.0, 40.0);
  for (int i = 0; i < 36; ++i) {
    const std::string vehicle = i % 2 == 0 ? "V1" : "V2";
    const std::string key = d.key_vocab[static_cast<std::size_t>(i) % 3];
    const double y = i % 9 == 4 ? 0.0 : unif(rng);
    d.rows.push_back(row(vehicle, key, base + i * 5 * kMsPerMinute, unif(rng), unif(rng), y));
  }
  return d;
}

GraphSpec key_graph() {
  Route r;
  r.route_id = "R1";
  r.stops = {"A", "B", "C"};
  return build_stop_graph({r});
}

std::string read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("the lag baseline echoes the most recent lag, floored per target") {
  Dataset dwell = small_dataset(TargetKind::kDwell);
  const auto model = train_lag(dwell);
  CHECK(model->kind() == "lag");
  CHECK(model->predict_row(row("V1", "A", 0, 17.5, 3.0, 0.0)) == doctest::Approx(17.5));
  // Dwell predictions are floored at zero.
  CHECK(model->predict_row(row("V1", "A", 0, -5.0, 3.0, 0.0)) == 0.0);

  Dataset run = small_dataset(TargetKind::kRun);
  const auto run_model = train_lag(run);
  // Running predictions are floored at one second.
  CHECK(run_model->predict_row(row("V1", "A", 0, 0.2, 3.0, 0.0)) == 1.0);
  CHECK(run_model->predict_row(row("V1", "A", 0, 80.0, 3.0, 0.0)) == doctest::Approx(80.0));
}

TEST_CASE("the mean baseline keeps per-key means and falls back globally") {
  Dataset d;
  d.target = TargetKind::kDwell;
  d.scope = LagScope::kFleet;
  d.vehicle_vocab = {"V1"};
  d.key_vocab = {"A", "B", "C"};  // C never shows up in the rows
  d.rows = {
      row("V1", "A", 1000, 1, 1, 10.0),
      row("V1", "A", 2000, 1, 1, 20.0),
      row("V1", "B", 3000, 1, 1, 40.0),
  };
  const auto model = train_mean(d);
  CHECK(model->predict_row(row("V1", "A", 9000, 0, 0, 0)) == doctest::Approx(15.0));
  CHECK(model->predict_row(row("V1", "B", 9000, 0, 0, 0)) == doctest::Approx(40.0));
  // A vocabulary key with no training rows gets the global mean.
  CHECK(model->predict_row(row("V1", "C", 9000, 0, 0, 0)) ==
        doctest::Approx(70.0 / 3.0));

  RowContext ctx;
  ctx.vehicle_id = "V1";
  ctx.t = 9000;
  ctx.lags_for = [](const std::string&) { return Lags{0, 0, true, true}; };
  const auto preds = model->predict_context(ctx, {"B", "A"});
  REQUIRE(preds.size() == 2);
  CHECK(preds[0] == doctest::Approx(40.0));
  CHECK(preds[1] == doctest::Approx(15.0));
}

TEST_CASE("ridge regression recovers a clean linear trend in the lag feature") {
  Dataset d;
  d.target = TargetKind::kDwell;
  d.scope = LagScope::kFleet;
  d.vehicle_vocab = {"V1"};
  d.key_vocab = {"A"};
  // All rows share one timestamp so the lag is the only varying feature.
  for (int rep = 0; rep < 4; ++rep) {
    d.rows.push_back(row("V1", "A", 1000, 0.0, 0.0, 1.0));
    d.rows.push_back(row("V1", "A", 1000, 1.0, 0.0, 3.0));
  }
  const auto model = train_linreg(d, 1e-6);
  CHECK(model->kind() == "linreg");
  CHECK(model->predict_row(row("V1", "A", 1000, 2.0, 0.0, 0.0)) ==
        doctest::Approx(5.0).epsilon(1e-4));

  // Without the penalty the constant one-hot columns make the normal
  // equations singular.
  CHECK_THROWS_AS((void)train_linreg(d, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)train_linreg(d, -1.0), std::invalid_argument);
}

TEST_CASE("classifier outputs are exempt from the run floor") {
  Dataset d = small_dataset(TargetKind::kRun);
  for (auto& r : d.rows) r.y = r.lags.l1 > 20.0 ? 1.0 : 0.0;
  ForestParams params;
  params.n_trees = 15;
  const auto model =
      train_random_forest(d, params, 3, ForestTask::kBinaryClassification);
  CHECK(model->is_classifier());
  bool saw_zero = false;
  for (double p : model->predict(d)) {
    CHECK((p == 0.0 || p == 1.0));
    saw_zero = saw_zero || p == 0.0;
  }
  CHECK(saw_zero);
}

TEST_CASE("every model kind survives a save/load round trip bit-exactly") {
  const Dataset data = small_dataset();
  const GraphSpec graph = key_graph();

  ForestParams rf;
  rf.n_trees = 8;
  rf.max_depth = 5;
  GbtParams gbt;
  gbt.n_rounds = 12;
  MlpParams mlp;
  mlp.hidden = {8};
  mlp.epochs = 25;
  mlp.batch = 8;
  GcnParams gcn;
  gcn.hidden = 4;
  gcn.epochs = 25;

  std::vector<std::unique_ptr<Model>> models;
  models.push_back(train_lag(data));
  models.push_back(train_mean(data));
  models.push_back(train_linreg(data, 1e-3));
  models.push_back(train_random_forest(data, rf, 5));
  models.push_back(train_gbt(data, gbt, 5));
  models.push_back(train_mlp(data, mlp, 5));
  models.push_back(train_gcn(data, graph, gcn, 5));
  models.push_back(train_rf_gcn(data, graph, rf, gcn, 5));

  for (const auto& model : models) {
    CAPTURE(model->kind());
    const std::string path = temp_path("atp_model_" + model->kind() + ".json");
    model->save(path);
    const auto loaded = Model::load(path);
    CHECK(loaded->kind() == model->kind());
    CHECK(loaded->target() == model->target());
    CHECK(loaded->scope() == model->scope());
    CHECK(loaded->seed() == model->seed());
    CHECK(loaded->vehicle_vocab() == model->vehicle_vocab());
    CHECK(loaded->key_vocab() == model->key_vocab());

    const auto before = model->predict(data);
    const auto after = loaded->predict(data);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);

    const std::string again = temp_path("atp_model_again.json");
    loaded->save(again);
    CHECK(read_all(path) == read_all(again));
    std::remove(path.c_str());
    std::remove(again.c_str());
  }
}

TEST_CASE("the dispatcher maps kind strings and honors overrides") {
  const Dataset data = small_dataset();
  const GraphSpec graph = key_graph();
  const nlohmann::json none = nlohmann::json::object();

  for (const std::string kind : {"lag", "mean", "linreg", "rf", "gbt", "mlp"}) {
    nlohmann::json params = none;
    if (kind == "rf") params = {{"n_trees", 4}, {"max_depth", 3}};
    if (kind == "gbt") params = {{"n_rounds", 5}};
    if (kind == "mlp") params = {{"hidden", {6}}, {"epochs", 10}, {"batch", 8}};
    const auto model = train_model(kind, data, params, std::nullopt, 9);
    CHECK(model->kind() == kind);
  }
  const auto gcn = train_model("gcn", data, {{"hidden", 4}, {"epochs", 10}}, graph, 9);
  CHECK(gcn->kind() == "gcn");
  const auto hybrid = train_model(
      "rf-gcn", data,
      {{"rf", {{"n_trees", 4}}}, {"gcn", {{"hidden", 4}, {"epochs", 10}}}},
      graph, 9);
  CHECK(hybrid->kind() == "rf-gcn");

  // Overrides must actually reach the engine: a forest of a different size
  // predicts differently.
  ForestParams four;
  four.n_trees = 4;
  four.max_depth = 3;
  const auto direct = train_random_forest(data, four, 9);
  const auto via = train_model("rf", data, {{"n_trees", 4}, {"max_depth", 3}}, std::nullopt, 9);
  const auto a = direct->predict(data);
  const auto b = via->predict(data);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  CHECK_THROWS_AS((void)train_model("gcn", data, none, std::nullopt, 9), std::invalid_argument);
  CHECK_THROWS_AS((void)train_model("rf-gcn", data, none, std::nullopt, 9),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)train_model("svm", data, none, std::nullopt, 9), std::invalid_argument);
}

TEST_CASE("training on an empty dataset is rejected") {
  Dataset d;
  d.vehicle_vocab = {"V1"};
  d.key_vocab = {"A"};
  CHECK_THROWS_AS((void)train_mean(d), std::invalid_argument);
  CHECK_THROWS_AS((void)train_lag(d), std::invalid_argument);
  CHECK_THROWS_AS((void)train_linreg(d, 1e-3), std::invalid_argument);
}

TEST_CASE("hyperparameter defaults stay pinned") {
  const ForestParams rf;
  CHECK(rf.n_trees == 200);
  CHECK(rf.max_depth == 12);
  CHECK(rf.min_leaf == 2);
  CHECK(rf.max_features == 0);
  CHECK(rf.bootstrap);

  const GbtParams gbt;
  CHECK(gbt.n_rounds == 300);
  CHECK(gbt.learning_rate == 0.1);
  CHECK(gbt.max_depth == 4);
  CHECK(gbt.min_leaf == 1);
  CHECK(gbt.l2_leaf == 1.0);

  const MlpParams mlp;
  CHECK(mlp.hidden == std::vector<int>{64, 64});
  CHECK(mlp.epochs == 300);
  CHECK(mlp.batch == 32);
  CHECK(mlp.step == 1e-3);

  const GcnParams gcn;
  CHECK(gcn.hidden == 64);
  CHECK(gcn.epochs == 500);
  CHECK(gcn.step == 1e-3);

  const TreeGrowParams grow;
  CHECK(grow.max_depth == 6);
  CHECK(grow.min_leaf == 1);
  CHECK(grow.max_features == 0);
  CHECK(grow.l2_leaf == 0.0);
  CHECK(!grow.classification);
}

TEST_CASE("model evaluation reports the advertised metadata") {
  const Dataset data = small_dataset();
  const auto model = train_mean(data);
  const MetricsReport report = evaluate_model(*model, data);
  CHECK(report.model == "mean");
  CHECK(report.target == "dwell");
  CHECK(report.n == data.rows.size());
  CHECK(report.rmse >= report.mae);
  CHECK(report.rmse > 0.0);

  std::vector<double> y;
  std::vector<double> yhat = model->predict(data);
  for (const auto& r : data.rows) y.push_back(r.y);
  CHECK(report.rmse == doctest::Approx(rmse(y, yhat)));
  CHECK(report.mae == doctest::Approx(mae(y, yhat)));
}
