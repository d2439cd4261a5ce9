#include <stdexcept>

#include "model_impl.hpp"

namespace atp {

double MeanModel::predict_row_raw(const FeatureRow& row) const {
  auto it = key_means.find(row.key);
  return it == key_means.end() ? global_mean : it->second;
}

nlohmann::json MeanModel::params_json() const {
  return {{"key_means", key_means}, {"global_mean", global_mean}};
}

void MeanModel::params_from_json(const nlohmann::json& j) {
  key_means = j.at("key_means").get<std::map<std::string, double>>();
  global_mean = j.at("global_mean").get<double>();
}

std::unique_ptr<Model> train_lag(const Dataset& data) {
  if (data.rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  auto m = std::make_unique<LagModel>();
  m->init_meta("lag", data, 0);
  return m;
}

std::unique_ptr<Model> train_mean(const Dataset& data) {
  if (data.rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  auto m = std::make_unique<MeanModel>();
  m->init_meta("mean", data, 0);
  std::map<std::string, std::pair<double, std::size_t>> acc;
  double total = 0.0;
  for (const auto& row : data.rows) {
    auto& [sum, count] = acc[row.key];
    sum += row.y;
    ++count;
    total += row.y;
  }
  for (const auto& [key, sc] : acc)
    m->key_means[key] = sc.first / static_cast<double>(sc.second);
  m->global_mean = total / static_cast<double>(data.rows.size());
  return m;
}

}  // namespace atp
