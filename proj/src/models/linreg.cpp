#include <stdexcept>

#include "model_impl.hpp"

namespace atp {

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double ridge) {
  if (ridge < 0.0) throw std::invalid_argument("ridge penalty must be >= 0");
  if (x.rows() != y.size()) throw std::invalid_argument("design/target size mismatch");
  const long n = x.rows();
  const long p = x.cols();
  Eigen::MatrixXd aug(n, p + 1);
  aug.col(0).setOnes();
  aug.rightCols(p) = x;
  Eigen::MatrixXd gram = aug.transpose() * aug;
  for (long i = 1; i <= p; ++i) gram(i, i) += ridge;
  if (ridge == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rank() < gram.rows())
      throw std::invalid_argument(
          "normal equations are singular; use a ridge penalty > 0");
  }
  return gram.ldlt().solve(aug.transpose() * y);
}

double LinregModel::predict_row_raw(const FeatureRow& row) const {
  const Eigen::VectorXd x = scaler_.apply(design(row));
  return intercept + beta.dot(x);
}

nlohmann::json LinregModel::params_json() const {
  return {{"intercept", intercept}, {"beta", vector_to_json(beta)}, {"ridge", ridge}};
}

void LinregModel::params_from_json(const nlohmann::json& j) {
  intercept = j.at("intercept").get<double>();
  beta = vector_from_json(j.at("beta"));
  ridge = j.at("ridge").get<double>();
}

std::unique_ptr<Model> train_linreg(const Dataset& data, double ridge) {
  if (data.rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  auto m = std::make_unique<LinregModel>();
  m->init_meta("linreg", data, 0);
  m->ridge = ridge;
  Eigen::MatrixXd x = data.design_matrix();
  m->scaler_ = Scaler::fit(x);
  const Eigen::VectorXd coef = solve_ridge(m->scaler_.apply(x), data.targets(), ridge);
  m->intercept = coef[0];
  m->beta = coef.tail(coef.size() - 1);
  return m;
}

}  // namespace atp
