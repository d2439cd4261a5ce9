#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "atp/core/rng.hpp"
#include "model_impl.hpp"

namespace atp {

void Adam::update(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != grad.size())
    throw std::invalid_argument("optimizer parameter/gradient size mismatch");
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    t = 0;
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double mc = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double vc = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= step * (m.array() / mc) / ((v.array() / vc).sqrt() + eps);
}

// ---------------------------------------------------------------------------

MlpNet MlpNet::init(int input_dim, const std::vector<int>& hidden, double output_bias,
                    std::mt19937_64& rng) {
  if (input_dim <= 0) throw std::invalid_argument("input dimension must be > 0");
  for (int h : hidden)
    if (h <= 0) throw std::invalid_argument("hidden layer widths must be > 0");

  MlpNet net;
  std::vector<int> widths;
  widths.push_back(input_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);

  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    Eigen::MatrixXd w(in, out);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(out);
    if (l + 2 < widths.size()) {
      std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(in)));
      for (long r = 0; r < w.rows(); ++r)
        for (long c = 0; c < w.cols(); ++c) w(r, c) = he(rng);
    } else {
      w.setZero();
      b[0] = output_bias;
    }
    net.w.push_back(std::move(w));
    net.b.push_back(std::move(b));
  }
  return net;
}

double MlpNet::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (w.empty()) throw std::logic_error("prediction on an uninitialized network");
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < w.size(); ++l) {
    Eigen::VectorXd z = w[l].transpose() * a + b[l];
    a = l + 1 < w.size() ? z.cwiseMax(0.0).eval() : z;
  }
  return a[0];
}

long MlpNet::n_params() const {
  long n = 0;
  for (std::size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
  return n;
}

Eigen::VectorXd MlpNet::flatten() const {
  Eigen::VectorXd flat(n_params());
  long i = 0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    for (long r = 0; r < w[l].rows(); ++r)
      for (long c = 0; c < w[l].cols(); ++c) flat[i++] = w[l](r, c);
    for (long k = 0; k < b[l].size(); ++k) flat[i++] = b[l][k];
  }
  return flat;
}

void MlpNet::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != n_params())
    throw std::invalid_argument("flat parameter vector has the wrong length");
  long i = 0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    for (long r = 0; r < w[l].rows(); ++r)
      for (long c = 0; c < w[l].cols(); ++c) w[l](r, c) = flat[i++];
    for (long k = 0; k < b[l].size(); ++k) b[l][k] = flat[i++];
  }
}

double mlp_loss_and_grad(const MlpNet& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         Eigen::VectorXd* grad) {
  const long n = x.rows();
  if (n == 0) throw std::invalid_argument("loss over zero rows is undefined");
  if (n != y.size()) throw std::invalid_argument("feature/target row count mismatch");
  const std::size_t layers = net.w.size();

  std::vector<Eigen::MatrixXd> a(layers + 1);
  std::vector<Eigen::MatrixXd> z(layers);
  a[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    z[l] = (a[l] * net.w[l]).rowwise() + net.b[l].transpose();
    a[l + 1] = l + 1 < layers ? z[l].cwiseMax(0.0).eval() : z[l];
  }
  const Eigen::VectorXd res = a[layers].col(0) - y;
  const double loss = res.squaredNorm() / static_cast<double>(n);
  if (grad == nullptr) return loss;

  MlpNet g;
  g.w.resize(layers);
  g.b.resize(layers);
  Eigen::MatrixXd delta = res * (2.0 / static_cast<double>(n));
  for (std::size_t l = layers; l-- > 0;) {
    g.w[l] = a[l].transpose() * delta;
    g.b[l] = delta.colwise().sum().transpose();
    if (l > 0)
      delta = (delta * net.w[l].transpose())
                  .cwiseProduct((z[l - 1].array() > 0.0).cast<double>().matrix());
  }
  *grad = g.flatten();
  return loss;
}

MlpNet fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpParams& params,
               std::uint64_t seed) {
  if (x.rows() == 0) throw std::invalid_argument("cannot fit a network on an empty matrix");
  if (x.rows() != y.size()) throw std::invalid_argument("feature/target row count mismatch");
  if (params.batch <= 0) throw std::invalid_argument("batch size must be > 0");
  if (params.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (params.step <= 0.0) throw std::invalid_argument("step size must be > 0");

  std::mt19937_64 init_rng(derive_seed(seed, 0));
  MlpNet net = MlpNet::init(static_cast<int>(x.cols()), params.hidden, y.mean(), init_rng);

  Eigen::VectorXd flat = net.flatten();
  Eigen::VectorXd grad(flat.size());
  Adam opt;
  opt.step = params.step;

  std::vector<int> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(derive_seed(seed, 1));

  const long n = x.rows();
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (long start = 0; start < n; start += params.batch) {
      const long size = std::min<long>(params.batch, n - start);
      Eigen::MatrixXd bx(size, x.cols());
      Eigen::VectorXd by(size);
      for (long i = 0; i < size; ++i) {
        bx.row(i) = x.row(order[static_cast<std::size_t>(start + i)]);
        by[i] = y[order[static_cast<std::size_t>(start + i)]];
      }
      net.unflatten(flat);
      const double loss = mlp_loss_and_grad(net, bx, by, &grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("training diverged to a non-finite loss; lower the step size");
      opt.update(flat, grad);
    }
  }
  net.unflatten(flat);
  return net;
}

// ---------------------------------------------------------------------------

double MlpModel::predict_row_raw(const FeatureRow& row) const {
  return net.predict(scaler_.apply(design(row)));
}

nlohmann::json MlpModel::hyperparams_json() const {
  return {{"hidden", params.hidden},
          {"epochs", params.epochs},
          {"batch", params.batch},
          {"step", params.step}};
}

void MlpModel::hyperparams_from_json(const nlohmann::json& j) {
  params.hidden = j.at("hidden").get<std::vector<int>>();
  params.epochs = j.at("epochs").get<int>();
  params.batch = j.at("batch").get<int>();
  params.step = j.at("step").get<double>();
}

nlohmann::json MlpModel::params_json() const {
  nlohmann::json w = nlohmann::json::array();
  nlohmann::json b = nlohmann::json::array();
  for (const auto& m : net.w) w.push_back(matrix_to_json(m));
  for (const auto& v : net.b) b.push_back(vector_to_json(v));
  return {{"w", std::move(w)}, {"b", std::move(b)}};
}

void MlpModel::params_from_json(const nlohmann::json& j) {
  net.w.clear();
  net.b.clear();
  for (const auto& m : j.at("w")) net.w.push_back(matrix_from_json(m));
  for (const auto& v : j.at("b")) net.b.push_back(vector_from_json(v));
  if (net.w.size() != net.b.size())
    throw std::runtime_error("network payload has mismatched weight/bias layer counts");
}

std::unique_ptr<Model> train_mlp(const Dataset& data, const MlpParams& params,
                                 std::uint64_t seed) {
  if (data.rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  auto m = std::make_unique<MlpModel>();
  m->init_meta("mlp", data, seed);
  m->params = params;
  const Eigen::MatrixXd x = data.design_matrix();
  m->scaler_ = Scaler::fit(x);
  m->net = fit_mlp(m->scaler_.apply(x), data.targets(), params, seed);
  return m;
}

}  // namespace atp
