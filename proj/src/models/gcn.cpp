#include <cmath>
#include <stdexcept>

#include "atp/core/rng.hpp"
#include "model_impl.hpp"

namespace atp {

GcnNet GcnNet::init(int input_dim, int hidden, double output_bias, std::mt19937_64& rng) {
  if (input_dim <= 0) throw std::invalid_argument("input dimension must be > 0");
  if (hidden <= 0) throw std::invalid_argument("hidden width must be > 0");
  GcnNet net;
  net.w0.resize(input_dim, hidden);
  std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(input_dim)));
  for (long r = 0; r < net.w0.rows(); ++r)
    for (long c = 0; c < net.w0.cols(); ++c) net.w0(r, c) = he(rng);
  net.b0 = Eigen::VectorXd::Zero(hidden);
  net.w1 = Eigen::VectorXd::Zero(hidden);
  net.b1 = output_bias;
  return net;
}

Eigen::VectorXd GcnNet::forward(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd z = ((a_hat * x) * w0).rowwise() + b0.transpose();
  const Eigen::MatrixXd h = z.cwiseMax(0.0);
  Eigen::VectorXd y = a_hat * (h * w1);
  y.array() += b1;
  return y;
}

long GcnNet::n_params() const { return w0.size() + b0.size() + w1.size() + 1; }

Eigen::VectorXd GcnNet::flatten() const {
  Eigen::VectorXd flat(n_params());
  long i = 0;
  for (long r = 0; r < w0.rows(); ++r)
    for (long c = 0; c < w0.cols(); ++c) flat[i++] = w0(r, c);
  for (long k = 0; k < b0.size(); ++k) flat[i++] = b0[k];
  for (long k = 0; k < w1.size(); ++k) flat[i++] = w1[k];
  flat[i] = b1;
  return flat;
}

void GcnNet::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != n_params())
    throw std::invalid_argument("flat parameter vector has the wrong length");
  long i = 0;
  for (long r = 0; r < w0.rows(); ++r)
    for (long c = 0; c < w0.cols(); ++c) w0(r, c) = flat[i++];
  for (long k = 0; k < b0.size(); ++k) b0[k] = flat[i++];
  for (long k = 0; k < w1.size(); ++k) w1[k] = flat[i++];
  b1 = flat[i];
}

namespace {

long masked_count(const std::vector<Snapshot>& snapshots) {
  long total = 0;
  for (const auto& s : snapshots)
    for (bool m : s.mask)
      if (m) ++total;
  return total;
}

// Shared forward/backward; `ax` holds the precomputed A_hat * x of each
// snapshot so the training loop pays the propagation once.
double loss_and_grad_cached(const GcnNet& net, const Eigen::MatrixXd& a_hat,
                            const std::vector<Snapshot>& snapshots,
                            const std::vector<Eigen::MatrixXd>& ax, long masked_total,
                            Eigen::VectorXd* grad) {
  if (masked_total == 0) throw std::invalid_argument("loss over zero masked nodes is undefined");

  Eigen::MatrixXd dw0;
  Eigen::VectorXd db0, dw1;
  double db1 = 0.0;
  if (grad != nullptr) {
    dw0 = Eigen::MatrixXd::Zero(net.w0.rows(), net.w0.cols());
    db0 = Eigen::VectorXd::Zero(net.b0.size());
    dw1 = Eigen::VectorXd::Zero(net.w1.size());
  }

  double sse = 0.0;
  const double scale = 2.0 / static_cast<double>(masked_total);
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const Snapshot& s = snapshots[i];
    const Eigen::MatrixXd z = (ax[i] * net.w0).rowwise() + net.b0.transpose();
    const Eigen::MatrixXd h = z.cwiseMax(0.0);
    Eigen::VectorXd yhat = a_hat * (h * net.w1);
    yhat.array() += net.b1;

    Eigen::VectorXd r = Eigen::VectorXd::Zero(yhat.size());
    for (std::size_t k = 0; k < s.mask.size(); ++k) {
      if (!s.mask[k]) continue;
      const double res = yhat[static_cast<long>(k)] - s.y[static_cast<long>(k)];
      sse += res * res;
      r[static_cast<long>(k)] = scale * res;
    }
    if (grad == nullptr) continue;

    db1 += r.sum();
    const Eigen::VectorXd ar = a_hat * r;
    dw1 += h.transpose() * ar;
    const Eigen::MatrixXd dz =
        (ar * net.w1.transpose()).cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    dw0 += ax[i].transpose() * dz;
    db0 += dz.colwise().sum().transpose();
  }

  if (grad != nullptr) {
    GcnNet g;
    g.w0 = std::move(dw0);
    g.b0 = std::move(db0);
    g.w1 = std::move(dw1);
    g.b1 = db1;
    *grad = g.flatten();
  }
  return sse / static_cast<double>(masked_total);
}

std::vector<Eigen::MatrixXd> propagate_inputs(const Eigen::MatrixXd& a_hat,
                                              const std::vector<Snapshot>& snapshots) {
  const long n = a_hat.rows();
  if (a_hat.cols() != n) throw std::invalid_argument("propagation matrix must be square");
  std::vector<Eigen::MatrixXd> ax;
  ax.reserve(snapshots.size());
  for (const auto& s : snapshots) {
    if (s.x.rows() != n || s.y.size() != n || static_cast<long>(s.mask.size()) != n)
      throw std::invalid_argument("snapshot size does not match the graph");
    ax.push_back(a_hat * s.x);
  }
  return ax;
}

}  // namespace

double gcn_loss_and_grad(const GcnNet& net, const Eigen::MatrixXd& a_hat,
                         const std::vector<Snapshot>& snapshots, Eigen::VectorXd* grad) {
  return loss_and_grad_cached(net, a_hat, snapshots, propagate_inputs(a_hat, snapshots),
                              masked_count(snapshots), grad);
}

GcnNet fit_gcn(const Eigen::MatrixXd& a_hat, const std::vector<Snapshot>& snapshots,
               const GcnParams& params, std::uint64_t seed) {
  if (snapshots.empty()) throw std::invalid_argument("cannot fit on zero snapshots");
  if (params.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (params.step <= 0.0) throw std::invalid_argument("step size must be > 0");

  const std::vector<Eigen::MatrixXd> ax = propagate_inputs(a_hat, snapshots);
  const long masked_total = masked_count(snapshots);
  if (masked_total == 0) throw std::invalid_argument("no masked nodes to fit on");
  double target_sum = 0.0;
  for (const auto& s : snapshots)
    for (std::size_t k = 0; k < s.mask.size(); ++k)
      if (s.mask[k]) target_sum += s.y[static_cast<long>(k)];

  std::mt19937_64 rng(derive_seed(seed, 0));
  GcnNet net = GcnNet::init(static_cast<int>(snapshots.front().x.cols()), params.hidden,
                            target_sum / static_cast<double>(masked_total), rng);

  Eigen::VectorXd flat = net.flatten();
  Eigen::VectorXd grad(flat.size());
  Adam opt;
  opt.step = params.step;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    net.unflatten(flat);
    const double loss = loss_and_grad_cached(net, a_hat, snapshots, ax, masked_total, &grad);
    if (!std::isfinite(loss))
      throw std::runtime_error("training diverged to a non-finite loss; lower the step size");
    opt.update(flat, grad);
  }
  net.unflatten(flat);
  return net;
}

// ---------------------------------------------------------------------------

double GcnModel::predict_row_raw(const FeatureRow&) const {
  throw std::logic_error(
      "graph models predict whole datasets or contexts; a single row has no neighborhood");
}

std::vector<double> GcnModel::predict_rows_raw(const Dataset& data) const {
  Dataset schema;
  schema.target = target_;
  schema.scope = scope_;
  schema.vehicle_vocab = vehicle_vocab_;
  schema.key_vocab = key_vocab_;
  schema.rows = data.rows;
  const std::vector<Snapshot> snaps = build_snapshots(schema, graph);
  std::vector<double> out(data.rows.size(), 0.0);
  for (const auto& s : snaps) {
    const Eigen::VectorXd pred = net.forward(graph.normalized, scaler_.apply(s.x));
    for (std::size_t k = 0; k < s.mask.size(); ++k)
      if (s.mask[k]) out[s.row_index] = pred[static_cast<long>(k)];
  }
  return out;
}

std::vector<double> GcnModel::forward_context(const RowContext& ctx) const {
  const long n = static_cast<long>(graph.nodes.size());
  const long d = static_cast<long>(4 + 3 + vehicle_vocab_.size() + key_vocab_.size() + 4);
  Eigen::MatrixXd x(n, d);
  for (long k = 0; k < n; ++k)
    x.row(k) = design(context_row(ctx, graph.nodes[static_cast<std::size_t>(k)])).transpose();
  const Eigen::VectorXd pred = net.forward(graph.normalized, scaler_.apply(x));
  return std::vector<double>(pred.data(), pred.data() + pred.size());
}

std::vector<double> GcnModel::predict_context_raw(const RowContext& ctx,
                                                  const std::vector<std::string>& keys) const {
  const std::vector<double> all = forward_context(ctx);
  std::vector<double> out;
  out.reserve(keys.size());
  for (const auto& key : keys) out.push_back(all[static_cast<std::size_t>(graph.index_of(key))]);
  return out;
}

nlohmann::json GcnModel::hyperparams_json() const {
  return {{"hidden", params.hidden}, {"epochs", params.epochs}, {"step", params.step}};
}

void GcnModel::hyperparams_from_json(const nlohmann::json& j) {
  params.hidden = j.at("hidden").get<int>();
  params.epochs = j.at("epochs").get<int>();
  params.step = j.at("step").get<double>();
}

nlohmann::json GcnModel::params_json() const {
  return {{"w0", matrix_to_json(net.w0)},   {"b0", vector_to_json(net.b0)},
          {"w1", vector_to_json(net.w1)},   {"b1", net.b1},
          {"nodes", graph.nodes},           {"adjacency", matrix_to_json(graph.adjacency)}};
}

void GcnModel::params_from_json(const nlohmann::json& j) {
  net.w0 = matrix_from_json(j.at("w0"));
  net.b0 = vector_from_json(j.at("b0"));
  net.w1 = vector_from_json(j.at("w1"));
  net.b1 = j.at("b1").get<double>();
  graph.nodes = j.at("nodes").get<std::vector<std::string>>();
  graph.adjacency = matrix_from_json(j.at("adjacency"));
  graph.normalized = normalize_adjacency(graph.adjacency);
  graph.node_index.clear();
  for (std::size_t i = 0; i < graph.nodes.size(); ++i)
    graph.node_index[graph.nodes[i]] = static_cast<int>(i);
}

std::unique_ptr<Model> train_gcn(const Dataset& data, const GraphSpec& graph,
                                 const GcnParams& params, std::uint64_t seed) {
  if (data.rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  auto m = std::make_unique<GcnModel>();
  m->init_meta("gcn", data, seed);
  m->params = params;
  m->graph = graph;
  m->scaler_ = Scaler::fit(data.design_matrix());
  std::vector<Snapshot> snaps = build_snapshots(data, graph);
  for (auto& s : snaps) s.x = m->scaler_.apply(s.x);
  m->net = fit_gcn(graph.normalized, snaps, params, seed);
  return m;
}

}  // namespace atp
