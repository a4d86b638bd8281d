#include "coeffinv/net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "coeffinv/rng.hpp"

namespace coeffinv {

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Network::Network(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2) throw std::invalid_argument("Network: need at least two layers");
  for (int s : layer_sizes_) {
    if (s < 1) throw std::invalid_argument("Network: layer sizes must be positive");
  }
  if (layer_sizes_.back() != 1) throw std::invalid_argument("Network: output size must be 1");
  if (layer_sizes_.front() != 1 && layer_sizes_.front() != 2) {
    throw std::invalid_argument("Network: input dimension must be 1 or 2");
  }
  const std::size_t n_layers = layer_sizes_.size() - 1;
  weights_.resize(n_layers);
  biases_.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    weights_[l] = Eigen::MatrixXd::Zero(layer_sizes_[l + 1], layer_sizes_[l]);
    biases_[l] = Eigen::VectorXd::Zero(layer_sizes_[l + 1]);
  }
}

int Network::parameter_count() const {
  int count = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    count += layer_sizes_[l + 1] * layer_sizes_[l] + layer_sizes_[l + 1];
  }
  return count;
}

double Network::forward(double x, double y) const {
  Eigen::VectorXd a(input_dim());
  a[0] = x;
  if (input_dim() == 2) a[1] = y;
  const std::size_t last = weights_.size() - 1;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::VectorXd z = weights_[l] * a + biases_[l];
    if (l == last) return z[0];  // linear output layer
    a = z.unaryExpr([](double v) { return stable_sigmoid(v); });
  }
  return a[0];  // unreachable
}

Eigen::VectorXd Network::backprop_params(double x, double y) const {
  const std::size_t n_layers = weights_.size();
  std::vector<Eigen::VectorXd> activations(n_layers + 1);
  activations[0].resize(input_dim());
  activations[0][0] = x;
  if (input_dim() == 2) activations[0][1] = y;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::VectorXd z = weights_[l] * activations[l] + biases_[l];
    activations[l + 1] = (l == n_layers - 1)
                             ? z
                             : z.unaryExpr([](double v) { return stable_sigmoid(v); });
  }

  Eigen::VectorXd grad(parameter_count());
  // delta for the linear scalar output is 1
  Eigen::VectorXd delta = Eigen::VectorXd::Ones(1);
  std::size_t offset = grad.size();
  for (std::size_t l = n_layers; l-- > 0;) {
    const Eigen::VectorXd& input = activations[l];
    const int rows = static_cast<int>(weights_[l].rows());
    const int cols = static_cast<int>(weights_[l].cols());
    offset -= static_cast<std::size_t>(rows) * cols + rows;
    std::size_t k = offset;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) grad[k++] = delta[i] * input[j];
    }
    for (int i = 0; i < rows; ++i) grad[k++] = delta[i];
    if (l > 0) {
      // sigma'(z) = a (1 - a) in terms of the stored hidden activation
      const Eigen::VectorXd s = activations[l];
      delta = (weights_[l].transpose() * delta).cwiseProduct(
          s.cwiseProduct(Eigen::VectorXd::Ones(s.size()) - s));
    }
  }
  return grad;
}

Eigen::VectorXd Network::flatten() const {
  Eigen::VectorXd params(parameter_count());
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (int i = 0; i < weights_[l].rows(); ++i) {
      for (int j = 0; j < weights_[l].cols(); ++j) params[k++] = weights_[l](i, j);
    }
    for (int i = 0; i < biases_[l].size(); ++i) params[k++] = biases_[l][i];
  }
  return params;
}

void Network::unflatten(const Eigen::VectorXd& params) {
  if (params.size() != parameter_count()) {
    throw std::invalid_argument("Network::unflatten: parameter count mismatch");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (int i = 0; i < weights_[l].rows(); ++i) {
      for (int j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = params[k++];
    }
    for (int i = 0; i < biases_[l].size(); ++i) biases_[l][i] = params[k++];
  }
}

void Network::save_json(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["layer_sizes"] = layer_sizes_;
  j["seed"] = init_seed;
  nlohmann::json jw = nlohmann::json::array();
  nlohmann::json jb = nlohmann::json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(weights_[l].size()));
    for (int i = 0; i < weights_[l].rows(); ++i) {
      for (int j2 = 0; j2 < weights_[l].cols(); ++j2) w.push_back(weights_[l](i, j2));
    }
    jw.push_back(w);
    jb.push_back(std::vector<double>(biases_[l].data(), biases_[l].data() + biases_[l].size()));
  }
  j["weights"] = jw;  // row-major per layer
  j["biases"] = jb;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

Network Network::load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Network::load_json: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  Network net(j.at("layer_sizes").get<std::vector<int>>());
  net.init_seed = j.value("seed", std::uint64_t{0});
  const auto& jw = j.at("weights");
  const auto& jb = j.at("biases");
  if (jw.size() != net.weights_.size() || jb.size() != net.biases_.size()) {
    throw std::runtime_error("Network::load_json: layer count mismatch");
  }
  for (std::size_t l = 0; l < net.weights_.size(); ++l) {
    const auto w = jw[l].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != net.weights_[l].size()) {
      throw std::runtime_error("Network::load_json: weight size mismatch");
    }
    std::size_t k = 0;
    for (int i = 0; i < net.weights_[l].rows(); ++i) {
      for (int j2 = 0; j2 < net.weights_[l].cols(); ++j2) net.weights_[l](i, j2) = w[k++];
    }
    const auto b = jb[l].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(b.size()) != net.biases_[l].size()) {
      throw std::runtime_error("Network::load_json: bias size mismatch");
    }
    for (std::size_t i = 0; i < b.size(); ++i) net.biases_[l][static_cast<Eigen::Index>(i)] = b[i];
  }
  return net;
}

Network init_network(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  Network net(layer_sizes);
  SplitMix64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    auto& W = net.weight(static_cast<int>(l));
    for (int i = 0; i < W.rows(); ++i) {
      for (int j = 0; j < W.cols(); ++j) W(i, j) = rng.next_double();
    }
    // biases stay zero
  }
  net.init_seed = seed;
  return net;
}

}  // namespace coeffinv
