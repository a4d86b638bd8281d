#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace coeffinv {

/// Feedforward network with sigmoid hidden layers and a linear scalar
/// output, used as a smooth global representation q(x; W, b) of the PDE
/// coefficient. Value type: evaluation and backprop are const and safe to
/// call concurrently.
class Network {
 public:
  Network() = default;
  Network(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_dim() const { return layer_sizes_.front(); }
  int parameter_count() const;

  double forward(double x, double y = 0.0) const;

  /// Gradient of the scalar output with respect to the flattened parameter
  /// vector, exact via backpropagation.
  Eigen::VectorXd backprop_params(double x, double y = 0.0) const;

  /// Flattening order: per layer, weight matrix row-major, then biases.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& params);

  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  Eigen::MatrixXd& weight(int layer) { return weights_[layer]; }
  Eigen::VectorXd& bias(int layer) { return biases_[layer]; }

  std::uint64_t init_seed = 0;

  void save_json(const std::filesystem::path& path) const;
  static Network load_json(const std::filesystem::path& path);

 private:
  std::vector<int> layer_sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Weights i.i.d. uniform on [0,1) from a splitmix64 stream (drawn layer by
/// layer, each weight matrix row-major), biases zero. The uniform positive
/// weights keep the represented coefficient initially positive.
Network init_network(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Numerically stable logistic function (split positive/negative branches).
double stable_sigmoid(double z);

}  // namespace coeffinv
