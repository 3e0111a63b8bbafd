#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pidrl/plant.hpp"

namespace pidrl {

/// Fully connected network: tanh on hidden layers, linear output.
///
/// Flat parameter layout, layer by layer: the weight matrix row-major
/// (out x in), then the bias vector. `backward` writes gradients in the same
/// layout, so optimisers and finite-difference checks can treat the network
/// as one vector.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::VectorXd> activations;  // [input, hidden..., output]
  };

  Mlp() = default;
  /// All weights and biases zero.
  explicit Mlp(std::vector<int> layer_dims);

  /// Glorot-uniform weights, zero biases, last layer scaled by `output_scale`.
  static Mlp glorot(std::vector<int> layer_dims, Rng& rng, double output_scale = 1.0);

  [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& input, Cache& cache) const;

  /// Adds d(grad_output . output)/d(params) into `grad`.
  void backward(const Cache& cache, const Eigen::VectorXd& grad_output,
                std::span<double> grad) const;

  [[nodiscard]] const std::vector<int>& layer_dims() const { return dims_; }
  [[nodiscard]] int input_dim() const { return dims_.front(); }
  [[nodiscard]] int output_dim() const { return dims_.back(); }
  [[nodiscard]] std::size_t num_layers() const { return weights_.size(); }
  [[nodiscard]] std::size_t num_params() const;

  [[nodiscard]] std::vector<double> params() const;
  void set_params(std::span<const double> flat);
  [[nodiscard]] bool all_finite() const;

  [[nodiscard]] const Eigen::MatrixXd& weight(std::size_t layer) const { return weights_[layer]; }
  [[nodiscard]] const Eigen::VectorXd& bias(std::size_t layer) const { return biases_[layer]; }
  Eigen::MatrixXd& weight(std::size_t layer) { return weights_[layer]; }
  Eigen::VectorXd& bias(std::size_t layer) { return biases_[layer]; }

 private:
  std::vector<int> dims_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

}  // namespace pidrl
