#include "pidrl/mlp.hpp"

#include <cmath>
#include <string>

namespace pidrl {

Mlp::Mlp(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw InvalidArgument("mlp needs at least input and output dims");
  for (int d : dims_) {
    if (d <= 0) throw InvalidArgument("mlp layer dims must be positive");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(dims_[l + 1], dims_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(dims_[l + 1]));
  }
}

Mlp Mlp::glorot(std::vector<int> layer_dims, Rng& rng, double output_scale) {
  Mlp net(std::move(layer_dims));
  for (std::size_t l = 0; l < net.weights_.size(); ++l) {
    Eigen::MatrixXd& w = net.weights_[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    const double scale = (l + 1 == net.weights_.size()) ? output_scale : 1.0;
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * u(rng);
  }
  return net;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  Cache cache;
  return forward(input, cache);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input, Cache& cache) const {
  if (input.size() != dims_.front()) {
    throw InvalidArgument("mlp input has " + std::to_string(input.size()) +
                          " entries, expected " + std::to_string(dims_.front()));
  }
  cache.activations.clear();
  cache.activations.reserve(weights_.size() + 1);
  cache.activations.push_back(input);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::VectorXd z = weights_[l] * cache.activations.back() + biases_[l];
    if (l + 1 < weights_.size()) z = z.array().tanh().matrix();
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

void Mlp::backward(const Cache& cache, const Eigen::VectorXd& grad_output,
                   std::span<double> grad) const {
  if (grad.size() != num_params()) throw InvalidArgument("gradient buffer has wrong size");
  if (grad_output.size() != dims_.back()) throw InvalidArgument("output gradient has wrong size");

  // Offsets of each layer's block in the flat layout.
  std::vector<std::size_t> offset(weights_.size());
  std::size_t o = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    offset[l] = o;
    o += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }

  Eigen::VectorXd delta = grad_output;  // dJ/dz for the current layer
  for (std::size_t l = weights_.size(); l-- > 0;) {
    const Eigen::VectorXd& in = cache.activations[l];
    const Eigen::MatrixXd& w = weights_[l];
    double* g = grad.data() + offset[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) g[r * w.cols() + c] += delta[r] * in[c];
    g += w.size();
    for (Eigen::Index r = 0; r < w.rows(); ++r) g[r] += delta[r];

    if (l == 0) break;
    // Hidden activation a = tanh(z), da/dz = 1 - a^2.
    delta = (w.transpose() * delta).array() * (1.0 - in.array().square());
  }
}

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

std::vector<double> Mlp::params() const {
  std::vector<double> flat;
  flat.reserve(num_params());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Eigen::MatrixXd& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) flat.push_back(biases_[l][r]);
  }
  return flat;
}

void Mlp::set_params(std::span<const double> flat) {
  if (flat.size() != num_params()) throw InvalidArgument("parameter vector has wrong size");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l][r] = flat[k++];
  }
}

bool Mlp::all_finite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

}  // namespace pidrl
