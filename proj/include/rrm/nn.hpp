#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rrm/channel.hpp"

namespace rrm {

/// One affine layer y = W x + b.
struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Activations recorded by a forward pass, consumed by backward().
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;       // input to each layer (in x batch)
  std::vector<Eigen::MatrixXd> pre_activations;  // W x + b of each layer
};

/// Parameter-shaped container; used for gradients and Adam moments too.
struct MlpParams {
  std::vector<DenseLayer> layers;

  [[nodiscard]] std::size_t size() const;
  void set_zero();
  /// Flat view over all weights then biases, layer by layer.
  [[nodiscard]] double& at(std::size_t index);
  [[nodiscard]] double at(std::size_t index) const;
};

/// Dense ReLU network with identity output layer. Batches are column-major:
/// one sample per column.
class Mlp {
 public:
  Mlp() = default;

  /// He-uniform weights, zero biases.
  static Mlp init(std::vector<int> layer_dims, Rng& rng);

  /// All-zero parameters.
  static Mlp zeros(std::vector<int> layer_dims);

  [[nodiscard]] const std::vector<int>& layer_dims() const { return dims_; }
  [[nodiscard]] int input_dim() const { return dims_.front(); }
  [[nodiscard]] int output_dim() const { return dims_.back(); }

  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs,
                                        ForwardCache* cache = nullptr) const;

  /// Reverse-mode gradients of a scalar loss given dLoss/dOutput.
  [[nodiscard]] MlpParams backward(const ForwardCache& cache,
                                   const Eigen::MatrixXd& output_grad) const;

  [[nodiscard]] MlpParams& params() { return params_; }
  [[nodiscard]] const MlpParams& params() const { return params_; }

  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<int> dims_;
  MlpParams params_;
};

/// Target-network synchronisation: dst becomes a deep copy of src.
void copy_params(const Mlp& src, Mlp& dst);

struct AdamState {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  MlpParams first_moment;
  MlpParams second_moment;

  AdamState() = default;
  AdamState(const Mlp& net, double learning_rate);
};

/// Bias-corrected Adam update of every parameter.
void adam_step(Mlp& net, const MlpParams& grads, AdamState& state);

/// Binary checkpoint: "RRMMLP01", u32 version, u32 layer count, u32 dims,
/// then per layer the row-major weight and the bias as little-endian f64.
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);

std::vector<char> serialize_mlp(const Mlp& net);
Mlp deserialize_mlp(const std::vector<char>& bytes);

}  // namespace rrm
