#include "rrm/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "rrm/io.hpp"

namespace rrm {

namespace {

constexpr char kCheckpointMagic[8] = {'R', 'R', 'M', 'M', 'L', 'P', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

MlpParams shaped_zeros(const std::vector<int>& dims) {
  MlpParams p;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    p.layers.push_back({Eigen::MatrixXd::Zero(dims[l + 1], dims[l]),
                        Eigen::VectorXd::Zero(dims[l + 1])});
  }
  return p;
}

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp needs at least input and output dims");
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("Mlp layer dims must be positive");
  }
}

}  // namespace

std::size_t MlpParams::size() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

void MlpParams::set_zero() {
  for (auto& layer : layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
}

double& MlpParams::at(std::size_t index) {
  for (auto& layer : layers) {
    const auto w = static_cast<std::size_t>(layer.weight.size());
    if (index < w) return layer.weight.data()[index];
    index -= w;
    const auto b = static_cast<std::size_t>(layer.bias.size());
    if (index < b) return layer.bias.data()[index];
    index -= b;
  }
  throw std::out_of_range("MlpParams::at");
}

double MlpParams::at(std::size_t index) const {
  return const_cast<MlpParams*>(this)->at(index);
}

Mlp Mlp::init(std::vector<int> layer_dims, Rng& rng) {
  Mlp net = zeros(std::move(layer_dims));
  for (auto& layer : net.params_.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // row-major fill order so the draw sequence is independent of storage order
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
  }
  return net;
}

Mlp Mlp::zeros(std::vector<int> layer_dims) {
  check_dims(layer_dims);
  Mlp net;
  net.params_ = shaped_zeros(layer_dims);
  net.dims_ = std::move(layer_dims);
  return net;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, ForwardCache* cache) const {
  if (inputs.rows() != input_dim()) {
    throw std::invalid_argument("Mlp::forward: input width does not match layer_dims[0]");
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Eigen::MatrixXd x = inputs;
  const std::size_t last = params_.layers.size() - 1;
  for (std::size_t l = 0; l < params_.layers.size(); ++l) {
    const auto& layer = params_.layers[l];
    Eigen::MatrixXd z = layer.weight * x;
    z.colwise() += layer.bias;
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre_activations.push_back(z);
    }
    x = l == last ? std::move(z) : Eigen::MatrixXd(z.cwiseMax(0.0));
  }
  return x;
}

MlpParams Mlp::backward(const ForwardCache& cache, const Eigen::MatrixXd& output_grad) const {
  if (cache.inputs.size() != params_.layers.size()) {
    throw std::invalid_argument("Mlp::backward: cache does not belong to this network");
  }
  MlpParams grads = shaped_zeros(dims_);
  Eigen::MatrixXd delta = output_grad;  // dL/dz of the current layer
  for (std::size_t l = params_.layers.size(); l-- > 0;) {
    grads.layers[l].weight.noalias() = delta * cache.inputs[l].transpose();
    grads.layers[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd upstream = params_.layers[l].weight.transpose() * delta;
    const Eigen::MatrixXd& z_prev = cache.pre_activations[l - 1];
    delta = (z_prev.array() > 0.0).select(upstream, 0.0);
  }
  return grads;
}

bool Mlp::all_finite() const {
  for (const auto& layer : params_.layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.dims_ != b.dims_) return false;
  for (std::size_t l = 0; l < a.params_.layers.size(); ++l) {
    if (a.params_.layers[l].weight != b.params_.layers[l].weight ||
        a.params_.layers[l].bias != b.params_.layers[l].bias) {
      return false;
    }
  }
  return true;
}

void copy_params(const Mlp& src, Mlp& dst) { dst = src; }

AdamState::AdamState(const Mlp& net, double lr)
    : learning_rate(lr),
      first_moment(shaped_zeros(net.layer_dims())),
      second_moment(shaped_zeros(net.layer_dims())) {}

void adam_step(Mlp& net, const MlpParams& grads, AdamState& state) {
  auto& layers = net.params().layers;
  if (grads.layers.size() != layers.size() || state.first_moment.layers.size() != layers.size()) {
    throw std::invalid_argument("adam_step: parameter shapes do not match");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.size() != grad.size()) {
      throw std::invalid_argument("adam_step: parameter shapes do not match");
    }
    m = state.beta1 * m + (1.0 - state.beta1) * grad;
    v = state.beta2 * v + (1.0 - state.beta2) * grad.cwiseAbs2();
    param.array() -= state.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + state.epsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grads.layers[l].weight, state.first_moment.layers[l].weight,
           state.second_moment.layers[l].weight);
    update(layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias);
  }
}

std::vector<char> serialize_mlp(const Mlp& net) {
  ByteWriter w;
  w.put_bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(net.layer_dims().size()));
  for (int d : net.layer_dims()) w.put(static_cast<std::uint32_t>(d));
  for (const auto& layer : net.params().layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.put(layer.weight(r, c));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) w.put(layer.bias(i));
  }
  return w.take();
}

Mlp deserialize_mlp(const std::vector<char>& bytes) {
  ByteReader r(bytes);
  char magic[sizeof(kCheckpointMagic)];
  r.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  if (r.get<std::uint32_t>() != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version");
  }
  const auto count = r.get<std::uint32_t>();
  if (count < 2 || count > 64) throw FormatError("checkpoint: bad layer count");
  std::vector<int> dims;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto d = r.get<std::uint32_t>();
    if (d == 0 || d > (1u << 24)) throw FormatError("checkpoint: bad layer width");
    dims.push_back(static_cast<int>(d));
  }
  Mlp net = Mlp::zeros(dims);
  for (auto& layer : net.params().layers) {
    if (r.remaining() < sizeof(double) * static_cast<std::size_t>(layer.weight.size() + layer.bias.size())) {
      throw FormatError("truncated file");
    }
    for (Eigen::Index row = 0; row < layer.weight.rows(); ++row) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(row, c) = r.get<double>();
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = r.get<double>();
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  return net;
}

void save_checkpoint(const Mlp& net, const std::string& path) {
  write_file_atomic(path, serialize_mlp(net));
}

Mlp load_checkpoint(const std::string& path) { return deserialize_mlp(read_file(path)); }

}  // namespace rrm
