#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "risdet/geometry_channel.hpp"

namespace risdet {

/// Output transform of the last layer.
///   identity: raw affine output (Q-values).
///   actor:    first `n_discrete` outputs squashed by a logistic sigmoid
///             (continuous parameters), remaining `n_discrete` through a
///             softmax (discrete-action probabilities).
enum class OutputHead { identity, actor };

/// Activations kept by forward() for backward(). Columns are samples.
struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;  // input of each layer
  std::vector<Eigen::MatrixXd> pre;     // affine output of each layer
  Eigen::MatrixXd output;
  std::size_t version = 0;              // parameter version the cache was built with
};

/// Fully connected network with ReLU hidden layers. Parameters live in one
/// flat vector: per layer, the weight matrix (column-major, out x in)
/// followed by the bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> layer_dims, OutputHead head, Rng& rng);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  OutputHead head() const { return head_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t n_layers() const { return dims_.size() - 1; }
  std::size_t n_params() const { return static_cast<std::size_t>(params_.size()); }

  const Eigen::VectorXd& params() const { return params_; }
  /// Replace all parameters (bumps the version, invalidating caches).
  void set_params(const Eigen::VectorXd& p);
  std::size_t version() const { return version_; }

  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, MlpCache* cache = nullptr) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Gradient of a loss whose derivative w.r.t. the (post-head) outputs is
  /// `grad_out`. Parameter gradients are added into `param_grad` (resized
  /// and zeroed when empty); the input gradient is returned.
  Eigen::MatrixXd backward(const MlpCache& cache, const Eigen::MatrixXd& grad_out,
                           Eigen::VectorXd& param_grad) const;

 private:
  std::size_t offset(std::size_t layer) const { return offsets_[layer]; }
  void apply_head(Eigen::MatrixXd& z) const;
  Eigen::MatrixXd head_backward(const Eigen::MatrixXd& out, const Eigen::MatrixXd& grad_out) const;

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  OutputHead head_ = OutputHead::identity;
  Eigen::VectorXd params_;
  std::size_t version_ = 0;
};

enum class OptimizerKind { adam, plain_sgd };

/// Adaptive-moment optimiser. With beta1 = beta2 = 0 the update collapses
/// to w - lr * g, as does kind = plain_sgd.
struct Optimizer {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step_count = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  void step(Mlp& net, const Eigen::VectorXd& grad);
};

/// Scales `grad` so its Euclidean norm is at most max_norm; returns the
/// norm before clipping.
double clip_global_norm(Eigen::VectorXd& grad, double max_norm);

// Text checkpoints. Every number is a C99 hex float so values survive a
// round trip bit-exactly. Layout:
//   net <name>
//   dims <k> d0 .. dk-1
//   head identity|actor
//   params <count> p...
//   optimizer <kind> <lr> <beta1> <beta2> <eps> <steps>
//   moments <count> m... v...      (count 0 when unused)
void write_mlp(std::ostream& os, const std::string& name, const Mlp& net, const Optimizer& opt);
void read_mlp(std::istream& is, const std::string& name, Mlp& net, Optimizer& opt);

std::string hexfloat(double v);
double parse_hexfloat(const std::string& s);

}  // namespace risdet
