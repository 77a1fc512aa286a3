#include "risdet/neural.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "risdet/errors.hpp"

namespace risdet {

Mlp::Mlp(std::vector<std::size_t> layer_dims, OutputHead head, Rng& rng) : dims_(std::move(layer_dims)), head_(head) {
  if (dims_.size() < 2) throw DomainError("Mlp: need at least input and output widths");
  for (std::size_t d : dims_)
    if (d == 0) throw DomainError("Mlp: zero layer width");
  if (head_ == OutputHead::actor && dims_.back() % 2 != 0)
    throw DomainError("Mlp: actor head needs an even output width");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += dims_[l + 1] * dims_[l] + dims_[l + 1];
  }
  params_.setZero(static_cast<Eigen::Index>(total));
  // He initialisation on the weights, zero biases.
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    std::normal_distribution<double> n(0.0, std::sqrt(2.0 / static_cast<double>(dims_[l])));
    const std::size_t nw = dims_[l + 1] * dims_[l];
    for (std::size_t i = 0; i < nw; ++i) params_[static_cast<Eigen::Index>(offsets_[l] + i)] = n(rng);
  }
  version_ = 1;
}

void Mlp::set_params(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) throw ContractViolation("Mlp::set_params: size mismatch");
  if (!p.allFinite()) throw NumericalError("Mlp::set_params: non-finite parameter");
  params_ = p;
  ++version_;
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const {
  return {params_.data() + offset(l), static_cast<Eigen::Index>(dims_[l + 1]), static_cast<Eigen::Index>(dims_[l])};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const {
  return {params_.data() + offset(l) + dims_[l + 1] * dims_[l], static_cast<Eigen::Index>(dims_[l + 1])};
}

void Mlp::apply_head(Eigen::MatrixXd& z) const {
  if (head_ == OutputHead::identity) return;
  const Eigen::Index m = z.rows() / 2;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < m; ++i) z(i, j) = 1.0 / (1.0 + std::exp(-z(i, j)));
    auto logits = z.col(j).tail(m);
    const double mx = logits.maxCoeff();
    logits = (logits.array() - mx).exp().matrix();
    logits /= logits.sum();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, MlpCache* cache) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) throw ContractViolation("Mlp::forward: input width mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < n_layers(); ++l) {
    if (cache) cache->inputs.push_back(a);
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (cache) cache->pre.push_back(z);
    if (l + 1 < n_layers())
      a = z.cwiseMax(0.0);
    else
      a = std::move(z);
  }
  apply_head(a);
  if (cache) {
    cache->output = a;
    cache->version = version_;
  }
  return a;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x), nullptr).col(0);
}

Eigen::MatrixXd Mlp::head_backward(const Eigen::MatrixXd& out, const Eigen::MatrixXd& g) const {
  if (head_ == OutputHead::identity) return g;
  const Eigen::Index m = out.rows() / 2;
  Eigen::MatrixXd dz(out.rows(), out.cols());
  dz.topRows(m) = (g.topRows(m).array() * out.topRows(m).array() * (1.0 - out.topRows(m).array())).matrix();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto p = out.col(j).tail(m);
    const auto gp = g.col(j).tail(m);
    const double dot = p.dot(gp);
    dz.col(j).tail(m) = (p.array() * (gp.array() - dot)).matrix();
  }
  return dz;
}

Eigen::MatrixXd Mlp::backward(const MlpCache& cache, const Eigen::MatrixXd& grad_out,
                              Eigen::VectorXd& param_grad) const {
  if (cache.version != version_ || cache.pre.size() != n_layers())
    throw ContractViolation("Mlp::backward: stale or foreign cache");
  if (grad_out.rows() != cache.output.rows() || grad_out.cols() != cache.output.cols())
    throw ContractViolation("Mlp::backward: gradient shape mismatch");
  if (param_grad.size() == 0) param_grad.setZero(params_.size());
  if (param_grad.size() != params_.size()) throw ContractViolation("Mlp::backward: gradient buffer size");

  Eigen::MatrixXd delta = head_backward(cache.output, grad_out);
  for (std::size_t l = n_layers(); l-- > 0;) {
    if (l + 1 < n_layers()) delta = (cache.pre[l].array() > 0.0).select(delta, 0.0);
    const auto rows = static_cast<Eigen::Index>(dims_[l + 1]);
    const auto cols = static_cast<Eigen::Index>(dims_[l]);
    Eigen::Map<Eigen::MatrixXd> gw(param_grad.data() + offset(l), rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(param_grad.data() + offset(l) + dims_[l + 1] * dims_[l], rows);
    gw.noalias() += delta * cache.inputs[l].transpose();
    gb += delta.rowwise().sum();
    delta = weight(l).transpose() * delta;
  }
  return delta;
}

void Optimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (grad.size() != params.size()) throw ContractViolation("Optimizer::step: shape mismatch");
  ++step_count;
  if (kind == OptimizerKind::plain_sgd) {
    params -= lr * grad;
    return;
  }
  if (m.size() != params.size()) m.setZero(params.size());
  if (v.size() != params.size()) v.setZero(params.size());
  m = beta1 * m + (1.0 - beta1) * grad;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  if (beta2 == 0.0) {
    // No second-moment scaling: momentum SGD, which is w - lr*g at beta1 = 0.
    params -= lr * (m / c1);
    return;
  }
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void Optimizer::step(Mlp& net, const Eigen::VectorXd& grad) {
  Eigen::VectorXd p = net.params();
  step(p, grad);
  net.set_params(p);
}

double clip_global_norm(Eigen::VectorXd& grad, double max_norm) {
  const double n = grad.norm();
  if (n > max_norm && n > 0.0) grad *= max_norm / n;
  return n;
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hexfloat(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("checkpoint: bad number '" + s + "'");
  return v;
}

namespace {

void write_vec(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << hexfloat(v[i]);
  os << '\n';
}

std::string expect_word(std::istream& is, const std::string& want) {
  std::string w;
  if (!(is >> w) || (!want.empty() && w != want))
    throw ConfigError("checkpoint: expected '" + want + "', found '" + w + "'");
  return w;
}

Eigen::VectorXd read_vec(std::istream& is, std::size_t n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  std::string w;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> w)) throw ConfigError("checkpoint: truncated vector");
    v[static_cast<Eigen::Index>(i)] = parse_hexfloat(w);
  }
  return v;
}

std::size_t read_count(std::istream& is) {
  long long n = -1;
  if (!(is >> n) || n < 0) throw ConfigError("checkpoint: bad count");
  return static_cast<std::size_t>(n);
}

}  // namespace

void write_mlp(std::ostream& os, const std::string& name, const Mlp& net, const Optimizer& opt) {
  os << "net " << name << '\n';
  os << "dims " << net.layer_dims().size();
  for (std::size_t d : net.layer_dims()) os << ' ' << d;
  os << '\n';
  os << "head " << (net.head() == OutputHead::actor ? "actor" : "identity") << '\n';
  os << "params " << net.n_params() << '\n';
  write_vec(os, net.params());
  os << "optimizer " << (opt.kind == OptimizerKind::adam ? "adam" : "plain_sgd") << ' ' << hexfloat(opt.lr) << ' '
     << hexfloat(opt.beta1) << ' ' << hexfloat(opt.beta2) << ' ' << hexfloat(opt.eps) << ' ' << opt.step_count << '\n';
  const bool has = opt.m.size() == static_cast<Eigen::Index>(net.n_params());
  os << "moments " << (has ? net.n_params() : 0) << '\n';
  if (has) {
    write_vec(os, opt.m);
    write_vec(os, opt.v.size() == opt.m.size() ? opt.v : Eigen::VectorXd::Zero(opt.m.size()));
  }
}

void read_mlp(std::istream& is, const std::string& name, Mlp& net, Optimizer& opt) {
  expect_word(is, "net");
  expect_word(is, name);
  expect_word(is, "dims");
  const std::size_t k = read_count(is);
  std::vector<std::size_t> dims(k);
  for (auto& d : dims) d = read_count(is);
  expect_word(is, "head");
  const std::string head = expect_word(is, "");
  if (head != "actor" && head != "identity") throw ConfigError("checkpoint: unknown head " + head);
  Rng dummy(0);
  Mlp fresh(dims, head == "actor" ? OutputHead::actor : OutputHead::identity, dummy);
  expect_word(is, "params");
  const std::size_t np = read_count(is);
  if (np != fresh.n_params()) throw ConfigError("checkpoint: parameter count does not match dims");
  fresh.set_params(read_vec(is, np));

  Optimizer o;
  expect_word(is, "optimizer");
  const std::string kind = expect_word(is, "");
  if (kind != "adam" && kind != "plain_sgd") throw ConfigError("checkpoint: unknown optimizer " + kind);
  o.kind = kind == "adam" ? OptimizerKind::adam : OptimizerKind::plain_sgd;
  std::string w;
  is >> w;
  o.lr = parse_hexfloat(w);
  is >> w;
  o.beta1 = parse_hexfloat(w);
  is >> w;
  o.beta2 = parse_hexfloat(w);
  is >> w;
  o.eps = parse_hexfloat(w);
  if (!(is >> o.step_count)) throw ConfigError("checkpoint: bad optimizer step count");
  expect_word(is, "moments");
  const std::size_t nm = read_count(is);
  if (nm != 0) {
    if (nm != np) throw ConfigError("checkpoint: moment size mismatch");
    o.m = read_vec(is, nm);
    o.v = read_vec(is, nm);
  }
  net = std::move(fresh);
  opt = std::move(o);
}

}  // namespace risdet
