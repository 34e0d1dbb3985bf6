#pragma once

// Fully-connected Q-networks, RMSProp, replay memory and DQN/DDQN targets.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "risd2d/random.hpp"

namespace risd2d {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Gradients {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  void scale(double c) {
    for (auto& w : weights) w *= c;
    for (auto& b : biases) b *= c;
  }
  double max_abs() const {
    double m = 0.0;
    for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
    for (const auto& b : biases) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
  }
};

// One selected output of one batch column and its regression target.
struct OutputTarget {
  int sample = 0;
  int output = 0;
  double target = 0.0;
  double weight = 1.0;
};

// ReLU hidden layers, identity output. Weights are stored out x in.
class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
    for (int w : widths_) {
      if (w <= 0) throw std::invalid_argument("Mlp: widths must be positive");
    }
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      weights_.push_back(Mat::Zero(widths_[l + 1], widths_[l]));
      biases_.push_back(Vec::Zero(widths_[l + 1]));
    }
  }

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  template <class Urbg>
  void glorot_init(Urbg& rng) {
    for (auto& w : weights_) {
      const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = uniform_real(rng, -a, a);
      }
    }
    for (auto& b : biases_) b.setZero();
  }

  const std::vector<int>& widths() const { return widths_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  std::size_t num_layers() const { return weights_.size(); }
  std::vector<Mat>& weights() { return weights_; }
  const std::vector<Mat>& weights() const { return weights_; }
  std::vector<Vec>& biases() { return biases_; }
  const std::vector<Vec>& biases() const { return biases_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  Vec forward(const Vec& x) const {
    check_input(x.size());
    Vec a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Vec z = weights_[l] * a + biases_[l];
      a = (l + 1 < weights_.size()) ? Vec(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  Vec forward(const std::vector<double>& x) const {
    return forward(Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())).eval());
  }

  /// Columns are samples.
  Mat forward_batch(const Mat& x) const {
    Mat a = last_hidden(x);
    return (weights_.back() * a).colwise() + biases_.back();
  }

  /// Activations feeding the output layer (the input itself for one layer).
  Mat last_hidden(const Mat& x) const {
    check_input(x.rows());
    Mat a = x;
    for (std::size_t l = 0; l + 1 < weights_.size(); ++l) {
      a = ((weights_[l] * a).colwise() + biases_[l]).cwiseMax(0.0);
    }
    return a;
  }

  double output_at(const Mat& hidden, int sample, int output) const {
    return weights_.back().row(output).dot(hidden.col(sample)) + biases_.back()(output);
  }

  Gradients zero_gradients() const {
    Gradients g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.weights.push_back(Mat::Zero(weights_[l].rows(), weights_[l].cols()));
      g.biases.push_back(Vec::Zero(biases_[l].size()));
    }
    return g;
  }

  /// Gradient of sum_j weight_j (target_j - q(sample_j, output_j))^2 / batch
  /// with respect to every parameter. Only the listed outputs contribute, so
  /// the output layer is handled row by row. Returns the loss.
  double loss_gradients(const Mat& x, const std::vector<OutputTarget>& targets, Gradients& g) const {
    check_input(x.rows());
    const std::size_t L = weights_.size();
    const auto batch = static_cast<double>(x.cols());
    std::vector<Mat> acts;  // acts[l] is the input to layer l
    acts.reserve(L);
    acts.push_back(x);
    for (std::size_t l = 0; l + 1 < L; ++l) {
      acts.push_back(((weights_[l] * acts.back()).colwise() + biases_[l]).cwiseMax(0.0));
    }
    g = zero_gradients();
    const Mat& h = acts.back();
    Mat delta = Mat::Zero(h.rows(), h.cols());
    double loss = 0.0;
    for (const auto& t : targets) {
      if (t.output < 0 || t.output >= output_width() || t.sample < 0 || t.sample >= x.cols()) {
        throw std::out_of_range("Mlp::loss_gradients: target index");
      }
      const double q = output_at(h, t.sample, t.output);
      const double r = t.target - q;
      loss += t.weight * r * r;
      const double dz = -2.0 * t.weight * r / batch;
      g.weights[L - 1].row(t.output) += dz * h.col(t.sample).transpose();
      g.biases[L - 1](t.output) += dz;
      delta.col(t.sample) += dz * weights_[L - 1].row(t.output).transpose();
    }
    for (std::size_t l = L - 1; l-- > 0;) {
      // delta holds dLoss/d(acts[l+1]); apply the ReLU mask.
      delta = delta.cwiseProduct((acts[l + 1].array() > 0.0).cast<double>().matrix());
      g.weights[l] = delta * acts[l].transpose();
      g.biases[l] = delta.rowwise().sum();
      if (l > 0) delta = weights_[l].transpose() * delta;
    }
    return loss / batch;
  }

  /// Gradients of (target - q(state, action))^2 for a single sample.
  Gradients backward(const Vec& state, int action, double target) const {
    if (action < 0 || action >= output_width()) throw std::out_of_range("Mlp::backward: action");
    Gradients g;
    Mat x = state;
    loss_gradients(x, {{0, action, target, 1.0}}, g);
    return g;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.widths_ != b.widths_) return false;
    for (std::size_t l = 0; l < a.weights_.size(); ++l) {
      if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
    }
    return true;
  }

 private:
  void check_input(Eigen::Index n) const {
    if (widths_.empty()) throw std::logic_error("Mlp: uninitialised network");
    if (n != widths_.front()) {
      throw std::invalid_argument("Mlp: input width " + std::to_string(n) + " does not match " +
                                  std::to_string(widths_.front()));
    }
  }

  std::vector<int> widths_;
  std::vector<Mat> weights_;
  std::vector<Vec> biases_;
};

class RmsProp {
 public:
  RmsProp() = default;
  RmsProp(const Mlp& net, double lr, double rho, double eps)
      : lr_(lr), rho_(rho), eps_(eps), v_(net.zero_gradients()) {}

  double learning_rate() const { return lr_; }
  const Gradients& accumulator() const { return v_; }

  /// v <- rho v + (1 - rho) g^2; theta <- theta - lr g / sqrt(v + eps).
  void step(Mlp& net, const Gradients& g) {
    if (g.weights.size() != net.num_layers() || v_.weights.size() != net.num_layers()) {
      throw std::invalid_argument("RmsProp::step: gradient shape mismatch");
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      update(net.weights()[l].array(), g.weights[l].array(), v_.weights[l].array());
      update(net.biases()[l].array(), g.biases[l].array(), v_.biases[l].array());
    }
  }

 private:
  template <class P, class G, class V>
  void update(P&& p, const G& g, V&& v) {
    if (p.size() != g.size()) throw std::invalid_argument("RmsProp::step: gradient shape mismatch");
    v = rho_ * v + (1.0 - rho_) * g.square();
    p -= lr_ * g / (v + eps_).sqrt();
  }

  double lr_ = 1e-3;
  double rho_ = 0.9;
  double eps_ = 1e-8;
  Gradients v_;
};

inline void sync_target(const Mlp& eval, Mlp& target) { target = eval; }

struct Transition {
  std::vector<double> state;
  std::int64_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
};

// Bounded circular store; the oldest record is overwritten first.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 100000) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayMemory: capacity must be positive");
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  /// Uniform sample with replacement.
  template <class Urbg>
  std::vector<std::size_t> sample_indices(std::size_t n, Urbg& rng) const {
    if (n == 0 || items_.size() < n) {
      throw std::logic_error("ReplayMemory: not enough transitions to sample");
    }
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = static_cast<std::size_t>(uniform_index(rng, items_.size()));
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> items_;
};

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  int decay_episodes = 2000;

  double value(int episode) const {
    if (episode <= 0) return start;
    if (episode >= decay_episodes) return end;
    return start + (end - start) * static_cast<double>(episode) / decay_episodes;
  }
};

/// Lowest index wins ties.
template <class Derived>
Eigen::Index argmax_lowest(const Eigen::DenseBase<Derived>& q) {
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < q.size(); ++a) {
    if (q(a) > q(best)) best = a;
  }
  return best;
}

// Output layout of a Q-network: one branch for an enumerated action space,
// or several independent branches whose chosen indices combine mixed-radix,
// first branch least significant.
struct BranchLayout {
  std::vector<int> sizes;

  static BranchLayout single(int n) { return {{n}}; }
  int num_branches() const { return static_cast<int>(sizes.size()); }
  int width() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }
  int offset(int b) const { return std::accumulate(sizes.begin(), sizes.begin() + b, 0); }

  std::int64_t joint_count() const {
    std::int64_t n = 1;
    for (int s : sizes) n *= s;
    return n;
  }
  std::vector<int> split(std::int64_t action) const {
    std::vector<int> out(sizes.size());
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      out[b] = static_cast<int>(action % sizes[b]);
      action /= sizes[b];
    }
    return out;
  }
  std::int64_t join(const std::vector<int>& parts) const {
    std::int64_t a = 0;
    for (std::size_t b = sizes.size(); b-- > 0;) a = a * sizes[b] + parts[b];
    return a;
  }

  /// Per-branch argmax combined into a joint action.
  std::int64_t greedy(const Vec& q) const {
    std::vector<int> parts(sizes.size());
    int off = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      parts[b] = static_cast<int>(argmax_lowest(q.segment(off, sizes[b])));
      off += sizes[b];
    }
    return join(parts);
  }
};

/// Random joint action with probability epsilon, else greedy. One uniform draw
/// is always consumed before the decision.
template <class Urbg>
std::int64_t select_action(const Mlp& net, const Vec& state, double epsilon, Urbg& rng,
                           const BranchLayout& layout) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("select_action: epsilon");
  const double u = uniform01(rng);
  if (u < epsilon) {
    return static_cast<std::int64_t>(
        uniform_index(rng, static_cast<std::uint64_t>(layout.joint_count())));
  }
  return layout.greedy(net.forward(state));
}

template <class Urbg>
int select_action(const Mlp& net, const Vec& state, double epsilon, Urbg& rng) {
  return static_cast<int>(
      select_action(net, state, epsilon, rng, BranchLayout::single(net.output_width())));
}

// Minibatch in column layout.
struct Batch {
  Mat states;
  std::vector<std::int64_t> actions;
  Vec rewards;
  Mat next_states;

  Eigen::Index size() const { return states.cols(); }
};

inline Batch make_batch(const ReplayMemory& memory, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw std::invalid_argument("make_batch: empty index list");
  const auto& first = memory[idx.front()];
  const auto n = static_cast<Eigen::Index>(idx.size());
  Batch b;
  b.states.resize(static_cast<Eigen::Index>(first.state.size()), n);
  b.next_states.resize(static_cast<Eigen::Index>(first.next_state.size()), n);
  b.rewards.resize(n);
  b.actions.resize(idx.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = memory[idx[static_cast<std::size_t>(j)]];
    if (static_cast<Eigen::Index>(t.state.size()) != b.states.rows() ||
        static_cast<Eigen::Index>(t.next_state.size()) != b.next_states.rows()) {
      throw std::invalid_argument("make_batch: inconsistent state widths");
    }
    b.states.col(j) = Eigen::Map<const Vec>(t.state.data(), b.states.rows());
    b.next_states.col(j) = Eigen::Map<const Vec>(t.next_state.data(), b.next_states.rows());
    b.rewards(j) = t.reward;
    b.actions[static_cast<std::size_t>(j)] = t.action;
  }
  return b;
}

namespace detail {

inline void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
}

}  // namespace detail

/// r + gamma * mean over branches of max_a' q_target(s', a').
inline Vec dqn_target(const Batch& batch, const Mlp& target_net, double gamma,
                      const BranchLayout& layout) {
  detail::check_gamma(gamma);
  const Mat q = target_net.forward_batch(batch.next_states);
  Vec out = batch.rewards;
  const double nb = layout.num_branches();
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    double boot = 0.0;
    int off = 0;
    for (int s : layout.sizes) {
      boot += q.col(j).segment(off, s).maxCoeff();
      off += s;
    }
    out(j) += gamma * boot / nb;
  }
  return out;
}

inline Vec dqn_target(const Batch& batch, const Mlp& target_net, double gamma) {
  return dqn_target(batch, target_net, gamma, BranchLayout::single(target_net.output_width()));
}

/// r + gamma * q_target(s', argmax_a' q_eval(s', a')), per branch.
inline Vec ddqn_target(const Batch& batch, const Mlp& eval_net, const Mlp& target_net, double gamma,
                       const BranchLayout& layout) {
  detail::check_gamma(gamma);
  const Mat qe = eval_net.forward_batch(batch.next_states);
  const Mat ht = target_net.last_hidden(batch.next_states);
  Vec out = batch.rewards;
  const double nb = layout.num_branches();
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    double boot = 0.0;
    int off = 0;
    for (int s : layout.sizes) {
      const auto a = static_cast<int>(argmax_lowest(qe.col(j).segment(off, s)));
      boot += target_net.output_at(ht, static_cast<int>(j), off + a);
      off += s;
    }
    out(j) += gamma * boot / nb;
  }
  return out;
}

inline Vec ddqn_target(const Batch& batch, const Mlp& eval_net, const Mlp& target_net, double gamma) {
  return ddqn_target(batch, eval_net, target_net, gamma,
                     BranchLayout::single(eval_net.output_width()));
}

/// Regression targets for the chosen output of every branch.
inline std::vector<OutputTarget> branch_targets(const Batch& batch, const Vec& y,
                                                const BranchLayout& layout) {
  std::vector<OutputTarget> out;
  out.reserve(static_cast<std::size_t>(batch.size()) * layout.sizes.size());
  const double w = 1.0 / layout.num_branches();
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    const auto parts = layout.split(batch.actions[static_cast<std::size_t>(j)]);
    for (int b = 0; b < layout.num_branches(); ++b) {
      out.push_back({static_cast<int>(j), layout.offset(b) + parts[b], y(j), w});
    }
  }
  return out;
}

struct LearnerConfig {
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_eps = 1e-8;
  double discount = 0.9;
  std::size_t replay_capacity = 100000;
  std::size_t batch_size = 64;
  std::size_t learning_starts = 1000;
  int target_sync_period = 100;
  bool double_q = true;
};

// Evaluation and target network, optimizer and replay memory of one agent.
class QLearner {
 public:
  QLearner() = default;
  QLearner(std::vector<int> widths, BranchLayout layout, LearnerConfig cfg, std::uint64_t init_seed,
           std::uint64_t replay_seed)
      : cfg_(cfg),
        layout_(std::move(layout)),
        eval_(std::move(widths)),
        memory_(cfg.replay_capacity),
        replay_rng_(replay_seed) {
    if (layout_.width() != eval_.output_width()) {
      throw std::invalid_argument("QLearner: branch layout does not match the output width");
    }
    Rng init(init_seed);
    eval_.glorot_init(init);
    target_ = eval_;
    opt_ = RmsProp(eval_, cfg_.learning_rate, cfg_.rmsprop_decay, cfg_.rmsprop_eps);
  }

  const Mlp& eval_net() const { return eval_; }
  Mlp& eval_net() { return eval_; }
  const Mlp& target_net() const { return target_; }
  const BranchLayout& layout() const { return layout_; }
  const LearnerConfig& config() const { return cfg_; }
  const ReplayMemory& memory() const { return memory_; }
  long long updates() const { return updates_; }

  void remember(Transition t) { memory_.push(std::move(t)); }

  /// Replaces both networks, e.g. from a checkpoint.
  void set_network(const Mlp& net) {
    if (net.widths() != eval_.widths()) throw std::invalid_argument("QLearner: network shape mismatch");
    eval_ = net;
    target_ = net;
  }

  bool ready() const {
    return memory_.size() >= std::max(cfg_.learning_starts, cfg_.batch_size);
  }

  template <class Urbg>
  std::int64_t act(const Vec& state, double epsilon, Urbg& rng) const {
    return select_action(eval_, state, epsilon, rng, layout_);
  }

  std::int64_t greedy(const Vec& state) const { return layout_.greedy(eval_.forward(state)); }

  /// One minibatch gradient step. Returns the batch loss, or NaN when the
  /// memory is still below the learning threshold.
  double train_step() {
    if (!ready()) return std::numeric_limits<double>::quiet_NaN();
    const Batch batch = make_batch(memory_, memory_.sample_indices(cfg_.batch_size, replay_rng_));
    const Vec y = cfg_.double_q ? ddqn_target(batch, eval_, target_, cfg_.discount, layout_)
                                : dqn_target(batch, target_, cfg_.discount, layout_);
    last_targets_ = y;
    last_rewards_ = batch.rewards;
    Gradients g;
    const double loss = eval_.loss_gradients(batch.states, branch_targets(batch, y, layout_), g);
    opt_.step(eval_, g);
    ++updates_;
    if (updates_ % cfg_.target_sync_period == 0) sync_target(eval_, target_);
    return loss;
  }

  const Vec& last_targets() const { return last_targets_; }
  const Vec& last_rewards() const { return last_rewards_; }

 private:
  LearnerConfig cfg_;
  BranchLayout layout_;
  Mlp eval_;
  Mlp target_;
  RmsProp opt_;
  ReplayMemory memory_{1};
  Rng replay_rng_;
  long long updates_ = 0;
  Vec last_targets_;
  Vec last_rewards_;
};

inline constexpr const char* kCheckpointTag = "risd2d-mlp-v1";

/// Text checkpoint: tag, widths, then every parameter as a hex float so the
/// round trip is bit-exact.
inline void save_checkpoint(const Mlp& net, std::ostream& os) {
  os << kCheckpointTag << "\n" << net.widths().size();
  for (int w : net.widths()) os << " " << w;
  os << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%a", v);
    os << buf << "\n";
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Mat& w = net.weights()[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put(w(r, c));
    }
    for (Eigen::Index r = 0; r < net.biases()[l].size(); ++r) put(net.biases()[l](r));
  }
}

inline Mlp load_checkpoint(std::istream& is) {
  std::string tag;
  if (!(is >> tag) || tag != kCheckpointTag) {
    throw std::runtime_error("checkpoint: unsupported format tag '" + tag + "'");
  }
  std::size_t n = 0;
  if (!(is >> n) || n < 2 || n > 64) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> widths(n);
  for (auto& w : widths) {
    if (!(is >> w) || w <= 0) throw std::runtime_error("checkpoint: bad width");
  }
  Mlp net(widths);
  std::string tok;
  auto get = [&]() {
    if (!(is >> tok)) throw std::runtime_error("checkpoint: truncated parameters");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw std::runtime_error("checkpoint: bad number '" + tok + "'");
    return v;
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Mat& w = net.weights()[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = get();
    }
    for (Eigen::Index r = 0; r < net.biases()[l].size(); ++r) net.biases()[l](r) = get();
  }
  return net;
}

}  // namespace risd2d
