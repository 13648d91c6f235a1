#include "cgrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "cgrl/column.hpp"

namespace cgrl {

using ad::Mat;
using ad::Var;

void PolicyConfig::validate() const {
  if (d_h <= 0 || layers < 0 || heads <= 0 || ff <= 0 || features <= 0)
    throw std::invalid_argument("PolicyConfig: sizes must be positive");
  if (d_h % heads != 0) throw std::invalid_argument("PolicyConfig: d_h must be divisible by heads");
  if (!(clip > 0.0)) throw std::invalid_argument("PolicyConfig: clip must be positive");
  if (features != kStaticFeatures)
    throw std::invalid_argument("PolicyConfig: feature count must be " + std::to_string(kStaticFeatures));
}

namespace {

std::string layer_name(int l, const char* leaf) { return "enc" + std::to_string(l) + "." + leaf; }

bool is_gain(const std::string& name) { return name.size() > 5 && name.ends_with(".gain"); }

}  // namespace

void PolicyParams::add(const std::string& name, int rows, int cols) {
  index_[name] = tensors_.size();
  Mat init = is_gain(name) ? Mat::Ones(rows, cols) : Mat::Zero(rows, cols);
  tensors_.emplace_back(name, std::move(init));
}

PolicyParams::PolicyParams(const PolicyConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  const int d = cfg.d_h;
  add("embed.W", cfg.features, d);
  add("embed.b", 1, d);
  for (int l = 0; l < cfg.layers; ++l) {
    for (const char* w : {"Wq", "Wk", "Wv", "Wo"}) add(layer_name(l, w), d, d);
    add(layer_name(l, "bo"), 1, d);
    add(layer_name(l, "norm1.gain"), 1, d);
    add(layer_name(l, "norm1.bias"), 1, d);
    add(layer_name(l, "ff.W1"), d, cfg.ff);
    add(layer_name(l, "ff.b1"), 1, cfg.ff);
    add(layer_name(l, "ff.W2"), cfg.ff, d);
    add(layer_name(l, "ff.b2"), 1, d);
    add(layer_name(l, "norm2.gain"), 1, d);
    add(layer_name(l, "norm2.bias"), 1, d);
  }
  add("dec.Wq_graph", d, d);
  add("dec.Wq_last", d, d);
  add("dec.Wq_state", 2, d);
  add("dec.Wk", d, d);
  add("dec.Wv", d, d);
  add("dec.Wo", d, d);
  add("dec.bo", 1, d);
  add("dec.Wp", d, d);
}

PolicyParams PolicyParams::random(const PolicyConfig& cfg, std::uint64_t seed) {
  PolicyParams p(cfg);
  std::mt19937_64 rng(seed);
  for (auto& t : p.tensors_) {
    if (is_gain(t.name) || t.name.ends_with(".bias")) continue;
    // Biases share the fan-in of the weight feeding them.
    int fan_in = static_cast<int>(t.value.rows());
    if (t.value.rows() == 1) fan_in = t.name.ends_with("ff.b2") ? cfg.ff : (t.name == "embed.b" ? cfg.features : cfg.d_h);
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    for (Eigen::Index k = 0; k < t.value.size(); ++k) t.value.data()[k] = u(rng);
  }
  return p;
}

ad::Parameter& PolicyParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("PolicyParams: no tensor named " + name);
  return tensors_[it->second];
}

const ad::Parameter& PolicyParams::at(const std::string& name) const {
  return const_cast<PolicyParams*>(this)->at(name);
}

std::size_t PolicyParams::num_scalars() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

void PolicyParams::zero_grad() {
  for (auto& t : tensors_) t.grad.setZero(t.value.rows(), t.value.cols());
}

bool PolicyParams::all_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(), [](const auto& t) { return t.value.allFinite(); });
}

bool operator==(const PolicyParams& a, const PolicyParams& b) {
  if (!(a.config() == b.config()) || a.tensors().size() != b.tensors().size()) return false;
  for (std::size_t k = 0; k < a.tensors().size(); ++k) {
    const auto& x = a.tensors()[k];
    const auto& y = b.tensors()[k];
    if (x.name != y.name || x.value.rows() != y.value.rows() || x.value.cols() != y.value.cols()) return false;
    if (!std::equal(x.value.data(), x.value.data() + x.value.size(), y.value.data())) return false;
  }
  return true;
}

namespace {

Var linear(ad::Tape& t, Var x, PolicyParams& p, const std::string& w, const std::string& b) {
  return t.add_row(t.matmul(x, t.param(p.at(w))), t.param(p.at(b)));
}

Var norm(ad::Tape& t, Var x, PolicyParams& p, int l, const char* which) {
  const std::string base = std::string(which);
  Var y = t.instance_norm(x);
  y = t.mul_row(y, t.param(p.at(layer_name(l, (base + ".gain").c_str()))));
  return t.add_row(y, t.param(p.at(layer_name(l, (base + ".bias").c_str()))));
}

}  // namespace

Encoding encode(ad::Tape& t, PolicyParams& p, const FeatureBlock& block) {
  const PolicyConfig& cfg = p.config();
  if (!block.allFinite()) throw std::invalid_argument("encode: non-finite feature");
  if (block.rows() < 2) throw std::invalid_argument("encode: need a depot and a customer");
  const int d = cfg.d_h;
  const int dk = d / cfg.heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Var h = linear(t, t.constant(Mat(block)), p, "embed.W", "embed.b");
  for (int l = 0; l < cfg.layers; ++l) {
    const Var q = t.matmul(h, t.param(p.at(layer_name(l, "Wq"))));
    const Var k = t.matmul(h, t.param(p.at(layer_name(l, "Wk"))));
    const Var v = t.matmul(h, t.param(p.at(layer_name(l, "Wv"))));
    std::vector<Var> heads;
    for (int hd = 0; hd < cfg.heads; ++hd) {
      const Var scores = t.scale(t.matmul_bt(t.slice_cols(q, hd * dk, dk), t.slice_cols(k, hd * dk, dk)), att_scale);
      heads.push_back(t.matmul(t.softmax(scores), t.slice_cols(v, hd * dk, dk)));
    }
    const Var mha = linear(t, t.concat_cols(heads), p, layer_name(l, "Wo"), layer_name(l, "bo"));
    const Var h1 = norm(t, t.add(h, mha), p, l, "norm1");
    const Var hidden = t.relu(linear(t, h1, p, layer_name(l, "ff.W1"), layer_name(l, "ff.b1")));
    const Var ff = linear(t, hidden, p, layer_name(l, "ff.W2"), layer_name(l, "ff.b2"));
    h = norm(t, t.add(h1, ff), p, l, "norm2");
  }

  Encoding e;
  e.nodes = h;
  e.graph = t.mean_rows(h);
  e.graph_query = t.matmul(e.graph, t.param(p.at("dec.Wq_graph")));
  e.last_query = t.matmul(h, t.param(p.at("dec.Wq_last")));
  const Var k = t.matmul(h, t.param(p.at("dec.Wk")));
  const Var v = t.matmul(h, t.param(p.at("dec.Wv")));
  for (int hd = 0; hd < cfg.heads; ++hd) {
    e.keys.push_back(t.slice_cols(k, hd * dk, dk));
    e.values.push_back(t.slice_cols(v, hd * dk, dk));
  }
  e.pointer_keys = t.matmul(h, t.param(p.at("dec.Wp")));
  return e;
}

DecoderState DecoderState::start(const VrptwInstance& inst) {
  DecoderState s;
  s.visited.assign(static_cast<std::size_t>(inst.num_nodes()), 0);
  return s;
}

void DecoderState::advance(const VrptwInstance& inst, int j) {
  ++step;
  if (j == 0) {
    time += inst.travel(last, 0);
    last = 0;
    done = true;
    return;
  }
  const Node& to = inst.node(j);
  const double arrival = time + inst.travel(last, j);
  time = std::max(to.tw_open, arrival) + to.service;
  load += to.demand;
  visited[static_cast<std::size_t>(j)] = 1;
  last = j;
}

std::vector<char> feasible_moves(const VrptwInstance& inst, const DecoderState& s) {
  const int n = inst.num_nodes();
  std::vector<char> ok(static_cast<std::size_t>(n), 0);
  if (s.done) return ok;
  ok[0] = s.last != 0;
  for (int j = 1; j < n; ++j) {
    if (s.visited[static_cast<std::size_t>(j)]) continue;
    const Node& to = inst.node(j);
    if (s.load + to.demand > inst.capacity()) continue;
    const double arrival = s.time + inst.travel(s.last, j);
    if (arrival > to.tw_close) continue;
    const double depart = std::max(to.tw_open, arrival) + to.service;
    if (depart + inst.travel(j, 0) > inst.horizon()) continue;
    ok[static_cast<std::size_t>(j)] = 1;
  }
  return ok;
}

Var decode_logits(ad::Tape& t, PolicyParams& p, const Encoding& enc, const VrptwInstance& inst,
                  const std::vector<DecoderState>& states, const ad::Mask& mask) {
  const PolicyConfig& cfg = p.config();
  const int rows = static_cast<int>(states.size());
  const int d = cfg.d_h;
  const int dk = d / cfg.heads;
  std::vector<int> last(states.size());
  Mat scalars(rows, 2);
  for (int r = 0; r < rows; ++r) {
    const auto& s = states[static_cast<std::size_t>(r)];
    last[static_cast<std::size_t>(r)] = s.last;
    scalars(r, 0) = s.time / inst.horizon();
    scalars(r, 1) = (inst.capacity() - s.load) / inst.capacity();
  }
  Var q = t.add(t.broadcast_row(enc.graph_query, rows), t.gather_rows(enc.last_query, last));
  q = t.add(q, t.matmul(t.constant(std::move(scalars)), t.param(p.at("dec.Wq_state"))));

  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Var> glimpses;
  for (int hd = 0; hd < cfg.heads; ++hd) {
    const Var scores = t.scale(t.matmul_bt(t.slice_cols(q, hd * dk, dk), enc.keys[static_cast<std::size_t>(hd)]), att_scale);
    glimpses.push_back(t.matmul(t.softmax(scores, &mask), enc.values[static_cast<std::size_t>(hd)]));
  }
  const Var g = linear(t, t.concat_cols(glimpses), p, "dec.Wo", "dec.bo");
  const Var logits = t.scale(t.matmul_bt(g, enc.pointer_keys), 1.0 / std::sqrt(static_cast<double>(d)));
  return t.tanh_clip(logits, cfg.clip);
}

namespace {

ad::Mask build_mask(const VrptwInstance& inst, const std::vector<DecoderState>& states) {
  ad::Mask m(static_cast<Eigen::Index>(states.size()), inst.num_nodes());
  for (std::size_t r = 0; r < states.size(); ++r) {
    const auto ok = feasible_moves(inst, states[r]);
    bool any = false;
    for (int j = 0; j < inst.num_nodes(); ++j) {
      m(static_cast<Eigen::Index>(r), j) = ok[static_cast<std::size_t>(j)] != 0;
      any = any || ok[static_cast<std::size_t>(j)];
    }
    if (!any) throw std::logic_error("decoder: state with no admissible move");
  }
  return m;
}

Mat masked_probabilities(const Mat& logits, const ad::Mask& mask) {
  Mat probs = Mat::Zero(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
      if (mask(r, c)) top = std::max(top, logits(r, c));
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
      if (mask(r, c)) z += (probs(r, c) = std::exp(logits(r, c) - top));
    probs.row(r) /= z;
  }
  return probs;
}

}  // namespace

Mat decode_step(ad::Tape& t, PolicyParams& p, const Encoding& enc, const VrptwInstance& inst,
                const std::vector<DecoderState>& states) {
  const ad::Mask mask = build_mask(inst, states);
  return masked_probabilities(t.value(decode_logits(t, p, enc, inst, states, mask)), mask);
}

RolloutResult rollout(ad::Tape& t, PolicyParams& p, const PricingInstance& pp, const RolloutOptions& opts) {
  const VrptwInstance& inst = pp.base();
  const int n_nodes = inst.num_nodes();
  std::vector<int> firsts = opts.first_nodes;
  if (opts.replay != nullptr) {
    firsts.clear();
    for (const auto& route : *opts.replay) firsts.push_back(route.empty() ? 0 : route.front());
  } else if (firsts.empty()) {
    for (int j = 1; j < n_nodes; ++j) firsts.push_back(j);
  }
  const int rows = static_cast<int>(firsts.size());
  for (int f : firsts)
    if (f < 0 || f >= n_nodes || (f == 0 && opts.replay == nullptr))
      throw std::invalid_argument("rollout: first node " + std::to_string(f) + " is not a customer");

  const Encoding enc = encode(t, p, pp.features().block);
  std::vector<DecoderState> states(static_cast<std::size_t>(rows), DecoderState::start(inst));
  std::vector<std::vector<int>> routes(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    auto& s = states[static_cast<std::size_t>(r)];
    const int f = firsts[static_cast<std::size_t>(r)];
    if (f != 0 && feasible_moves(inst, s)[static_cast<std::size_t>(f)]) {
      s.advance(inst, f);
      routes[static_cast<std::size_t>(r)].push_back(f);
    } else {
      if (opts.replay != nullptr && f != 0)
        throw std::invalid_argument("rollout: replayed first node is infeasible");
      s.done = true;
    }
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Var log_prob = t.constant(Mat::Zero(rows, 1));
  for (;;) {
    std::vector<int> active;
    std::vector<DecoderState> sub;
    for (int r = 0; r < rows; ++r)
      if (!states[static_cast<std::size_t>(r)].done) {
        active.push_back(r);
        sub.push_back(states[static_cast<std::size_t>(r)]);
      }
    if (active.empty()) break;
    const ad::Mask mask = build_mask(inst, sub);
    const Var logits = decode_logits(t, p, enc, inst, sub, mask);
    const Mat& lv = t.value(logits);
    std::vector<int> picks(active.size());
    const Mat probs = opts.mode == DecodeMode::kSample && opts.replay == nullptr ? masked_probabilities(lv, mask) : Mat();
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto ai = static_cast<Eigen::Index>(a);
      int pick = -1;
      if (opts.replay != nullptr) {
        const auto& route = (*opts.replay)[static_cast<std::size_t>(active[a])];
        const auto step = static_cast<std::size_t>(sub[a].step);
        pick = step < route.size() ? route[step] : 0;
        if (pick < 0 || pick >= n_nodes || !mask(ai, pick))
          throw std::invalid_argument("rollout: replayed route takes a masked move");
      } else if (opts.mode == DecodeMode::kGreedy) {
        for (int c = 0; c < n_nodes; ++c)
          if (mask(ai, c) && (pick < 0 || lv(ai, c) > lv(ai, pick))) pick = c;
      } else {
        const double u = unit(rng);
        double cum = 0.0;
        for (int c = 0; c < n_nodes; ++c) {
          if (!mask(ai, c)) continue;
          pick = c;
          cum += probs(ai, c);
          if (u < cum) break;
        }
      }
      picks[a] = pick;
    }
    log_prob = t.add(log_prob, t.scatter_rows(t.log_softmax_pick(logits, mask, picks), active, rows));
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto r = static_cast<std::size_t>(active[a]);
      states[r].advance(inst, picks[a]);
      if (picks[a] != 0) routes[r].push_back(picks[a]);
    }
  }

  const Matrix reward = scale_prices(pp.prices());
  RolloutResult out;
  out.log_prob = log_prob;
  out.trajectories.resize(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    Trajectory& tr = out.trajectories[static_cast<std::size_t>(r)];
    tr.route = std::move(routes[static_cast<std::size_t>(r)]);
    if (tr.route.empty()) continue;
    int prev = 0;
    for (int j : tr.route) {
      tr.reward += reward(prev, j);
      prev = j;
    }
    tr.reward += reward(prev, 0);
    tr.reduced_cost = path_price(tr.route, pp);
  }
  return out;
}

}  // namespace cgrl
