#include "dualarm/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "dualarm/sampler.hpp"

namespace dualarm {

void NetworkConfig::validate() const {
  if (d <= 0) throw DomainError("network width d must be positive");
  if (heads <= 0 || d % heads != 0) throw DomainError("d must be divisible by the head count");
  if (mlp_hidden <= 0) throw DomainError("mlp_hidden must be positive");
  if (logit_clip && !(*logit_clip > 0.0f)) throw DomainError("logit_clip must be positive");
}

nlohmann::json to_json(const NetworkConfig& c) {
  nlohmann::json j = {{"d", c.d},
                      {"heads", c.heads},
                      {"mlp_hidden", c.mlp_hidden},
                      {"shared_arm_mlp", c.shared_arm_mlp},
                      {"object_encoder", c.object_encoder},
                      {"arm_encoder", c.arm_encoder},
                      {"activation", "relu"},
                      {"format_version", 1}};
  j["logit_clip"] = c.logit_clip ? nlohmann::json(*c.logit_clip) : nlohmann::json(nullptr);
  return j;
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.d = j.value("d", c.d);
  c.heads = j.value("heads", c.heads);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.shared_arm_mlp = j.value("shared_arm_mlp", c.shared_arm_mlp);
  c.object_encoder = j.value("object_encoder", c.object_encoder);
  c.arm_encoder = j.value("arm_encoder", c.arm_encoder);
  if (j.contains("logit_clip")) {
    const auto& clip = j.at("logit_clip");
    c.logit_clip = clip.is_null() ? std::nullopt : std::optional<float>(clip.get<float>());
  }
  c.validate();
  return c;
}

std::size_t Tensor::numel() const {
  std::size_t count = 1;
  for (auto dim : shape) count *= dim;
  return count;
}

std::map<std::string, std::vector<std::uint32_t>> WeightBundle::expected_shapes(const NetworkConfig& c) {
  c.validate();
  const auto d = static_cast<std::uint32_t>(c.d);
  const auto h = static_cast<std::uint32_t>(c.mlp_hidden);
  std::map<std::string, std::vector<std::uint32_t>> shapes;
  auto mlp = [&](const std::string& prefix, std::uint32_t in, std::uint32_t hidden, std::uint32_t out) {
    shapes[prefix + ".0.weight"] = {hidden, in};
    shapes[prefix + ".0.bias"] = {hidden};
    shapes[prefix + ".1.weight"] = {out, hidden};
    shapes[prefix + ".1.bias"] = {out};
  };
  auto attention = [&](const std::string& prefix) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) shapes[prefix + "." + w] = {d, d};
  };
  if (c.shared_arm_mlp) {
    mlp("arm_mlp", 2, h, d);
  } else {
    mlp("arm1_mlp", 2, h, d);
    mlp("arm2_mlp", 2, h, d);
  }
  mlp("obj_mlp", 4, h, d);
  if (c.arm_encoder) attention("arm_mha");
  if (c.object_encoder) attention("obj_mha");
  for (const char* dec : {"dec1", "dec2"}) {
    shapes[std::string(dec) + ".wq"] = {d, d};
    shapes[std::string(dec) + ".wk"] = {d, d};
  }
  mlp("value", 3 * d, h, 1);
  return shapes;
}

WeightBundle WeightBundle::random(const NetworkConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightBundle bundle;
  for (const auto& [name, shape] : expected_shapes(config)) {
    Tensor t;
    t.shape = shape;
    const double fan_in = shape.size() == 2 ? shape[1] : static_cast<double>(config.d);
    const double bound = 1.0 / std::sqrt(fan_in);
    t.data.resize(t.numel());
    for (auto& v : t.data) v = static_cast<float>(bound * (2.0 * uniform01(rng) - 1.0));
    bundle.tensors.emplace(name, std::move(t));
  }
  return bundle;
}

namespace {
std::string shape_str(const std::vector<std::uint32_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}
}  // namespace

void WeightBundle::validate(const NetworkConfig& config) const {
  const auto expected = expected_shapes(config);
  std::vector<std::string> problems;
  WeightsErrorKind kind = WeightsErrorKind::ShapeMismatch;
  for (const auto& [name, shape] : expected) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      problems.push_back(name + ": missing (expected " + shape_str(shape) + ")");
      kind = WeightsErrorKind::Missing;
    } else if (it->second.shape != shape) {
      problems.push_back(name + ": shape " + shape_str(it->second.shape) + " != expected " + shape_str(shape));
      kind = WeightsErrorKind::ShapeMismatch;
    }
  }
  for (const auto& [name, t] : tensors) {
    if (!expected.count(name)) {
      problems.push_back(name + ": unexpected tensor");
      kind = WeightsErrorKind::Unexpected;
    }
  }
  if (!problems.empty()) {
    std::string msg = "weight bundle does not match network config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw WeightsError(kind, msg);
  }
  for (const auto& [name, t] : tensors) {
    if (t.data.size() != t.numel()) throw WeightsError(WeightsErrorKind::ShapeMismatch, name + ": data size mismatch");
    for (float v : t.data)
      if (!std::isfinite(v)) throw WeightsError(WeightsErrorKind::NonFinite, name + ": non-finite value");
  }
}

Vec pointer_logits(const Vec& query, const Mat& keys, const std::vector<bool>& mask, int d,
                   std::optional<float> clip) {
  const auto n = keys.rows();
  Vec out(n);
  const float scale = 1.0f / std::sqrt(static_cast<float>(d));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!mask[static_cast<std::size_t>(j)]) {
      out[j] = -std::numeric_limits<float>::infinity();
      continue;
    }
    float u = keys.row(j).dot(query.transpose()) * scale;
    if (clip) u = *clip * std::tanh(u / *clip);
    out[j] = u;
  }
  return out;
}

std::vector<double> masked_softmax(const Vec& logits) {
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < logits.size(); ++j)
    if (std::isfinite(logits[j])) top = std::max(top, static_cast<double>(logits[j]));
  if (!std::isfinite(top)) throw DomainError("no legal action: every logit is masked");
  std::vector<double> p(static_cast<std::size_t>(logits.size()), 0.0);
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    if (!std::isfinite(logits[j])) continue;
    p[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(logits[j]) - top);
    total += p[static_cast<std::size_t>(j)];
  }
  for (double& v : p) v /= total;
  return p;
}

std::array<std::vector<double>, 2> assignment_distribution(const std::array<Vec, 2>& logits) {
  return {masked_softmax(logits[0]), masked_softmax(logits[1])};
}

namespace {

Slot best_legal(const std::vector<double>& p, const std::vector<bool>& legal, Slot exclude) {
  Slot best;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!legal[j] || (exclude && *exclude == j)) continue;
    if (!best || p[j] > p[*best]) best = j;
  }
  return best;
}

}  // namespace

AssignmentPair select_greedy(const std::array<std::vector<double>, 2>& probs,
                             const std::array<std::vector<bool>, 2>& reach_mask) {
  Slot a1 = best_legal(probs[0], reach_mask[0], std::nullopt);
  Slot a2 = best_legal(probs[1], reach_mask[1], std::nullopt);
  if (!a1 && !a2) throw DomainError("no legal object for either arm");
  if (a1 && a2 && *a1 == *a2) {
    if (probs[0][*a1] >= probs[1][*a2])
      a2 = best_legal(probs[1], reach_mask[1], a1);
    else
      a1 = best_legal(probs[0], reach_mask[0], a2);
  }
  return {a1, a2};
}

std::vector<AttentionRow> export_attention_map(const PolicyOutput& output, long round) {
  std::vector<AttentionRow> rows;
  for (ArmId arm : kArms) {
    const auto& row = output.attention_map[index_of(arm)];
    for (std::size_t j = 0; j < row.size(); ++j) rows.push_back({round, number_of(arm), j, row[j]});
  }
  return rows;
}

void write_attention_csv(std::ostream& out, const std::vector<AttentionRow>& rows) {
  out << "round,arm,object,probability\n";
  const auto old = out.precision(17);
  for (const auto& r : rows) out << r.round << ',' << r.arm << ',' << r.object << ',' << r.probability << '\n';
  out.precision(old);
}

namespace {

Mat tensor_matrix(const WeightBundle& b, const std::string& name) {
  const Tensor& t = b.tensors.at(name);
  const Eigen::Index rows = t.shape[0];
  const Eigen::Index cols = t.shape.size() > 1 ? t.shape[1] : 1;
  return Eigen::Map<const Mat>(t.data.data(), rows, cols);
}

Vec tensor_vector(const WeightBundle& b, const std::string& name) {
  const Tensor& t = b.tensors.at(name);
  return Eigen::Map<const Vec>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

Mat relu(Mat m) { return m.cwiseMax(0.0f); }

}  // namespace

AttentionNetwork::AttentionNetwork(NetworkConfig config, const WeightBundle& bundle) : config_(std::move(config)) {
  bundle.validate(config_);
  auto load_mlp = [&](const std::string& prefix) {
    return Mlp{{tensor_matrix(bundle, prefix + ".0.weight"), tensor_vector(bundle, prefix + ".0.bias")},
               {tensor_matrix(bundle, prefix + ".1.weight"), tensor_vector(bundle, prefix + ".1.bias")}};
  };
  auto load_att = [&](const std::string& prefix) {
    return Attention{tensor_matrix(bundle, prefix + ".wq"), tensor_matrix(bundle, prefix + ".wk"),
                     tensor_matrix(bundle, prefix + ".wv"), tensor_matrix(bundle, prefix + ".wo")};
  };
  if (config_.shared_arm_mlp) {
    arm_mlp_[0] = arm_mlp_[1] = load_mlp("arm_mlp");
  } else {
    arm_mlp_[0] = load_mlp("arm1_mlp");
    arm_mlp_[1] = load_mlp("arm2_mlp");
  }
  obj_mlp_ = load_mlp("obj_mlp");
  if (config_.arm_encoder) arm_att_ = load_att("arm_mha");
  if (config_.object_encoder) obj_att_ = load_att("obj_mha");
  dec_wq_ = {tensor_matrix(bundle, "dec1.wq"), tensor_matrix(bundle, "dec2.wq")};
  dec_wk_ = {tensor_matrix(bundle, "dec1.wk"), tensor_matrix(bundle, "dec2.wk")};
  value_ = load_mlp("value");
}

Mat AttentionNetwork::run_mlp(const Mlp& mlp, const Mat& input) const {
  Mat hidden = input * mlp.first.weight.transpose();
  hidden.rowwise() += mlp.first.bias.transpose();
  hidden = relu(std::move(hidden));
  Mat out = hidden * mlp.second.weight.transpose();
  out.rowwise() += mlp.second.bias.transpose();
  return out;
}

Mat AttentionNetwork::attend(const Attention& att, const Mat& queries, const Mat& keys_values) const {
  const int dh = config_.d / config_.heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  const Mat q = queries * att.wq.transpose();
  const Mat k = keys_values * att.wk.transpose();
  const Mat v = keys_values * att.wv.transpose();
  Mat heads(queries.rows(), config_.d);
  for (int h = 0; h < config_.heads; ++h) {
    Mat scores = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const float top = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - top).exp();
      scores.row(r) /= scores.row(r).sum();
    }
    heads.middleCols(h * dh, dh) = scores * v.middleCols(h * dh, dh);
  }
  return heads * att.wo.transpose();
}

Mat AttentionNetwork::encode_objects(const std::vector<std::array<double, 4>>& object_states) const {
  if (object_states.empty()) throw DomainError("encode_objects needs at least one object");
  Mat input(static_cast<Eigen::Index>(object_states.size()), 4);
  for (std::size_t i = 0; i < object_states.size(); ++i)
    for (int k = 0; k < 4; ++k) input(static_cast<Eigen::Index>(i), k) = static_cast<float>(object_states[i][k]);
  Mat h = run_mlp(obj_mlp_, input);
  if (!config_.object_encoder) return h;
  return h + attend(obj_att_, h, h);
}

Mat AttentionNetwork::encode_arms(const std::array<Point, 2>& arm_states) const {
  Mat h(2, config_.d);
  for (ArmId arm : kArms) {
    Mat input(1, 2);
    input << static_cast<float>(arm_states[index_of(arm)].x), static_cast<float>(arm_states[index_of(arm)].y);
    h.row(static_cast<Eigen::Index>(index_of(arm))) = run_mlp(arm_mlp_[index_of(arm)], input);
  }
  if (!config_.arm_encoder) return h;
  Mat out(2, config_.d);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const Mat self = h.row(i);
    const Mat partner = h.row(1 - i);
    out.row(i) = self + attend(arm_att_, self, partner);
  }
  return out;
}

Vec AttentionNetwork::decode_logits(ArmId arm, const Vec& arm_embedding, const Mat& object_embeddings,
                                    const std::vector<bool>& mask) const {
  const Vec q = dec_wq_[index_of(arm)] * arm_embedding;
  const Mat keys = object_embeddings * dec_wk_[index_of(arm)].transpose();
  return pointer_logits(q, keys, mask, config_.d, config_.logit_clip);
}

AttentionNetwork::ObjectCache AttentionNetwork::prepare(const std::vector<std::array<double, 4>>& object_states) const {
  ObjectCache cache;
  cache.embeddings = encode_objects(object_states);
  for (ArmId arm : kArms) cache.keys[index_of(arm)] = cache.embeddings * dec_wk_[index_of(arm)].transpose();
  return cache;
}

PolicyOutput AttentionNetwork::forward(const Observation& obs) const { return forward(obs, prepare(obs.object_states)); }

PolicyOutput AttentionNetwork::forward(const Observation& obs, const ObjectCache& cache) const {
  if (static_cast<std::size_t>(cache.embeddings.rows()) != obs.size())
    throw DomainError("object cache does not match the observation");
  const Mat arms = encode_arms(obs.arm_states);
  PolicyOutput out;
  for (ArmId arm : kArms) {
    const std::size_t k = index_of(arm);
    const auto& legal = obs.reach_mask[k];
    if (std::none_of(legal.begin(), legal.end(), [](bool b) { return b; })) {
      out.probs[k].assign(obs.size(), 0.0);
      continue;
    }
    const Vec q = dec_wq_[k] * arms.row(static_cast<Eigen::Index>(k)).transpose();
    out.probs[k] = masked_softmax(pointer_logits(q, cache.keys[k], legal, config_.d, config_.logit_clip));
  }
  out.chosen = select_greedy(out.probs, obs.reach_mask);
  out.attention_map = out.probs;
  return out;
}

float AttentionNetwork::value(const Observation& obs) const {
  const Mat objects = encode_objects(obs.object_states);
  const Mat arms = encode_arms(obs.arm_states);
  Vec pooled = Vec::Zero(config_.d);
  int count = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!obs.global_mask[i]) continue;
    pooled += objects.row(static_cast<Eigen::Index>(i)).transpose();
    ++count;
  }
  if (count > 0) pooled /= static_cast<float>(count);
  Mat input(1, 3 * config_.d);
  input << pooled.transpose(), arms.row(0), arms.row(1);
  return run_mlp(value_, input)(0, 0);
}

void AttentionPolicy::begin_episode(const RearrangeEnv& env) {
  cache_ = network_->prepare(env.observe().object_states);
  history_.clear();
}

AssignmentPair AttentionPolicy::decide(const RearrangeEnv& env) {
  PolicyOutput out = network_->forward(env.observe(), cache_);
  const AssignmentPair chosen = out.chosen;
  if (record_) history_.push_back(std::move(out));
  return chosen;
}

}  // namespace dualarm
