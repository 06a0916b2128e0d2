#pragma once

// Inference side of the attention-based assignment network: per-arm and
// per-object MLP embeddings, arm cross-attention, object self-attention,
// pointer-style decoders per arm, masked softmax and greedy pair selection.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "dualarm/env.hpp"
#include "dualarm/policy.hpp"

namespace dualarm {

using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXf;

struct NetworkConfig {
  int d = 128;
  int heads = 8;
  int mlp_hidden = 128;
  /// C in C * tanh(u / C), applied before masking; nullopt disables it.
  std::optional<float> logit_clip = 10.0f;
  bool shared_arm_mlp = true;
  /// Ablation switches: without an encoder the initial embeddings are used
  /// directly.
  bool object_encoder = true;
  bool arm_encoder = true;

  void validate() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);

struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t numel() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

enum class WeightsErrorKind { Io, BadMagic, BadVersion, Truncated, ShapeMismatch, Missing, Unexpected, NonFinite };

class WeightsError : public std::runtime_error {
 public:
  WeightsError(WeightsErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  WeightsErrorKind kind() const { return kind_; }

 private:
  WeightsErrorKind kind_;
};

/// Named parameter tensors. Linear weights are stored [out, in] row-major.
struct WeightBundle {
  std::map<std::string, Tensor> tensors;

  static std::map<std::string, std::vector<std::uint32_t>> expected_shapes(const NetworkConfig& config);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation from mt19937_64.
  static WeightBundle random(const NetworkConfig& config, std::uint64_t seed);
  /// Throws WeightsError naming every missing, unexpected, misshapen or
  /// non-finite tensor.
  void validate(const NetworkConfig& config) const;

  friend bool operator==(const WeightBundle&, const WeightBundle&) = default;
};

/// Interchange file: "DARW", version byte 1, u32 tensor count, then per
/// tensor u32 name length, name bytes, u32 rank, u32 dims, f32 data, all
/// little-endian. The network config goes to a JSON sidecar "<path>.json".
void save_weights(const std::filesystem::path& path, const WeightBundle& bundle, const NetworkConfig& config);
WeightBundle read_weight_file(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& path);
NetworkConfig read_sidecar(const std::filesystem::path& path);
/// Reads and shape-checks a bundle against `config`.
WeightBundle load_weights(const std::filesystem::path& path, const NetworkConfig& config);

struct PolicyOutput {
  /// probs[arm][j]; exactly zero for masked objects, each row sums to one
  /// over its legal entries (a row with no legal entry is all zero).
  std::array<std::vector<double>, 2> probs;
  AssignmentPair chosen;
  std::array<std::vector<double>, 2> attention_map;
};

/// u_j = q.k_j / sqrt(d) (optionally clipped to C tanh(u/C)); -inf where
/// masked. `keys` is n x d.
Vec pointer_logits(const Vec& query, const Mat& keys, const std::vector<bool>& mask, int d,
                   std::optional<float> clip);

/// Row-wise masked softmax; throws DomainError for a row without a finite
/// logit.
std::array<std::vector<double>, 2> assignment_distribution(const std::array<Vec, 2>& logits);
std::vector<double> masked_softmax(const Vec& logits);

/// Each arm takes its most probable legal object. When both pick the same
/// object the more confident arm keeps it (arm 1 on ties) and the other
/// takes its next-best legal object, or idles if none is left.
AssignmentPair select_greedy(const std::array<std::vector<double>, 2>& probs,
                             const std::array<std::vector<bool>, 2>& reach_mask);

struct AttentionRow {
  long round = 0;
  int arm = 1;
  std::size_t object = 0;
  double probability = 0.0;
};

std::vector<AttentionRow> export_attention_map(const PolicyOutput& output, long round);
void write_attention_csv(std::ostream& out, const std::vector<AttentionRow>& rows);

class AttentionNetwork {
 public:
  AttentionNetwork(NetworkConfig config, const WeightBundle& bundle);

  const NetworkConfig& config() const { return config_; }

  /// n x 4 normalized object states -> n x d.
  Mat encode_objects(const std::vector<std::array<double, 4>>& object_states) const;
  /// Two normalized arm states -> 2 x d.
  Mat encode_arms(const std::array<Point, 2>& arm_states) const;
  /// Decoder for one arm: n logits from its embedding and the object
  /// embeddings.
  Vec decode_logits(ArmId arm, const Vec& arm_embedding, const Mat& object_embeddings,
                    const std::vector<bool>& mask) const;

  /// Object-side work that does not change within an episode.
  struct ObjectCache {
    Mat embeddings;
    std::array<Mat, 2> keys;
  };
  ObjectCache prepare(const std::vector<std::array<double, 4>>& object_states) const;

  PolicyOutput forward(const Observation& obs) const;
  PolicyOutput forward(const Observation& obs, const ObjectCache& cache) const;
  /// Critic head on the same trunk.
  float value(const Observation& obs) const;

 private:
  struct Linear {
    Mat weight;
    Vec bias;
  };
  struct Mlp {
    Linear first;
    Linear second;
  };
  struct Attention {
    Mat wq, wk, wv, wo;
  };

  Mat run_mlp(const Mlp& mlp, const Mat& input) const;
  Mat attend(const Attention& att, const Mat& queries, const Mat& keys_values) const;

  NetworkConfig config_;
  std::array<Mlp, 2> arm_mlp_;
  Mlp obj_mlp_;
  Attention arm_att_;
  Attention obj_att_;
  std::array<Mat, 2> dec_wq_;
  std::array<Mat, 2> dec_wk_;
  Mlp value_;
};

class AttentionPolicy : public Policy {
 public:
  explicit AttentionPolicy(std::shared_ptr<const AttentionNetwork> network, bool record = false)
      : network_(std::move(network)), record_(record) {}

  std::string name() const override { return "attention"; }
  void begin_episode(const RearrangeEnv& env) override;
  AssignmentPair decide(const RearrangeEnv& env) override;

  /// Outputs of every decision of the current episode when recording.
  const std::vector<PolicyOutput>& history() const { return history_; }

 private:
  std::shared_ptr<const AttentionNetwork> network_;
  AttentionNetwork::ObjectCache cache_;
  bool record_;
  std::vector<PolicyOutput> history_;
};

}  // namespace dualarm
