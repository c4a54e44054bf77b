#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "afresnet/autograd.hpp"
#include "afresnet/config.hpp"
#include "afresnet/ops.hpp"
#include "afresnet/tensor.hpp"

namespace afresnet {

inline constexpr int kNumClasses = 2;

// One group of residual blocks sharing a width. The first block runs its
// first convolution at `stride`; when `project_skip` is set its shortcut is a
// strided 1x1 convolution, otherwise an identity.
struct GroupPlan {
  int width = 0;
  int blocks = 0;
  int stride = 2;
  bool project_skip = true;
};

// Resolved architecture, shared by grammar configs and the named presets.
struct Architecture {
  std::string id;  // canonical config string or preset name
  int stem_filters = 0;
  std::string layout;
  std::vector<GroupPlan> groups;
};

Architecture architecture_for(const ModelConfig& cfg);
// "ResNet18" or "ResNet34"; throws std::invalid_argument otherwise.
Architecture preset_architecture(std::string_view name);
bool is_preset(std::string_view name);
// Accepts either a preset name or a config string.
Architecture resolve_architecture(std::string_view text);

struct LayerPlan {
  enum class Kind { kConv, kNorm, kAct, kAdd, kPool, kDense };
  enum class Branch { kMain, kSkip };

  Kind kind = Kind::kConv;
  int kernel = 0;
  int stride = 1;
  int in_channels = 0;
  int out_channels = 0;
  int group = 0;  // 0 = stem, 1..n = residual groups, n+1 = head
  int block = 0;  // 1-based within a group, 0 outside groups
  Branch branch = Branch::kMain;
  bool opens_block = false;
  std::string name;
  std::size_t param_index = 0;  // first parameter owned by this layer
  std::size_t stats_index = 0;  // norm layers only
};

class Network {
 public:
  Network() = default;

  const std::string& config_id() const { return arch_.id; }
  const Architecture& architecture() const { return arch_; }
  const std::vector<LayerPlan>& layers() const { return layers_; }

  std::span<Parameter> parameters() { return params_; }
  std::span<const Parameter> parameters() const { return params_; }
  Parameter* find_parameter(std::string_view name);

  std::span<RunningStats> running_stats() { return stats_; }
  std::span<const RunningStats> running_stats() const { return stats_; }
  const std::vector<std::string>& stats_names() const { return stats_names_; }

  const ops::BatchNormOptions& batchnorm_options() const { return bn_; }
  void set_batchnorm_options(const ops::BatchNormOptions& bn) { bn_ = bn; }

  void zero_grad();

  // input [B, 1, L] -> logits [B, 2]. Train mode uses batch statistics and
  // updates running statistics; eval mode reads them only.
  Var forward(Tape& tape, Var input, ops::Mode mode);
  // Eval-mode convenience wrappers.
  Tensor logits(const Tensor& batch);
  // Probability of class 1 (atrial fibrillation) per row.
  std::vector<double> predict_proba(const Tensor& batch);

  // Length entering global pooling for an input of length `length`. Throws
  // DimensionError naming the first downsampling stage that would receive
  // fewer than 2 samples.
  std::size_t pooled_length(std::size_t length) const;

 private:
  friend Network build_network(const Architecture& arch, std::uint64_t seed);

  Architecture arch_;
  std::vector<LayerPlan> layers_;
  std::vector<Parameter> params_;
  std::vector<RunningStats> stats_;
  std::vector<std::string> stats_names_;
  ops::BatchNormOptions bn_;
};

// Weights drawn from U(-sqrt(1/fan_in), sqrt(1/fan_in)), BN gamma 1 / beta 0,
// running mean 0 / var 1.
Network build_network(const Architecture& arch, std::uint64_t seed = 0);
Network build_model(const ModelConfig& cfg, std::uint64_t seed = 0);
Network preset(std::string_view name, std::uint64_t seed = 0);
Network build_from_text(std::string_view config_or_preset, std::uint64_t seed = 0);

// Closed-form trainable parameter count.
std::int64_t analytic_param_count(const ModelConfig& cfg);
// Same, for any resolved architecture (presets included).
std::int64_t analytic_param_count(const Architecture& arch);
// Sum of element counts of trainable tensors; running stats excluded.
std::int64_t count_parameters(const Network& net);

// --- checkpoints ---------------------------------------------------------

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StorageType : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

// Little-endian: "RSB1", u32 version, config string, u32 tensor count, then
// per tensor name, u8 dtype, u8 rank, u32 dims, raw values. Running stats use
// the ".running_mean" / ".running_var" suffixes. BN eps/momentum travel in an
// extra f64 tensor named "meta.batchnorm".
void save_checkpoint(const Network& net, const std::filesystem::path& path,
                     StorageType storage = StorageType::kFloat64);
Network load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kBatchNormMetaName = "meta.batchnorm";

}  // namespace afresnet
