#include "afresnet/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

namespace afresnet {

namespace {

using Kind = LayerPlan::Kind;
using Branch = LayerPlan::Branch;

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kConv: return "conv";
    case Kind::kNorm: return "norm";
    case Kind::kAct: return "act";
    case Kind::kAdd: return "add";
    case Kind::kPool: return "pool";
    case Kind::kDense: return "dense";
  }
  return "?";
}

Kind layout_kind(char c) {
  switch (c) {
    case 'c': return Kind::kConv;
    case 'n': return Kind::kNorm;
    default: return Kind::kAct;
  }
}

std::string group_prefix(int group, int block) {
  return "group" + std::to_string(group) + ".block" + std::to_string(block);
}

}  // namespace

Architecture architecture_for(const ModelConfig& cfg) {
  if (auto v = validate(cfg); !v.empty()) throw ConfigValidationError(std::move(v));
  Architecture arch;
  arch.id = format_config(cfg);
  arch.stem_filters = cfg.input_filters;
  arch.layout = cfg.layout;
  for (std::size_t i = 0; i < cfg.filters.size(); ++i)
    arch.groups.push_back(GroupPlan{cfg.filters[i], cfg.blocks[i], 2, true});
  return arch;
}

bool is_preset(std::string_view name) { return name == "ResNet18" || name == "ResNet34"; }

Architecture preset_architecture(std::string_view name) {
  std::vector<int> blocks;
  if (name == "ResNet18") {
    blocks = {2, 2, 2, 2};
  } else if (name == "ResNet34") {
    blocks = {3, 4, 6, 3};
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected ResNet18 or ResNet34)");
  }
  Architecture arch;
  arch.id = std::string(name);
  arch.stem_filters = 64;
  arch.layout = "cnacna";
  const int widths[] = {64, 128, 256, 512};
  for (std::size_t i = 0; i < 4; ++i) {
    const bool first = i == 0;
    arch.groups.push_back(GroupPlan{widths[i], blocks[i], first ? 1 : 2, !first});
  }
  return arch;
}

Architecture resolve_architecture(std::string_view text) {
  std::string_view trimmed = text;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front()))) trimmed.remove_prefix(1);
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.remove_suffix(1);
  if (is_preset(trimmed)) return preset_architecture(trimmed);
  return architecture_for(parse_config(trimmed));
}

// --- building ------------------------------------------------------------

Network build_network(const Architecture& arch, std::uint64_t seed) {
  if (arch.stem_filters < 1 || arch.groups.empty() || arch.layout.find('c') == std::string::npos)
    throw std::invalid_argument("architecture '" + arch.id + "' is incomplete");

  Network net;
  net.arch_ = arch;
  std::mt19937_64 rng(seed);

  auto add_conv = [&](const std::string& name, int cin, int cout, int kernel, int stride, int group, int block,
                      Branch branch, bool opens) {
    LayerPlan l{Kind::kConv, kernel, stride, cin, cout, group, block, branch, opens, name, net.params_.size(), 0};
    const double bound = std::sqrt(1.0 / (static_cast<double>(cin) * kernel));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w({static_cast<std::size_t>(cout), static_cast<std::size_t>(cin), static_cast<std::size_t>(kernel)});
    for (double& v : w.values()) v = dist(rng);
    net.params_.emplace_back(name + ".weight", std::move(w));
    net.layers_.push_back(std::move(l));
  };
  auto add_norm = [&](const std::string& name, int channels, int group, int block, bool opens) {
    LayerPlan l{Kind::kNorm, 0, 1, channels, channels, group, block, Branch::kMain, opens, name, net.params_.size(),
                net.stats_.size()};
    const auto c = static_cast<std::size_t>(channels);
    net.params_.emplace_back(name + ".gamma", Tensor({c}, 1.0));
    net.params_.emplace_back(name + ".beta", Tensor({c}, 0.0));
    net.stats_.push_back(RunningStats{Tensor({c}, 0.0), Tensor({c}, 1.0)});
    net.stats_names_.push_back(name);
    net.layers_.push_back(std::move(l));
  };
  auto add_plain = [&](Kind kind, const std::string& name, int channels, int group, int block, bool opens) {
    net.layers_.push_back(
        LayerPlan{kind, 0, 1, channels, channels, group, block, Branch::kMain, opens, name, net.params_.size(), 0});
  };

  add_conv("stem.conv", 1, arch.stem_filters, 7, 2, 0, 0, Branch::kMain, false);
  add_norm("stem.norm", arch.stem_filters, 0, 0, false);
  add_plain(Kind::kAct, "stem.act", arch.stem_filters, 0, 0, false);

  int channels = arch.stem_filters;
  for (std::size_t gi = 0; gi < arch.groups.size(); ++gi) {
    const GroupPlan& g = arch.groups[gi];
    if (g.width < 1 || g.blocks < 1) throw std::invalid_argument("architecture '" + arch.id + "' has an empty group");
    const int group = static_cast<int>(gi) + 1;
    for (int block = 1; block <= g.blocks; ++block) {
      const std::string prefix = group_prefix(group, block);
      const bool first_block = block == 1;
      const int block_in = channels;
      bool seen_conv = false;
      for (std::size_t pos = 0; pos < arch.layout.size(); ++pos) {
        const Kind kind = layout_kind(arch.layout[pos]);
        const std::string name = prefix + "." + kind_name(kind) + std::to_string(pos);
        const bool opens = pos == 0;
        if (kind == Kind::kConv) {
          const int stride = (first_block && !seen_conv) ? g.stride : 1;
          add_conv(name, channels, g.width, 3, stride, group, block, Branch::kMain, opens);
          channels = g.width;
          seen_conv = true;
        } else if (kind == Kind::kNorm) {
          add_norm(name, channels, group, block, opens);
        } else {
          add_plain(Kind::kAct, name, channels, group, block, opens);
        }
      }
      if (first_block && g.project_skip) {
        add_conv(prefix + ".skip", block_in, g.width, 1, g.stride, group, block, Branch::kSkip, false);
      } else if (block_in != g.width || (first_block && g.stride != 1)) {
        throw std::invalid_argument("architecture '" + arch.id + "': identity shortcut cannot change shape in " +
                                    prefix);
      }
      add_plain(Kind::kAdd, prefix + ".add", channels, group, block, false);
    }
  }

  const int head_group = static_cast<int>(arch.groups.size()) + 1;
  add_plain(Kind::kPool, "head.pool", channels, head_group, 0, false);
  {
    LayerPlan l{Kind::kDense, 0, 1, channels, kNumClasses, head_group, 0, Branch::kMain, false, "head.dense",
                net.params_.size(), 0};
    const double bound = std::sqrt(1.0 / channels);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w({static_cast<std::size_t>(channels), static_cast<std::size_t>(kNumClasses)});
    for (double& v : w.values()) v = dist(rng);
    Tensor b({static_cast<std::size_t>(kNumClasses)});
    for (double& v : b.values()) v = dist(rng);
    net.params_.emplace_back("head.dense.weight", std::move(w));
    net.params_.emplace_back("head.dense.bias", std::move(b));
    net.layers_.push_back(std::move(l));
  }
  return net;
}

Network build_model(const ModelConfig& cfg, std::uint64_t seed) { return build_network(architecture_for(cfg), seed); }

Network preset(std::string_view name, std::uint64_t seed) { return build_network(preset_architecture(name), seed); }

Network build_from_text(std::string_view config_or_preset, std::uint64_t seed) {
  return build_network(resolve_architecture(config_or_preset), seed);
}

// --- counting ------------------------------------------------------------

std::int64_t analytic_param_count(const ModelConfig& cfg) {
  if (auto v = validate(cfg); !v.empty()) throw ConfigValidationError(std::move(v));
  const auto first_c = static_cast<std::int64_t>(cfg.layout.find('c'));
  const std::int64_t nc = std::count(cfg.layout.begin(), cfg.layout.end(), 'c');
  const std::int64_t n_before = std::count(cfg.layout.begin(), cfg.layout.begin() + first_c, 'n');
  const std::int64_t n_after = std::count(cfg.layout.begin() + first_c, cfg.layout.end(), 'n');

  std::int64_t c_in = cfg.input_filters;
  std::int64_t total = 7 * c_in + 2 * c_in;
  for (std::size_t i = 0; i < cfg.filters.size(); ++i) {
    const std::int64_t f = cfg.filters[i];
    const std::int64_t b = cfg.blocks[i];
    total += 3 * c_in * f + 3 * f * f * (nc - 1) + 2 * f * n_after + 2 * c_in * n_before + c_in * f;
    total += (b - 1) * (3 * f * f * nc + 2 * f * n_after + 2 * f * n_before);
    c_in = f;
  }
  return total + 2 * c_in + 2;
}

std::int64_t analytic_param_count(const Architecture& arch) {
  const std::string& layout = arch.layout;
  const auto first_c = static_cast<std::int64_t>(layout.find('c'));
  const std::int64_t nc = std::count(layout.begin(), layout.end(), 'c');
  const std::int64_t n_before = std::count(layout.begin(), layout.begin() + first_c, 'n');
  const std::int64_t n_after = std::count(layout.begin() + first_c, layout.end(), 'n');

  std::int64_t c_in = arch.stem_filters;
  std::int64_t total = 9 * c_in;
  for (const GroupPlan& g : arch.groups) {
    const std::int64_t f = g.width;
    total += 3 * c_in * f + 3 * f * f * (nc - 1) + 2 * f * n_after + 2 * c_in * n_before;
    if (g.project_skip) total += c_in * f;
    total += (g.blocks - 1) * (3 * f * f * nc + 2 * f * (n_after + n_before));
    c_in = f;
  }
  return total + c_in * kNumClasses + kNumClasses;
}

std::int64_t count_parameters(const Network& net) {
  std::int64_t total = 0;
  for (const Parameter& p : net.parameters()) total += static_cast<std::int64_t>(p.value.size());
  return total;
}

// --- forward -------------------------------------------------------------

Parameter* Network::find_parameter(std::string_view name) {
  for (Parameter& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void Network::zero_grad() {
  for (Parameter& p : params_) p.zero_grad();
}

std::size_t Network::pooled_length(std::size_t length) const {
  auto check = [](std::size_t len, const std::string& stage) {
    if (len < 2)
      throw DimensionError("input too short: stage '" + stage + "' receives length " + std::to_string(len) +
                           " and cannot downsample");
  };
  check(length, "stem");
  length = ops::conv1d_output_length(length, 7, 2, 3);
  for (std::size_t gi = 0; gi < arch_.groups.size(); ++gi) {
    const GroupPlan& g = arch_.groups[gi];
    if (g.stride == 1) continue;
    check(length, "group" + std::to_string(gi + 1));
    length = ops::conv1d_output_length(length, 3, static_cast<std::size_t>(g.stride), 1);
  }
  return length;
}

Var Network::forward(Tape& tape, Var input, ops::Mode mode) {
  const Tensor& x0 = tape.value(input);
  if (x0.rank() != 3 || x0.dim(1) != 1)
    throw DimensionError("network input must be [B, 1, L], got " + to_string(x0.dims()));
  if (layers_.empty()) throw StateError("forward on an empty network");
  pooled_length(x0.dim(2));

  Var x = input;
  Var block_in = input;
  Var skip{};
  bool has_skip = false;
  for (const LayerPlan& l : layers_) {
    if (l.opens_block) block_in = x;
    switch (l.kind) {
      case Kind::kConv: {
        Var w = tape.parameter(params_[l.param_index]);
        const auto pad = static_cast<std::size_t>(l.kernel / 2);
        const auto stride = static_cast<std::size_t>(l.stride);
        if (l.branch == Branch::kSkip) {
          skip = tape.conv1d(block_in, w, stride, pad);
          has_skip = true;
        } else {
          x = tape.conv1d(x, w, stride, pad);
        }
        break;
      }
      case Kind::kNorm: {
        Var gamma = tape.parameter(params_[l.param_index]);
        Var beta = tape.parameter(params_[l.param_index + 1]);
        x = tape.batchnorm(x, gamma, beta, stats_[l.stats_index], mode, bn_);
        break;
      }
      case Kind::kAct:
        x = tape.relu(x);
        break;
      case Kind::kAdd:
        x = tape.add(x, has_skip ? skip : block_in);
        has_skip = false;
        break;
      case Kind::kPool:
        x = tape.global_avg_pool(x);
        break;
      case Kind::kDense: {
        Var w = tape.parameter(params_[l.param_index]);
        Var b = tape.parameter(params_[l.param_index + 1]);
        x = tape.dense(x, w, b);
        break;
      }
    }
  }
  return x;
}

Tensor Network::logits(const Tensor& batch) {
  Tape tape;
  Var out = forward(tape, tape.constant(batch), ops::Mode::kEval);
  return tape.value(out);
}

std::vector<double> Network::predict_proba(const Tensor& batch) {
  const Tensor p = ops::softmax(logits(batch));
  std::vector<double> out(p.dim(0));
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = p.at(b, 1);
  return out;
}

}  // namespace afresnet
