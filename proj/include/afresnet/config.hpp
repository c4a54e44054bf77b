#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace afresnet {

// Architecture genome: {input_filters; layout; filters; blocks}.
struct ModelConfig {
  int input_filters = 0;
  std::string layout;
  std::vector<int> filters;
  std::vector<int> blocks;

  bool operator==(const ModelConfig&) const = default;
};

// Malformed syntax. position() is the 0-based character offset where parsing
// stopped.
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(std::size_t position, const std::string& what);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Syntactically fine but violates one or more ModelConfig invariants.
class ConfigValidationError : public std::runtime_error {
 public:
  explicit ConfigValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

ModelConfig parse_config(std::string_view text);

// Canonical form "F; L; [a, b, ...]; [x, y, ...]".
std::string format_config(const ModelConfig& cfg);

// Empty when cfg satisfies every invariant.
std::vector<std::string> validate(const ModelConfig& cfg);

// One entry per non-blank line that does not start with '#'. Entries are
// returned verbatim (trimmed) so preset names survive.
std::vector<std::string> read_config_lines(std::string_view text);

}  // namespace afresnet
