#include "afresnet/config.hpp"

#include <cctype>
#include <climits>
#include <sstream>

namespace afresnet {

ConfigParseError::ConfigParseError(std::size_t position, const std::string& what)
    : std::runtime_error("config parse error at position " + std::to_string(position) + ": " + what),
      position_(position) {}

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "invalid config:";
  for (const auto& s : v) out += " " + s + ";";
  if (!v.empty()) out.pop_back();
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ModelConfig parse() {
    ModelConfig cfg;
    skip_ws();
    cfg.input_filters = integer("input_filters");
    separator();
    cfg.layout = layout();
    separator();
    cfg.filters = list("filters");
    separator();
    cfg.blocks = list("blocks");
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return cfg;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ConfigParseError(pos_, what); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void expect(char c) {
    skip_ws();
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void separator() { expect(';'); }

  int integer(const char* field) {
    skip_ws();
    if (at_end() || !std::isdigit(static_cast<unsigned char>(peek())))
      fail(std::string("expected integer for ") + field);
    const std::size_t start = pos_;
    long long value = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      value = value * 10 + (peek() - '0');
      if (value > INT_MAX) {
        pos_ = start;
        fail(std::string("integer out of range for ") + field);
      }
      ++pos_;
    }
    return static_cast<int>(value);
  }

  std::string layout() {
    skip_ws();
    std::string out;
    while (!at_end() && peek() != ';') {
      const char c = peek();
      if (c == '[' || c == ']' || c == ',') fail(std::string("unexpected '") + c + "' in layout");
      if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
      ++pos_;
    }
    if (out.empty()) fail("expected layout");
    return out;
  }

  std::vector<int> list(const char* field) {
    expect('[');
    std::vector<int> values;
    values.push_back(integer(field));
    for (;;) {
      skip_ws();
      if (at_end()) fail("expected ',' or ']'");
      if (peek() == ']') {
        ++pos_;
        return values;
      }
      if (peek() != ',') fail("expected ',' or ']'");
      ++pos_;
      values.push_back(integer(field));
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

ModelConfig parse_config(std::string_view text) {
  ModelConfig cfg = Parser(text).parse();
  if (auto v = validate(cfg); !v.empty()) throw ConfigValidationError(std::move(v));
  return cfg;
}

std::vector<std::string> validate(const ModelConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.input_filters < 1) out.emplace_back("input_filters must be ≥ 1");
  if (cfg.layout.empty()) {
    out.emplace_back("layout must not be empty");
  } else {
    for (char c : cfg.layout) {
      if (c != 'c' && c != 'n' && c != 'a') {
        out.emplace_back(std::string("layout contains illegal symbol '") + c + "'");
        break;
      }
    }
    if (cfg.layout.find('c') == std::string::npos) out.emplace_back("layout must contain at least one 'c'");
  }
  if (cfg.filters.empty()) out.emplace_back("filters must not be empty");
  if (cfg.blocks.empty()) out.emplace_back("blocks must not be empty");
  if (cfg.filters.size() != cfg.blocks.size()) out.emplace_back("filters/blocks length mismatch");
  for (int f : cfg.filters) {
    if (f < 1) {
      out.emplace_back("filters must be ≥ 1");
      break;
    }
  }
  for (int b : cfg.blocks) {
    if (b < 1) {
      out.emplace_back("blocks must be ≥ 1");
      break;
    }
  }
  return out;
}

std::string format_config(const ModelConfig& cfg) {
  std::ostringstream os;
  auto list = [&os](const std::vector<int>& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ']';
  };
  os << cfg.input_filters << "; " << cfg.layout << "; ";
  list(cfg.filters);
  os << "; ";
  list(cfg.blocks);
  return os.str();
}

std::vector<std::string> read_config_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') out.emplace_back(line);
    start = end + 1;
  }
  return out;
}

}  // namespace afresnet
