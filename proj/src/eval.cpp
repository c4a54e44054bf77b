#include "afresnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "afresnet/csv.hpp"

namespace afresnet {

// --- results file --------------------------------------------------------

std::string format_result_row(const RunResult& r) {
  return csv::quote(r.config_id) + ',' + csv::quote(r.config) + ',' + std::to_string(r.seed) + ',' +
         std::to_string(r.n_params) + ',' + csv::format_float(r.f1) + ',' + csv::format_float(r.wall_seconds) + ',' +
         csv::quote(r.checkpoint);
}

RunResult parse_result_row(std::string_view line) {
  const auto f = csv::split_line(line);
  if (f.size() != 7) throw std::runtime_error("results row has " + std::to_string(f.size()) + " fields, expected 7");
  RunResult r;
  try {
    r.config_id = f[0];
    r.config = f[1];
    r.seed = std::stoull(f[2]);
    r.n_params = std::stoll(f[3]);
    r.f1 = std::stod(f[4]);
    r.wall_seconds = std::stod(f[5]);
    r.checkpoint = f[6];
  } catch (const std::logic_error&) {
    throw std::runtime_error("malformed results row: " + std::string(line));
  }
  return r;
}

std::vector<RunResult> read_results(const std::filesystem::path& path) {
  std::vector<RunResult> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  if (!std::getline(in, line)) return out;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw std::runtime_error("'" + path.string() + "' is not a results file");
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    out.push_back(parse_result_row(line));
  }
  return out;
}

// --- inference -----------------------------------------------------------

std::vector<std::vector<double>> inference_windows(std::span<const double> signal, std::size_t crop_len) {
  if (signal.empty()) throw DataError("cannot score an empty signal");
  if (crop_len == 0) throw std::invalid_argument("crop length must be positive");
  std::vector<std::vector<double>> windows;
  for (std::size_t start = 0; start < signal.size(); start += crop_len) {
    const std::size_t n = std::min(crop_len, signal.size() - start);
    const auto piece = signal.subspan(start, n);
    if (n == crop_len) {
      windows.emplace_back(piece.begin(), piece.end());
    } else {
      windows.push_back(tile_to_length(piece, crop_len));
    }
  }
  return windows;
}

double predict_record(const CropScorer& scorer, const Record& record, const InferenceOptions& options) {
  const auto windows = inference_windows(record.signal, options.crop_len);
  const std::size_t step = std::max<std::size_t>(1, options.max_batch);
  double sum = 0.0;
  for (std::size_t first = 0; first < windows.size(); first += step) {
    const std::size_t n = std::min(step, windows.size() - first);
    Tensor crops({n, 1, options.crop_len});
    for (std::size_t k = 0; k < n; ++k)
      std::copy(windows[first + k].begin(), windows[first + k].end(), &crops.at(k, 0, 0));
    const std::vector<double> p = scorer(crops);
    if (p.size() != n) throw DimensionError("scorer returned " + std::to_string(p.size()) + " scores for " +
                                            std::to_string(n) + " crops");
    for (double v : p) sum += v;
  }
  return sum / static_cast<double>(windows.size());
}

double predict_record(Network& net, const Record& record, const InferenceOptions& options) {
  return predict_record([&net](const Tensor& crops) { return net.predict_proba(crops); }, record, options);
}

int classify(double p, double threshold) { return p > threshold ? kLabelAF : kLabelNonAF; }

double f1_score(std::span<const int> predictions, std::span<const int> labels, int positive) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("f1_score: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(labels.size()) + " labels");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == positive;
    const bool truth = labels[i] == positive;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Evaluation evaluate(Network& net, const Dataset& data, const InferenceOptions& options) {
  Evaluation ev;
  for (const Record& r : data.records) {
    const double p = predict_record(net, r, options);
    ev.probabilities.push_back(p);
    ev.predictions.push_back(classify(p));
  }
  ev.f1_af = f1_score(ev.predictions, data.labels, kLabelAF);
  ev.f1_non_af = f1_score(ev.predictions, data.labels, kLabelNonAF);
  return ev;
}

// --- aggregation ---------------------------------------------------------

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double population_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("std of an empty set");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

std::vector<AggregateResult> aggregate(std::span<const RunResult> runs) {
  std::vector<AggregateResult> out;
  std::vector<std::vector<double>> scores;
  std::map<std::string, std::size_t> slot;
  for (const RunResult& r : runs) {
    auto [it, inserted] = slot.emplace(r.config_id, out.size());
    if (inserted) {
      out.push_back(AggregateResult{r.config_id, r.config, r.n_params, 0.0, 0.0, 0});
      scores.emplace_back();
    }
    scores[it->second].push_back(r.f1);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].f1_median = median(scores[i]);
    out[i].f1_std = population_std(scores[i]);
    out[i].repeats = scores[i].size();
  }
  return out;
}

// --- reports -------------------------------------------------------------

namespace {

std::ofstream open_report(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report file '" + path.string() + "'");
  return out;
}

std::string list_text(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

struct Grouped {
  std::string group;
  std::string key;
  const AggregateResult* agg;
};

// One figure file per configuration field: rows share a group when every
// other field is equal; the varying field is written as "x" in the group.
void write_figure(const std::filesystem::path& path, const char* key_name, std::vector<Grouped> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const Grouped& a, const Grouped& b) {
    if (a.group != b.group) return a.group < b.group;
    return a.agg->n_params < b.agg->n_params;
  });
  auto out = open_report(path);
  out << "group," << key_name << ",n_params,f1_median,f1_std,config_index\n";
  for (const Grouped& g : rows) {
    out << csv::quote(g.group) << ',' << csv::quote(g.key) << ',' << g.agg->n_params << ','
        << csv::format_float(g.agg->f1_median) << ',' << csv::format_float(g.agg->f1_std) << ','
        << csv::quote(g.agg->config_id) << '\n';
  }
}

long long id_order(const std::string& id) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(id, &used);
    if (used == id.size()) return v;
  } catch (const std::logic_error&) {
  }
  return -1;
}

}  // namespace

void emit_report(std::span<const AggregateResult> aggregates, const std::filesystem::path& out_dir,
                 const ReportMeta& meta) {
  if (aggregates.empty()) throw std::invalid_argument("nothing to report");
  std::filesystem::create_directories(out_dir);

  std::vector<const AggregateResult*> sorted;
  for (const auto& a : aggregates) sorted.push_back(&a);
  std::stable_sort(sorted.begin(), sorted.end(), [](const AggregateResult* a, const AggregateResult* b) {
    if (a->n_params != b->n_params) return a->n_params < b->n_params;
    return id_order(a->config_id) < id_order(b->config_id);
  });

  {
    auto out = open_report(out_dir / "table_a1.csv");
    out << "index,config,n_params,f1_median,f1_std\n";
    for (const auto* a : sorted)
      out << csv::quote(a->config_id) << ',' << csv::quote(a->config) << ',' << a->n_params << ','
          << csv::format_float(a->f1_median) << ',' << csv::format_float(a->f1_std) << '\n';
  }
  {
    auto out = open_report(out_dir / "fig_params_vs_f1.csv");
    out << "n_params,f1_median,f1_std,config_index\n";
    for (const auto* a : sorted)
      out << a->n_params << ',' << csv::format_float(a->f1_median) << ',' << csv::format_float(a->f1_std) << ','
          << csv::quote(a->config_id) << '\n';
  }

  std::vector<Grouped> by_input, by_layout, by_filters, by_blocks;
  for (const auto* a : sorted) {
    ModelConfig c;
    try {
      c = parse_config(a->config);
    } catch (const std::exception&) {
      continue;  // presets have no grammar fields to group by
    }
    const std::string f = list_text(c.filters), b = list_text(c.blocks), in = std::to_string(c.input_filters);
    by_input.push_back({"x; " + c.layout + "; " + f + "; " + b, in, a});
    by_layout.push_back({in + "; x; " + f + "; " + b, c.layout, a});
    by_filters.push_back({in + "; " + c.layout + "; x; " + b, f, a});
    by_blocks.push_back({in + "; " + c.layout + "; " + f + "; x", b, a});
  }
  write_figure(out_dir / "fig_input_filters.csv", "input_filters", std::move(by_input));
  write_figure(out_dir / "fig_layout.csv", "layout", std::move(by_layout));
  write_figure(out_dir / "fig_filters.csv", "filters", std::move(by_filters));
  write_figure(out_dir / "fig_blocks.csv", "blocks", std::move(by_blocks));

  auto out = open_report(out_dir / "report_meta.txt");
  out << "crop_len=" << meta.crop_len << '\n'
      << "threshold=" << csv::format_float(meta.threshold) << '\n'
      << "positive_class=A\n"
      << "f1_std_convention=population\n"
      << "float_format=6 significant digits\n"
      << "code_version=" << meta.code_version << '\n';
}

std::vector<AggregateResult> read_report_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<AggregateResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != 5) throw std::runtime_error("malformed table row: " + line);
    out.push_back(AggregateResult{f[0], f[1], std::stoll(f[2]), std::stod(f[3]), std::stod(f[4]), 0});
  }
  return out;
}

}  // namespace afresnet
