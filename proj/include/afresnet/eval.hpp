#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "afresnet/data.hpp"
#include "afresnet/model.hpp"

namespace afresnet {

// One training run as stored in the results file.
struct RunResult {
  std::string config_id;
  std::string config;
  std::uint64_t seed = 0;
  std::int64_t n_params = 0;
  double f1 = 0.0;  // validation F1 of the AF class
  double wall_seconds = 0.0;
  std::string checkpoint;
  std::vector<double> epoch_loss;  // not persisted in the results file
  double f1_non_af = 0.0;          // not persisted in the results file
};

inline constexpr std::string_view kResultsHeader = "config_id,config_string,seed,n_params,f1,wall_seconds,checkpoint";

std::string format_result_row(const RunResult& r);
RunResult parse_result_row(std::string_view line);
// Reads a results file; a missing file yields an empty list.
std::vector<RunResult> read_results(const std::filesystem::path& path);

// --- inference -----------------------------------------------------------

inline constexpr double kDecisionThreshold = 0.5;

// Maps a batch of crops [N, 1, crop_len] to per-crop AF probabilities.
using CropScorer = std::function<std::vector<double>(const Tensor& crops)>;

struct InferenceOptions {
  std::size_t crop_len = 3000;
  std::size_t max_batch = 32;  // crops per scorer call
};

// Consecutive non-overlapping windows; the final partial window (or a signal
// shorter than one window) is tiled to full length.
std::vector<std::vector<double>> inference_windows(std::span<const double> signal, std::size_t crop_len);

// Mean AF probability over the record's windows. No augmentation.
double predict_record(const CropScorer& scorer, const Record& record, const InferenceOptions& options = {});
double predict_record(Network& net, const Record& record, const InferenceOptions& options = {});

// 1 (AF) iff p > threshold.
int classify(double p, double threshold = kDecisionThreshold);

// 2TP / (2TP + FP + FN); 0 when the denominator is 0.
double f1_score(std::span<const int> predictions, std::span<const int> labels, int positive = kLabelAF);

struct Evaluation {
  std::vector<double> probabilities;
  std::vector<int> predictions;
  double f1_af = 0.0;
  double f1_non_af = 0.0;
};

Evaluation evaluate(Network& net, const Dataset& data, const InferenceOptions& options = {});

// --- aggregation and reports ---------------------------------------------

struct AggregateResult {
  std::string config_id;
  std::string config;
  std::int64_t n_params = 0;
  double f1_median = 0.0;
  double f1_std = 0.0;  // population std over repeats
  std::size_t repeats = 0;
};

// Mean of the two middle values for even counts.
double median(std::vector<double> values);
double population_std(std::span<const double> values);

// Groups by config_id in first-seen order.
std::vector<AggregateResult> aggregate(std::span<const RunResult> runs);

struct ReportMeta {
  std::size_t crop_len = 3000;
  double threshold = kDecisionThreshold;
  std::string code_version;
};

// Writes table_a1.csv, fig_params_vs_f1.csv, fig_input_filters.csv,
// fig_layout.csv, fig_filters.csv, fig_blocks.csv and report_meta.txt.
void emit_report(std::span<const AggregateResult> aggregates, const std::filesystem::path& out_dir,
                 const ReportMeta& meta = {});

// Parses table_a1.csv back into aggregates (repeats is not stored and stays 0).
std::vector<AggregateResult> read_report_table(const std::filesystem::path& path);

}  // namespace afresnet
