#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "afresnet/adam.hpp"
#include "afresnet/data.hpp"
#include "afresnet/eval.hpp"
#include "afresnet/model.hpp"

namespace afresnet {

struct TrainSpec {
  std::string config;  // grammar string or preset name
  std::string config_id;
  int epochs = 300;
  std::size_t batch_size = 32;
  std::size_t crop_len = 3000;
  int oversample_af = 3;
  bool augment = true;
  AdamOptions adam;
  std::uint64_t seed = 0;
  // Empty: no checkpoint is written.
  std::filesystem::path checkpoint_dir;
  StorageType checkpoint_storage = StorageType::kFloat64;
  // Called after every epoch with the mean training loss.
  std::function<void(int epoch, double loss)> on_epoch;
};

// Non-finite loss during training.
class DivergenceError : public NumericError {
 public:
  DivergenceError(int epoch, std::size_t step, const std::string& what);
  int epoch() const { return epoch_; }
  std::size_t step() const { return step_; }

 private:
  int epoch_;
  std::size_t step_;
};

struct TrainedModel {
  Network net;
  RunResult result;
};

// Adam on softmax cross-entropy over make_batches epochs, no schedule and no
// early stopping. The final weights are scored once on `valid`.
TrainedModel train(const TrainSpec& spec, const Dataset& train_set, const Dataset& valid_set);

// Per-epoch batch stream seeded from (seed, epoch) alone.
EpochBatches epoch_batches(const Dataset& train_set, const TrainSpec& spec, int epoch);

struct GridEntry {
  std::string id;
  std::string config;
};

// Ids "1".."n" in the given order.
std::vector<GridEntry> make_grid(const std::vector<std::string>& configs);

struct ExperimentOptions {
  TrainSpec base;  // config, config_id, seed and checkpoint_dir are overridden per run
  int repeats = 5;
  std::uint64_t base_seed = 0;
  std::filesystem::path out_dir;
  int workers = 1;
  // Off: wall_seconds is written as 0 so identical inputs give identical files.
  bool record_wall_time = true;
  // Stop after this many newly executed runs (simulates an interrupted grid).
  std::size_t max_new_runs = std::numeric_limits<std::size_t>::max();
  std::function<void(const RunResult&)> on_run;
};

struct ExperimentSummary {
  std::vector<RunResult> results;  // everything in the results file afterwards
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::vector<std::string> failures;
};

// repeats x |grid| runs with seeds base_seed + k. Rows are appended to
// <out_dir>/results.csv as runs finish; (config_id, seed) pairs already present
// are skipped. Failed runs are logged to <out_dir>/failures.csv and the grid
// continues.
ExperimentSummary run_experiment(const std::vector<GridEntry>& grid, const ExperimentOptions& options,
                                 const Dataset& train_set, const Dataset& valid_set);

}  // namespace afresnet
