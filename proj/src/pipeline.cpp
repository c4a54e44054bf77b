#include "afresnet/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "afresnet/csv.hpp"

namespace afresnet {

namespace {

constexpr std::uint64_t kInitStream = 0x494e'4954;   // "INIT"
constexpr std::uint64_t kBatchStream = 0x4241'5443;  // "BATC"

}  // namespace

DivergenceError::DivergenceError(int epoch, std::size_t step, const std::string& what)
    : NumericError("training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ": " +
                   what),
      epoch_(epoch),
      step_(step) {}

EpochBatches epoch_batches(const Dataset& train_set, const TrainSpec& spec, int epoch) {
  BatchOptions opts;
  opts.batch_size = spec.batch_size;
  opts.crop_len = spec.crop_len;
  opts.oversample_af = spec.oversample_af;
  opts.augment = spec.augment;
  return make_batches(train_set, opts, make_rng(spec.seed, kBatchStream, static_cast<std::uint64_t>(epoch)));
}

TrainedModel train(const TrainSpec& spec, const Dataset& train_set, const Dataset& valid_set) {
  if (spec.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (spec.batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (train_set.size() == 0) throw DataError("training set is empty");
  if (valid_set.size() == 0) throw DataError("validation set is empty");

  const auto started = std::chrono::steady_clock::now();
  Rng init_rng = make_rng(spec.seed, kInitStream);
  TrainedModel out{build_from_text(spec.config, init_rng()), {}};
  Network& net = out.net;
  RunResult& result = out.result;
  result.config_id = spec.config_id;
  result.config = net.config_id();
  result.seed = spec.seed;
  result.n_params = count_parameters(net);

  AdamState adam = make_adam_state(net.parameters(), spec.adam);
  std::size_t step = 0;
  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    EpochBatches batches = epoch_batches(train_set, spec, epoch);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    while (auto batch = batches.next()) {
      ++step;
      net.zero_grad();
      Tape tape;
      Var logits = net.forward(tape, tape.constant(std::move(batch->inputs)), ops::Mode::kTrain);
      Var loss;
      try {
        loss = tape.softmax_cross_entropy(logits, batch->labels);
      } catch (const NumericError& e) {
        throw DivergenceError(epoch, step, e.what());
      }
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) throw DivergenceError(epoch, step, "non-finite loss");
      tape.backward(loss);
      try {
        adam_step(net.parameters(), adam);
      } catch (const NumericError& e) {
        throw DivergenceError(epoch, step, e.what());
      }
      loss_sum += value * static_cast<double>(batch->labels.size());
      seen += batch->labels.size();
    }
    const double mean_loss = loss_sum / static_cast<double>(seen);
    result.epoch_loss.push_back(mean_loss);
    if (spec.on_epoch) spec.on_epoch(epoch, mean_loss);
  }

  InferenceOptions inference;
  inference.crop_len = spec.crop_len;
  const Evaluation ev = evaluate(net, valid_set, inference);
  result.f1 = ev.f1_af;
  result.f1_non_af = ev.f1_non_af;

  if (!spec.checkpoint_dir.empty()) {
    std::filesystem::create_directories(spec.checkpoint_dir);
    const std::string id = spec.config_id.empty() ? std::string("run") : "run_" + spec.config_id;
    const auto path = spec.checkpoint_dir / (id + "_seed" + std::to_string(spec.seed) + ".ckpt");
    save_checkpoint(net, path, spec.checkpoint_storage);
    result.checkpoint = path.string();
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::vector<GridEntry> make_grid(const std::vector<std::string>& configs) {
  std::vector<GridEntry> grid;
  for (std::size_t i = 0; i < configs.size(); ++i) grid.push_back({std::to_string(i + 1), configs[i]});
  return grid;
}

ExperimentSummary run_experiment(const std::vector<GridEntry>& grid, const ExperimentOptions& options,
                                 const Dataset& train_set, const Dataset& valid_set) {
  if (options.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  if (options.out_dir.empty()) throw std::invalid_argument("experiment needs an output directory");
  for (const GridEntry& g : grid) resolve_architecture(g.config);  // reject bad configs before any training

  std::filesystem::create_directories(options.out_dir);
  const auto results_path = options.out_dir / "results.csv";
  const auto failures_path = options.out_dir / "failures.csv";

  ExperimentSummary summary;
  std::set<std::pair<std::string, std::uint64_t>> done;
  for (const RunResult& r : read_results(results_path)) done.emplace(r.config_id, r.seed);
  if (!std::filesystem::exists(results_path)) {
    std::ofstream(results_path) << kResultsHeader << '\n';
  }

  struct Task {
    const GridEntry* entry;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const GridEntry& g : grid) {
    for (int k = 0; k < options.repeats; ++k) {
      const std::uint64_t seed = options.base_seed + static_cast<std::uint64_t>(k);
      if (done.count({g.id, seed})) {
        ++summary.skipped;
        continue;
      }
      tasks.push_back({&g, seed});
    }
  }

  std::mutex io;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> launched{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      if (launched.fetch_add(1) >= options.max_new_runs) return;
      const Task& t = tasks[i];
      TrainSpec spec = options.base;
      spec.config = t.entry->config;
      spec.config_id = t.entry->id;
      spec.seed = t.seed;
      spec.checkpoint_dir = options.out_dir / "checkpoints";
      try {
        RunResult r = train(spec, train_set, valid_set).result;
        r.checkpoint = std::filesystem::relative(r.checkpoint, options.out_dir).generic_string();
        if (!options.record_wall_time) r.wall_seconds = 0.0;
        std::lock_guard lock(io);
        std::ofstream(results_path, std::ios::app) << format_result_row(r) << '\n';
        ++summary.executed;
        if (options.on_run) options.on_run(r);
      } catch (const std::exception& e) {
        std::lock_guard lock(io);
        const bool fresh = !std::filesystem::exists(failures_path);
        std::ofstream f(failures_path, std::ios::app);
        if (fresh) f << "config_id,seed,error\n";
        f << csv::quote(t.entry->id) << ',' << t.seed << ',' << csv::quote(e.what()) << '\n';
        summary.failures.push_back("config " + t.entry->id + " seed " + std::to_string(t.seed) + ": " + e.what());
      }
    }
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  summary.results = read_results(results_path);
  return summary;
}

}  // namespace afresnet
