#include "afresnet/cli.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "afresnet/config.hpp"
#include "afresnet/csv.hpp"
#include "afresnet/data.hpp"
#include "afresnet/eval.hpp"
#include "afresnet/model.hpp"
#include "afresnet/pipeline.hpp"
#include "afresnet/synthetic.hpp"
#include "afresnet/table_a1.hpp"

namespace afresnet {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

// Echoes the effective configuration to stderr and, when an output directory
// is known, to <out>/<command>_config.txt.
void record_settings(const std::string& command, const Settings& settings, const std::filesystem::path& out_dir,
                     std::ostream& err) {
  std::ostringstream text;
  text << "command=" << command << '\n' << "version=" << kVersion << '\n';
  for (const auto& [k, v] : settings) text << k << '=' << v << '\n';
  err << text.str();
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  std::ofstream f(out_dir / (command + "_config.txt"), std::ios::trunc);
  if (!f) throw DataError("cannot write provenance file in '" + out_dir.string() + "'");
  f << text.str();
}

std::string flt(double v) { return csv::format_float(v); }

struct Prepared {
  Dataset train;
  Dataset valid;
  ClassCounts counts;
};

Prepared prepare_data(const std::string& manifest, double train_fraction, std::uint64_t split_seed) {
  std::vector<Record> records = load_dataset(manifest);
  Prepared p;
  p.counts = count_classes(records);
  Dataset all = preprocess(std::move(records));
  if (all.size() < 2) throw DataError("need at least 2 usable records, got " + std::to_string(all.size()));
  auto [train, valid] = split(all, train_fraction, split_seed);
  if (train.size() == 0 || valid.size() == 0) throw DataError("train/validation split left an empty part");
  p.train = std::move(train);
  p.valid = std::move(valid);
  return p;
}

std::string counts_text(const ClassCounts& c) {
  return std::to_string(c.total()) + " records (A " + std::to_string(c.af) + ", N " + std::to_string(c.normal) +
         ", O " + std::to_string(c.other) + ", ~ " + std::to_string(c.noisy) + ")";
}

// --- params --------------------------------------------------------------

int cmd_params(const std::string& config, bool table, std::ostream& out, std::ostream& err) {
  if (table == !config.empty()) throw UsageError("params needs exactly one of --config or --table");
  if (!table) {
    record_settings("params", {{"seed", "0"}, {"config", config}}, {}, err);
    const Architecture arch = resolve_architecture(config);
    out << count_parameters(build_network(arch)) << '\n';
    return kExitOk;
  }
  record_settings("params", {{"seed", "0"}, {"config", "table"}}, {}, err);
  std::size_t passed = 0;
  const auto rows = benchmark_table();
  for (const BenchmarkRow& row : rows) {
    const Architecture arch = resolve_architecture(row.config);
    const std::int64_t structural = count_parameters(build_network(arch));
    const std::int64_t analytic = is_preset(row.config) ? analytic_param_count(arch)
                                                        : analytic_param_count(parse_config(row.config));
    const bool ok = structural == row.n_params && analytic == row.n_params;
    passed += ok;
    out << (ok ? "PASS " : "FAIL ") << row.index << '\t' << structural << '\t' << "expected " << row.n_params
        << '\t' << row.config << '\n';
  }
  out << passed << '/' << rows.size() << (passed == rows.size() ? " PASS" : " FAIL") << '\n';
  return passed == rows.size() ? kExitOk : kExitNumeric;
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t n = 200;
  double af_frac = 0.25;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  record_settings("synth", {{"seed", std::to_string(a.seed)}, {"n", std::to_string(a.n)},
                            {"af_frac", flt(a.af_frac)}, {"fs", "300"}},
                  a.out, err);
  const auto records = generate_synthetic(a.n, a.af_frac, a.seed);
  const auto manifest = write_dataset(records, a.out);
  out << manifest.string() << '\n';
  err << "wrote " << counts_text(count_classes(records)) << '\n';
  return kExitOk;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  int epochs = 300;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  double train_frac = 0.8;
  std::size_t crop_len = 3000;
  int oversample = 3;
  double lr = 1e-3;
  bool no_augment = false;
  bool f32 = false;
  bool quiet = false;
};

TrainSpec make_spec(const TrainArgs& a) {
  if (a.epochs < 1) throw UsageError("--epochs must be at least 1");
  if (a.batch < 1) throw UsageError("--batch must be at least 1");
  TrainSpec spec;
  spec.config = a.config;
  spec.epochs = a.epochs;
  spec.batch_size = a.batch;
  spec.crop_len = a.crop_len;
  spec.oversample_af = a.oversample;
  spec.augment = !a.no_augment;
  spec.adam.lr = a.lr;
  spec.seed = a.seed;
  spec.checkpoint_storage = a.f32 ? StorageType::kFloat32 : StorageType::kFloat64;
  return spec;
}

Settings train_settings(const TrainArgs& a, const std::string& config) {
  return {{"seed", std::to_string(a.seed)},
          {"config", config},
          {"data", a.data},
          {"epochs", std::to_string(a.epochs)},
          {"batch_size", std::to_string(a.batch)},
          {"crop_len", std::to_string(a.crop_len)},
          {"oversample_af", std::to_string(a.oversample)},
          {"augment", a.no_augment ? "off" : "on"},
          {"resample_spread", "0.1"},
          {"optimizer", "adam lr=" + flt(a.lr) + " beta1=0.9 beta2=0.999 eps=1e-08"},
          {"batchnorm", "eps=1e-05 momentum=0.1"},
          {"split_seed", std::to_string(a.split_seed)},
          {"train_fraction", flt(a.train_frac)},
          {"checkpoint_dtype", a.f32 ? "f32" : "f64"}};
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainSpec spec = make_spec(a);
  const Architecture arch = resolve_architecture(a.config);
  record_settings("train", train_settings(a, arch.id), a.out, err);
  const Prepared data = prepare_data(a.data, a.train_frac, a.split_seed);
  err << "data: " << counts_text(data.counts) << "; train " << data.train.size() << ", valid " << data.valid.size()
      << '\n';

  const std::filesystem::path out_dir = a.out;
  spec.checkpoint_dir = out_dir;
  spec.config_id = "1";
  if (!a.quiet) spec.on_epoch = [&err](int epoch, double loss) { err << "epoch " << epoch << " loss " << loss << '\n'; };
  TrainedModel trained = train(spec, data.train, data.valid);
  RunResult r = trained.result;
  r.checkpoint = std::filesystem::relative(r.checkpoint, out_dir).generic_string();

  std::ofstream results(out_dir / "results.csv", std::ios::trunc);
  results << kResultsHeader << '\n' << format_result_row(r) << '\n';
  std::ofstream losses(out_dir / "loss.csv", std::ios::trunc);
  losses << "epoch,loss\n";
  for (std::size_t i = 0; i < r.epoch_loss.size(); ++i) losses << i + 1 << ',' << flt(r.epoch_loss[i]) << '\n';

  out << "f1_af=" << flt(r.f1) << " f1_non_af=" << flt(r.f1_non_af) << " n_params=" << r.n_params
      << " checkpoint=" << (out_dir / r.checkpoint).string() << '\n';
  return kExitOk;
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string split = "all";
  std::uint64_t split_seed = 0;
  double train_frac = 0.8;
  std::size_t crop_len = 3000;
  bool both = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.split != "all" && a.split != "train" && a.split != "valid")
    throw UsageError("--split must be all, train or valid");
  Network net = load_checkpoint(a.model);
  record_settings("eval",
                  {{"seed", std::to_string(a.split_seed)},
                   {"config", net.config_id()},
                   {"model", a.model},
                   {"data", a.data},
                   {"split", a.split},
                   {"crop_len", std::to_string(a.crop_len)},
                   {"threshold", flt(kDecisionThreshold)}},
                  a.out, err);
  Dataset data;
  if (a.split == "all") {
    data = preprocess(load_dataset(a.data));
  } else {
    Prepared p = prepare_data(a.data, a.train_frac, a.split_seed);
    data = a.split == "train" ? std::move(p.train) : std::move(p.valid);
  }
  if (data.size() == 0) throw DataError("no records to evaluate");
  InferenceOptions opts;
  opts.crop_len = a.crop_len;
  const Evaluation ev = evaluate(net, data, opts);
  out << "f1_af=" << flt(ev.f1_af);
  if (a.both) out << " f1_non_af=" << flt(ev.f1_non_af);
  out << " records=" << data.size() << '\n';
  if (!a.out.empty()) {
    std::ofstream f(std::filesystem::path(a.out) / "predictions.csv", std::ios::trunc);
    f << "record_id,label,probability,prediction\n";
    for (std::size_t i = 0; i < data.size(); ++i)
      f << csv::quote(data.records[i].id) << ',' << data.labels[i] << ',' << flt(ev.probabilities[i]) << ','
        << ev.predictions[i] << '\n';
  }
  return kExitOk;
}

// --- bench ---------------------------------------------------------------

struct BenchArgs {
  std::string grid;
  std::string data;
  std::string out;
  int repeats = 5;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  double train_frac = 0.8;
  int epochs = 300;
  std::size_t batch = 32;
  std::size_t crop_len = 3000;
  int oversample = 3;
  int workers = 1;
  bool no_timing = false;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  if (a.repeats < 1) throw UsageError("--repeats must be at least 1");
  if (a.epochs < 1) throw UsageError("--epochs must be at least 1");
  std::ifstream g(a.grid);
  if (!g) throw DataError("cannot open grid file '" + a.grid + "'");
  std::stringstream text;
  text << g.rdbuf();
  const auto configs = read_config_lines(text.str());
  if (configs.empty()) throw UsageError("grid file '" + a.grid + "' lists no configurations");
  std::vector<GridEntry> grid;
  try {
    grid = make_grid(configs);
    for (const auto& e : grid) resolve_architecture(e.config);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  record_settings("bench",
                  {{"seed", std::to_string(a.seed)},
                   {"config", a.grid + " (" + std::to_string(grid.size()) + " configs)"},
                   {"data", a.data},
                   {"repeats", std::to_string(a.repeats)},
                   {"epochs", std::to_string(a.epochs)},
                   {"batch_size", std::to_string(a.batch)},
                   {"crop_len", std::to_string(a.crop_len)},
                   {"oversample_af", std::to_string(a.oversample)},
                   {"split_seed", std::to_string(a.split_seed)},
                   {"train_fraction", flt(a.train_frac)},
                   {"workers", std::to_string(a.workers)}},
                  a.out, err);
  const Prepared data = prepare_data(a.data, a.train_frac, a.split_seed);

  ExperimentOptions opts;
  opts.base.epochs = a.epochs;
  opts.base.batch_size = a.batch;
  opts.base.crop_len = a.crop_len;
  opts.base.oversample_af = a.oversample;
  opts.repeats = a.repeats;
  opts.base_seed = a.seed;
  opts.out_dir = a.out;
  opts.workers = a.workers;
  opts.record_wall_time = !a.no_timing;
  opts.on_run = [&err](const RunResult& r) {
    err << "run config " << r.config_id << " seed " << r.seed << " f1 " << flt(r.f1) << '\n';
  };
  const ExperimentSummary s = run_experiment(grid, opts, data.train, data.valid);
  for (const auto& f : s.failures) err << "failed: " << f << '\n';
  out << "executed=" << s.executed << " skipped=" << s.skipped << " failed=" << s.failures.size()
      << " results=" << (std::filesystem::path(a.out) / "results.csv").string() << '\n';
  return s.failures.empty() ? kExitOk : kExitNumeric;
}

// --- report --------------------------------------------------------------

int cmd_report(const std::string& results, const std::string& out_dir, std::size_t crop_len, std::ostream& out,
               std::ostream& err) {
  record_settings("report", {{"seed", "0"}, {"config", "n/a"}, {"results", results}}, out_dir, err);
  if (!std::filesystem::exists(results)) throw DataError("results file '" + results + "' not found");
  const auto runs = read_results(results);
  if (runs.empty()) throw DataError("results file '" + results + "' has no runs");
  const auto aggregates = aggregate(runs);
  emit_report(aggregates, out_dir, ReportMeta{crop_len, kDecisionThreshold, kVersion});
  out << "configs=" << aggregates.size() << " runs=" << runs.size() << " table="
      << (std::filesystem::path(out_dir) / "table_a1.csv").string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"1D ResNet benchmarks for atrial fibrillation classification", "afresnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string p_config;
  bool p_table = false;
  auto* params = app.add_subcommand("params", "Print trainable parameter counts");
  params->add_option("--config", p_config, "Config string or preset name");
  params->add_flag("--table", p_table, "Check every benchmark table row");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic ECG dataset");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--n", sa.n, "Number of records");
  synth->add_option("--af-frac", sa.af_frac, "Fraction of AF records");
  synth->add_option("--seed", sa.seed, "Random seed");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train one configuration");
  train_cmd->add_option("--config", ta.config, "Config string or preset name")->required();
  train_cmd->add_option("--data", ta.data, "Dataset manifest")->required();
  train_cmd->add_option("--out", ta.out, "Output directory");
  train_cmd->add_option("--epochs", ta.epochs, "Training epochs");
  train_cmd->add_option("--batch", ta.batch, "Batch size");
  train_cmd->add_option("--seed", ta.seed, "Training seed");
  train_cmd->add_option("--split-seed", ta.split_seed, "Seed of the train/validation split");
  train_cmd->add_option("--train-frac", ta.train_frac, "Training fraction of the split");
  train_cmd->add_option("--crop-len", ta.crop_len, "Crop length in samples");
  train_cmd->add_option("--oversample", ta.oversample, "Crops per AF record per epoch");
  train_cmd->add_option("--lr", ta.lr, "Adam learning rate");
  train_cmd->add_flag("--no-augment", ta.no_augment, "Disable resampling augmentation");
  train_cmd->add_flag("--f32", ta.f32, "Store the checkpoint in 32-bit floats");
  train_cmd->add_flag("--quiet", ta.quiet, "Do not print per-epoch losses");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval_cmd->add_option("--model", ea.model, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ea.data, "Dataset manifest")->required();
  eval_cmd->add_option("--out", ea.out, "Directory for predictions and provenance");
  eval_cmd->add_option("--split", ea.split, "all, train or valid");
  eval_cmd->add_option("--split-seed", ea.split_seed, "Seed of the train/validation split");
  eval_cmd->add_option("--train-frac", ea.train_frac, "Training fraction of the split");
  eval_cmd->add_option("--crop-len", ea.crop_len, "Inference window in samples");
  eval_cmd->add_flag("--both-classes", ea.both, "Also report the non-AF F1");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run the repeated benchmark grid");
  bench->add_option("--grid", ba.grid, "File with one config per line")->required();
  bench->add_option("--data", ba.data, "Dataset manifest")->required();
  bench->add_option("--out", ba.out, "Output directory")->required();
  bench->add_option("--repeats", ba.repeats, "Runs per config");
  bench->add_option("--seed", ba.seed, "Base seed");
  bench->add_option("--split-seed", ba.split_seed, "Seed of the train/validation split");
  bench->add_option("--train-frac", ba.train_frac, "Training fraction of the split");
  bench->add_option("--epochs", ba.epochs, "Training epochs");
  bench->add_option("--batch", ba.batch, "Batch size");
  bench->add_option("--crop-len", ba.crop_len, "Crop length in samples");
  bench->add_option("--oversample", ba.oversample, "Crops per AF record per epoch");
  bench->add_option("--workers", ba.workers, "Parallel runs");
  bench->add_flag("--no-timing", ba.no_timing, "Write wall_seconds as 0");

  std::string r_results, r_out;
  std::size_t r_crop = 3000;
  auto* report = app.add_subcommand("report", "Aggregate a results file into tables and figure data");
  report->add_option("--results", r_results, "results.csv")->required();
  report->add_option("--out", r_out, "Output directory")->required();
  report->add_option("--crop-len", r_crop, "Crop length recorded in the metadata");

  std::vector<std::string> owned{"afresnet"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : owned) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (params->parsed()) return cmd_params(p_config, p_table, out, err);
    if (synth->parsed()) return cmd_synth(sa, out, err);
    if (train_cmd->parsed()) return cmd_train(ta, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ea, out, err);
    if (bench->parsed()) return cmd_bench(ba, out, err);
    if (report->parsed()) return cmd_report(r_results, r_out, r_crop, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace afresnet
