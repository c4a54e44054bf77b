#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "afresnet/tensor.hpp"

namespace afresnet {

using Rng = std::mt19937_64;

// Seed-derived stream, independent per (seed, stream, index).
Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

enum class Rhythm { kAF, kNormal, kOther, kNoisy };

// 'A', 'N', 'O', '~'
char rhythm_token(Rhythm r);
// Throws DataError on anything but A, N, O, ~.
Rhythm parse_rhythm(std::string_view token);

inline constexpr int kLabelNonAF = 0;
inline constexpr int kLabelAF = 1;

struct Record {
  std::string id;
  std::vector<double> signal;
  double fs = 300.0;
  Rhythm label = Rhythm::kNormal;
};

enum class Split { kAll, kTrain, kValid };

// Binary AF vs non-AF collection; labels[i] belongs to records[i].
struct Dataset {
  std::vector<Record> records;
  std::vector<int> labels;
  Split split = Split::kAll;

  std::size_t size() const { return records.size(); }
  std::size_t count(int label) const;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClassCounts {
  std::size_t af = 0, normal = 0, other = 0, noisy = 0;
  std::size_t total() const { return af + normal + other + noisy; }
};

ClassCounts count_classes(std::span<const Record> records);

// Manifest: CSV with header `record_id,path,label,fs`. Relative paths resolve
// against the manifest directory. Signals are raw little-endian f32 (.f32) or
// one sample per line (.csv).
std::vector<Record> load_dataset(const std::filesystem::path& manifest);
std::vector<double> load_signal(const std::filesystem::path& path);

// Writes <dir>/signals/<id>.f32 plus <dir>/<manifest_name>; returns the
// manifest path.
std::filesystem::path write_dataset(std::span<const Record> records, const std::filesystem::path& dir,
                                    std::string_view manifest_name = "manifest.csv");

// Drops noisy records, merges N and O into non-AF, and flips inverted
// signals. An all-noisy input yields an empty dataset and a warning on
// std::clog.
Dataset preprocess(std::vector<Record> records, bool flip = true);

// Skewness of the mean-removed signal; negative means R-peaks point down.
double orientation_statistic(std::span<const double> signal);
std::vector<double> flip_if_inverted(std::vector<double> signal);

// Seeded shuffle, then floor(fraction * n) records to train, the rest to
// valid. Record order inside each part follows the shuffle.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

// Repeats the signal end to end until it reaches `length` samples.
std::vector<double> tile_to_length(std::span<const double> signal, std::size_t length);

// Uniform random start when the signal is long enough, tiling otherwise.
std::vector<double> sample_crop(std::span<const double> signal, std::size_t crop_len, Rng& rng);

// Linear interpolation onto round(len * new_fs / fs) uniformly spaced points
// spanning the original first and last samples.
std::vector<double> resample(std::span<const double> signal, double fs, double new_fs);

struct BatchOptions {
  std::size_t batch_size = 32;
  std::size_t crop_len = 3000;
  int oversample_af = 3;
  bool augment = true;
  double resample_spread = 0.1;  // new_fs ~ U[(1-s) fs, (1+s) fs]
};

struct Batch {
  Tensor inputs;  // [B, 1, crop_len]
  std::vector<int> labels;
  std::vector<std::size_t> record_indices;
};

// One epoch of training crops: every non-AF record contributes one crop and
// every AF record `oversample_af` crops, in shuffled order. Batches are
// materialized lazily; the crop order is fixed at construction.
class EpochBatches {
 public:
  EpochBatches(const Dataset& data, const BatchOptions& options, Rng rng);
  EpochBatches(Dataset&&, const BatchOptions&, Rng) = delete;

  std::size_t num_crops() const { return order_.size(); }
  std::size_t num_batches() const;
  const std::vector<std::size_t>& crop_order() const { return order_; }

  std::optional<Batch> next();

 private:
  const Dataset& data_;
  BatchOptions options_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

EpochBatches make_batches(const Dataset& train, const BatchOptions& options, Rng rng);
EpochBatches make_batches(Dataset&&, const BatchOptions&, Rng) = delete;

}  // namespace afresnet
