#include "afresnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "afresnet/csv.hpp"

namespace afresnet {

namespace {

constexpr std::uint64_t kSplitStream = 0x5350'4c49;  // "SPLI"

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

char rhythm_token(Rhythm r) {
  switch (r) {
    case Rhythm::kAF: return 'A';
    case Rhythm::kNormal: return 'N';
    case Rhythm::kOther: return 'O';
    case Rhythm::kNoisy: return '~';
  }
  return '?';
}

Rhythm parse_rhythm(std::string_view token) {
  if (token == "A") return Rhythm::kAF;
  if (token == "N") return Rhythm::kNormal;
  if (token == "O") return Rhythm::kOther;
  if (token == "~") return Rhythm::kNoisy;
  throw DataError("bad label token '" + std::string(token) + "' (expected A, N, O or ~)");
}

std::size_t Dataset::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

ClassCounts count_classes(std::span<const Record> records) {
  ClassCounts c;
  for (const Record& r : records) {
    switch (r.label) {
      case Rhythm::kAF: ++c.af; break;
      case Rhythm::kNormal: ++c.normal; break;
      case Rhythm::kOther: ++c.other; break;
      case Rhythm::kNoisy: ++c.noisy; break;
    }
  }
  return c;
}

// --- I/O -----------------------------------------------------------------

std::vector<double> load_signal(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open signal file '" + path.string() + "'");
  std::vector<double> out;
  if (ext == ".f32") {
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    if (bytes.size() % 4 != 0) throw DataError("'" + path.string() + "' is not a whole number of f32 samples");
    out.resize(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
      float f;
      std::memcpy(&f, bytes.data() + 4 * i, 4);
      out[i] = f;
    }
  } else if (ext == ".csv") {
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (t.empty()) continue;
      try {
        out.push_back(std::stod(t));
      } catch (const std::exception&) {
        throw DataError("'" + path.string() + "': cannot parse sample '" + t + "'");
      }
    }
  } else {
    throw DataError("unsupported signal format '" + ext + "' for '" + path.string() + "'");
  }
  return out;
}

std::vector<Record> load_dataset(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest '" + manifest.string() + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "record_id,path,label,fs")
    throw DataError("manifest '" + manifest.string() + "' must start with header record_id,path,label,fs");
  const std::filesystem::path base = manifest.parent_path();
  std::vector<Record> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != 4)
      throw DataError("manifest line " + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(f.size()));
    Record r;
    r.id = trim(f[0]);
    try {
      r.label = parse_rhythm(trim(f[2]));
    } catch (const DataError& e) {
      throw DataError("record '" + r.id + "': " + e.what());
    }
    try {
      r.fs = std::stod(f[3]);
    } catch (const std::exception&) {
      throw DataError("record '" + r.id + "': bad sampling rate '" + f[3] + "'");
    }
    if (!(r.fs > 0.0)) throw DataError("record '" + r.id + "': sampling rate must be positive");
    std::filesystem::path p = trim(f[1]);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) throw DataError("record '" + r.id + "': signal file '" + p.string() + "' missing");
    try {
      r.signal = load_signal(p);
    } catch (const DataError& e) {
      throw DataError("record '" + r.id + "': " + e.what());
    }
    if (r.signal.empty()) throw DataError("record '" + r.id + "': signal has length 0");
    records.push_back(std::move(r));
  }
  return records;
}

std::filesystem::path write_dataset(std::span<const Record> records, const std::filesystem::path& dir,
                                    std::string_view manifest_name) {
  std::filesystem::create_directories(dir / "signals");
  const std::filesystem::path manifest = dir / manifest_name;
  std::ofstream m(manifest);
  if (!m) throw DataError("cannot write manifest '" + manifest.string() + "'");
  m << "record_id,path,label,fs\n";
  for (const Record& r : records) {
    const std::string rel = "signals/" + r.id + ".f32";
    std::ofstream s(dir / rel, std::ios::binary | std::ios::trunc);
    if (!s) throw DataError("cannot write signal '" + (dir / rel).string() + "'");
    for (double v : r.signal) {
      const float f = static_cast<float>(v);
      s.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
    m << csv::quote(r.id) << ',' << rel << ',' << rhythm_token(r.label) << ',' << csv::format_float(r.fs) << '\n';
  }
  if (!m) throw DataError("failed writing manifest '" + manifest.string() + "'");
  return manifest;
}

// --- preprocessing -------------------------------------------------------

double orientation_statistic(std::span<const double> signal) {
  if (signal.empty()) return 0.0;
  const double n = static_cast<double>(signal.size());
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : signal) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

std::vector<double> flip_if_inverted(std::vector<double> signal) {
  if (orientation_statistic(signal) < 0.0)
    for (double& v : signal) v = -v;
  return signal;
}

Dataset preprocess(std::vector<Record> records, bool flip) {
  Dataset out;
  for (Record& r : records) {
    if (r.label == Rhythm::kNoisy) continue;
    if (flip) r.signal = flip_if_inverted(std::move(r.signal));
    out.labels.push_back(r.label == Rhythm::kAF ? kLabelAF : kLabelNonAF);
    out.records.push_back(std::move(r));
  }
  if (out.records.empty() && !records.empty())
    std::clog << "warning: preprocessing removed every record (all were noisy)\n";
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = make_rng(seed, kSplitStream);
  std::shuffle(idx.begin(), idx.end(), rng);
  // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(data.size()) + 1e-9));
  Dataset train, valid;
  train.split = Split::kTrain;
  valid.split = Split::kValid;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    Dataset& dst = k < n_train ? train : valid;
    dst.records.push_back(data.records[idx[k]]);
    dst.labels.push_back(data.labels[idx[k]]);
  }
  return {std::move(train), std::move(valid)};
}

// --- crops and augmentation ---------------------------------------------

std::vector<double> tile_to_length(std::span<const double> signal, std::size_t length) {
  if (signal.empty()) throw DataError("cannot tile an empty signal");
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = signal[i % signal.size()];
  return out;
}

std::vector<double> sample_crop(std::span<const double> signal, std::size_t crop_len, Rng& rng) {
  if (crop_len == 0) throw std::invalid_argument("crop length must be positive");
  if (signal.size() < crop_len) return tile_to_length(signal, crop_len);
  std::uniform_int_distribution<std::size_t> start_dist(0, signal.size() - crop_len);
  const std::size_t start = start_dist(rng);
  return std::vector<double>(signal.begin() + static_cast<std::ptrdiff_t>(start),
                             signal.begin() + static_cast<std::ptrdiff_t>(start + crop_len));
}

std::vector<double> resample(std::span<const double> signal, double fs, double new_fs) {
  if (!(new_fs > 0.0) || !(fs > 0.0)) throw std::invalid_argument("sampling rates must be positive");
  if (signal.empty()) return {};
  if (new_fs == fs) return std::vector<double>(signal.begin(), signal.end());
  const std::size_t len = signal.size();
  const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(len) * new_fs / fs)));
  std::vector<double> out(m);
  if (m == 1 || len == 1) {
    std::fill(out.begin(), out.end(), signal[0]);
    if (m > 1) out.back() = signal[len - 1];
    return out;
  }
  const double span = static_cast<double>(len - 1);
  const double steps = static_cast<double>(m - 1);
  for (std::size_t j = 0; j < m; ++j) {
    const double pos = static_cast<double>(j) * span / steps;
    auto i = static_cast<std::size_t>(pos);
    if (i >= len - 1) {
      out[j] = signal[len - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out[j] = signal[i] + frac * (signal[i + 1] - signal[i]);
  }
  return out;
}

EpochBatches::EpochBatches(const Dataset& data, const BatchOptions& options, Rng rng)
    : data_(data), options_(options), rng_(std::move(rng)) {
  if (data.size() == 0) throw DataError("cannot build batches from an empty training set");
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (options.oversample_af < 1) throw std::invalid_argument("oversampling factor must be at least 1");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int copies = data.labels[i] == kLabelAF ? options.oversample_af : 1;
    for (int c = 0; c < copies; ++c) order_.push_back(i);
  }
  std::shuffle(order_.begin(), order_.end(), rng_);
}

std::size_t EpochBatches::num_batches() const {
  return (order_.size() + options_.batch_size - 1) / options_.batch_size;
}

std::optional<Batch> EpochBatches::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t n = std::min(options_.batch_size, order_.size() - cursor_);
  const std::size_t len = options_.crop_len;
  Batch b;
  b.inputs = Tensor({n, 1, len});
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = order_[cursor_ + k];
    const Record& r = data_.records[idx];
    std::vector<double> crop;
    if (options_.augment) {
      std::uniform_real_distribution<double> rate(r.fs * (1.0 - options_.resample_spread),
                                                  r.fs * (1.0 + options_.resample_spread));
      const std::vector<double> stretched = resample(r.signal, r.fs, rate(rng_));
      crop = sample_crop(stretched, len, rng_);
    } else {
      crop = sample_crop(r.signal, len, rng_);
    }
    std::copy(crop.begin(), crop.end(), &b.inputs.at(k, 0, 0));
    b.labels.push_back(data_.labels[idx]);
    b.record_indices.push_back(idx);
  }
  cursor_ += n;
  return b;
}

EpochBatches make_batches(const Dataset& train, const BatchOptions& options, Rng rng) {
  return EpochBatches(train, options, std::move(rng));
}

}  // namespace afresnet
