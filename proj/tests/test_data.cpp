#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "afresnet/data.hpp"
#include "afresnet/synthetic.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace afresnet;

namespace {

Record make_record(const std::string& id, Rhythm label, std::size_t length = 10, double value = 1.0) {
  return Record{id, std::vector<double>(length, value), 300.0, label};
}

Dataset make_dataset(std::size_t n_af, std::size_t n_non_af, std::size_t length = 10) {
  std::vector<Record> records;
  for (std::size_t i = 0; i < n_non_af; ++i) records.push_back(make_record("n" + std::to_string(i), Rhythm::kNormal, length));
  for (std::size_t i = 0; i < n_af; ++i) records.push_back(make_record("a" + std::to_string(i), Rhythm::kAF, length));
  return preprocess(std::move(records), false);
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

double rr_cv(const std::vector<std::size_t>& peaks) {
  std::vector<double> rr;
  for (std::size_t i = 1; i < peaks.size(); ++i) rr.push_back(static_cast<double>(peaks[i] - peaks[i - 1]));
  double mean = 0.0;
  for (double v : rr) mean += v;
  mean /= static_cast<double>(rr.size());
  double ss = 0.0;
  for (double v : rr) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(rr.size())) / mean;
}

}  // namespace

// --- labels and ingestion ----------------------------------------------------

TEST_CASE("rhythm tokens") {
  CHECK(parse_rhythm("A") == Rhythm::kAF);
  CHECK(parse_rhythm("N") == Rhythm::kNormal);
  CHECK(parse_rhythm("O") == Rhythm::kOther);
  CHECK(parse_rhythm("~") == Rhythm::kNoisy);
  CHECK_THROWS_AS(parse_rhythm("X"), DataError);
  for (Rhythm r : {Rhythm::kAF, Rhythm::kNormal, Rhythm::kOther, Rhythm::kNoisy})
    CHECK(parse_rhythm(std::string(1, rhythm_token(r))) == r);
}

TEST_CASE("toy manifest loads in declared order") {
  testing::TempDir dir("manifest");
  std::filesystem::create_directories(dir / "sig");
  {
    std::ofstream(dir / "sig" / "b.csv") << "0.5\n-1.25\n2\n";
    std::ofstream f(dir / "sig" / "a.f32", std::ios::binary);
    for (float v : {1.0f, 2.0f}) f.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  std::ofstream(dir / "m.csv") << "record_id,path,label,fs\nrecB,sig/b.csv,O,250\nrecA,sig/a.f32,A,300\n";
  const auto records = load_dataset(dir / "m.csv");
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "recB");
  CHECK(records[0].signal == std::vector<double>{0.5, -1.25, 2.0});
  CHECK(records[0].fs == 250.0);
  CHECK(records[0].label == Rhythm::kOther);
  CHECK(records[1].id == "recA");
  CHECK(records[1].signal == std::vector<double>{1.0, 2.0});
  const ClassCounts c = count_classes(records);
  CHECK(c.af == 1);
  CHECK(c.other == 1);
  CHECK(c.total() == 2);
}

TEST_CASE("ingestion errors name the record") {
  testing::TempDir dir("manifest_err");
  auto expect_error = [&](const std::string& manifest, const std::string& fragment) {
    std::ofstream(dir / "m.csv", std::ios::trunc) << manifest;
    try {
      load_dataset(dir / "m.csv");
      FAIL("accepted: " << manifest);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  std::ofstream(dir / "empty.csv") << "";
  std::ofstream(dir / "one.csv") << "1\n";
  expect_error("record_id,path,label,fs\nghost,nope.f32,A,300\n", "ghost");
  expect_error("record_id,path,label,fs\nr1,one.csv,Q,300\n", "r1");
  expect_error("record_id,path,label,fs\nr2,empty.csv,N,300\n", "r2");
  expect_error("record_id,path,label,fs\nr3,one.csv,N,-5\n", "r3");
  expect_error("id,file\n", "header");
  CHECK_THROWS_AS(load_dataset(dir / "absent.csv"), DataError);
}

TEST_CASE("write and reload synthetic data exactly") {
  testing::TempDir dir("roundtrip");
  const auto records = generate_synthetic(12, 0.5, 3);
  const auto manifest = write_dataset(records, dir.path());
  const auto loaded = load_dataset(manifest);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].id == records[i].id);
    CHECK(loaded[i].label == records[i].label);
    CHECK(loaded[i].signal == records[i].signal);
  }
}

// --- preprocessing -----------------------------------------------------------

TEST_CASE("noisy records dropped and classes merged") {
  std::vector<Record> records{make_record("a", Rhythm::kAF), make_record("n", Rhythm::kNormal),
                              make_record("o", Rhythm::kOther), make_record("x", Rhythm::kNoisy)};
  const Dataset d = preprocess(records);
  CHECK(d.labels == std::vector<int>{1, 0, 0});
  CHECK(d.size() == 3);
  CHECK(d.count(kLabelAF) == 1);
  CHECK(d.count(kLabelNonAF) == 2);
  for (const Record& r : d.records) CHECK(r.label != Rhythm::kNoisy);

  const Dataset again = preprocess(d.records);
  CHECK(again.labels == d.labels);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(again.records[i].signal == d.records[i].signal);
}

TEST_CASE("all-noisy input gives an empty dataset") {
  std::vector<Record> records{make_record("x", Rhythm::kNoisy), make_record("y", Rhythm::kNoisy)};
  CHECK(preprocess(records).size() == 0);
}

TEST_CASE("flip detection on generated signals") {
  SyntheticOptions opts;
  opts.invert_fraction = 0.0;
  Rng rng = make_rng(4, 0);
  for (bool af : {false, true}) {
    const SyntheticEcg ecg = synthesize_ecg(af, 3000, rng, opts);
    CHECK_FALSE(ecg.inverted);
    CHECK(orientation_statistic(ecg.signal) > 0.0);
    CHECK(flip_if_inverted(ecg.signal) == ecg.signal);
    std::vector<double> neg = ecg.signal;
    for (double& v : neg) v = -v;
    const auto fixed = flip_if_inverted(neg);
    CHECK(fixed == ecg.signal);
    CHECK(orientation_statistic(fixed) >= 0.0);
    CHECK(flip_if_inverted(fixed) == fixed);
  }
  const std::vector<double> zeros(100, 0.0);
  CHECK(flip_if_inverted(zeros) == zeros);
  CHECK(orientation_statistic(zeros) == 0.0);
}

TEST_CASE("generator marks inverted records and preprocessing restores them") {
  const auto records = generate_synthetic(60, 0.3, 8);
  std::size_t negative = 0;
  for (const Record& r : records) negative += orientation_statistic(r.signal) < 0.0;
  CHECK(negative > 0);
  const Dataset d = preprocess(records);
  for (const Record& r : d.records) CHECK(orientation_statistic(r.signal) >= 0.0);
}

// --- split -------------------------------------------------------------------

TEST_CASE("split sizes and partition") {
  const Dataset big = make_dataset(758, 7491, 1);
  const auto [train, valid] = split(big, 0.8, 0);
  CHECK(train.size() == 6599);
  CHECK(valid.size() == 1650);
  std::set<std::string> ids;
  for (const Record& r : train.records) ids.insert(r.id);
  for (const Record& r : valid.records) CHECK(ids.insert(r.id).second);
  CHECK(ids.size() == 8249);

  const auto [t2, v2] = split(big, 0.8, 0);
  for (std::size_t i = 0; i < train.size(); ++i) CHECK(t2.records[i].id == train.records[i].id);
  const auto [t3, v3] = split(big, 0.8, 1);
  bool differs = false;
  for (std::size_t i = 0; i < train.size(); ++i) differs |= t3.records[i].id != train.records[i].id;
  CHECK(differs);

  const auto [a, b] = split(make_dataset(1, 1), 0.5, 3);
  CHECK(a.size() == 1);
  CHECK(b.size() == 1);
  CHECK_THROWS_AS(split(big, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(split(big, 0.0, 0), std::invalid_argument);
}

TEST_CASE("split keeps labels attached") {
  const Dataset d = make_dataset(20, 30);
  const auto [train, valid] = split(d, 0.7, 5);
  for (const Dataset* part : {&train, &valid})
    for (std::size_t i = 0; i < part->size(); ++i)
      CHECK(part->labels[i] == (part->records[i].label == Rhythm::kAF ? 1 : 0));
  CHECK(train.count(1) + valid.count(1) == 20);
}

// --- crops and resampling -------------------------------------------------------

TEST_CASE("crop start is uniform") {
  std::vector<double> signal(18000);
  for (std::size_t i = 0; i < signal.size(); ++i) signal[i] = static_cast<double>(i);
  Rng rng = make_rng(0, 99);
  constexpr int kBins = 20, kDraws = 10000;
  std::array<int, kBins> counts{};
  for (int d = 0; d < kDraws; ++d) {
    const auto crop = sample_crop(signal, 3000, rng);
    REQUIRE(crop.size() == 3000);
    const auto start = static_cast<std::size_t>(crop[0]);
    REQUIRE(start <= 15000);
    CHECK(crop.back() == static_cast<double>(start + 2999));
    ++counts[std::min<std::size_t>(kBins - 1, start * kBins / 15001)];
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(kDraws) / kBins;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99th percentile of chi-square with 19 degrees of freedom.
  CHECK(chi2 < 36.191);
}

TEST_CASE("short signals are tiled, equal lengths copied") {
  std::vector<double> s(2700);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i % 97);
  Rng rng = make_rng(1, 1);
  const auto crop = sample_crop(s, 3000, rng);
  REQUIRE(crop.size() == 3000);
  for (std::size_t i = 0; i < 3000; ++i) CHECK(crop[i] == s[i % 2700]);
  const auto copy = sample_crop(s, 2700, rng);
  CHECK(copy == s);
  CHECK(tile_to_length(std::vector<double>{1, 2}, 5) == std::vector<double>{1, 2, 1, 2, 1});
}

TEST_CASE("resample identity, ramp and endpoints") {
  std::vector<double> s = {3, 1, 4, 1, 5, 9, 2, 6};
  CHECK(resample(s, 300, 300) == s);
  std::vector<double> ramp(1000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.5 + 0.01 * static_cast<double>(i);
  for (double new_fs : {150.0, 270.0, 299.0, 330.0, 600.0}) {
    const auto r = resample(ramp, 300, new_fs);
    CHECK(r.size() == static_cast<std::size_t>(std::llround(1000 * new_fs / 300)));
    CHECK(r.front() == ramp.front());
    CHECK(r.back() == ramp.back());
    const double slope = (r.back() - r.front()) / static_cast<double>(r.size() - 1);
    for (std::size_t j = 0; j < r.size(); ++j) CHECK(std::abs(r[j] - (r.front() + slope * static_cast<double>(j))) < 1e-12);
  }
}

TEST_CASE("resample sinusoid within the interpolation error bound") {
  constexpr double fs = 300.0, f = 5.0;
  const double w = 2.0 * std::numbers::pi * f;
  // Linear interpolation error is at most h^2 max|x''| / 8.
  const double bound = (1.0 / fs) * (1.0 / fs) * w * w / 8.0;
  for (std::size_t len : {3000, 3001, 4500}) {
    std::vector<double> s(len);
    for (std::size_t i = 0; i < len; ++i) s[i] = std::sin(w * static_cast<double>(i) / fs);
    const auto r = resample(s, fs, 150.0);
    const double step = static_cast<double>(len - 1) / static_cast<double>(r.size() - 1);
    double worst = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j)
      worst = std::max(worst, std::abs(r[j] - std::sin(w * static_cast<double>(j) * step / fs)));
    CAPTURE(len);
    CAPTURE(worst);
    CHECK(worst <= bound);
    if (len % 2 == 1) CHECK(worst < 1e-3);  // grid-aligned: every output lands on an input sample
  }
}

// --- batching ----------------------------------------------------------------

TEST_CASE("crop counts per epoch") {
  BatchOptions opts;
  opts.crop_len = 8;
  opts.augment = false;
  const Dataset small = make_dataset(2, 10);
  EpochBatches e = make_batches(small, opts, make_rng(0, 0));
  CHECK(e.num_crops() == 16);

  opts.oversample_af = 1;
  CHECK(make_batches(small, opts, make_rng(0, 0)).num_crops() == 12);

  opts.oversample_af = 3;
  opts.batch_size = 32;
  const Dataset full = make_dataset(606, 5993, 1);
  const EpochBatches big = make_batches(full, opts, make_rng(0, 0));
  CHECK(big.num_crops() == 7811);
  CHECK(big.num_batches() == 245);
}

TEST_CASE("oversampling ratio is exact on random datasets") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t a = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 80)(rng);
    const int factor = std::uniform_int_distribution<int>(1, 5)(rng);
    const Dataset d = make_dataset(a, n, 12);
    BatchOptions opts;
    opts.crop_len = 6;
    opts.batch_size = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    opts.oversample_af = factor;
    EpochBatches e = make_batches(d, opts, make_rng(trial, 0));
    std::size_t crops_a = 0, crops_n = 0, batches = 0;
    while (auto b = e.next()) {
      ++batches;
      CHECK(b->inputs.dims() == Shape{b->labels.size(), 1, 6});
      CHECK(b->labels.size() <= opts.batch_size);
      for (int l : b->labels) (l == kLabelAF ? crops_a : crops_n)++;
    }
    CHECK(batches == e.num_batches());
    // crops_a / crops_n == factor * a / n, compared without division
    CHECK(crops_a * n == static_cast<std::size_t>(factor) * a * crops_n);
    CHECK(crops_a == static_cast<std::size_t>(factor) * a);
    CHECK(crops_n == n);
  }
}

TEST_CASE("augmented crops keep their length and epochs are reproducible") {
  const auto records = generate_synthetic(10, 0.3, 2);
  const Dataset d = preprocess(records);
  BatchOptions opts;
  opts.batch_size = 4;
  auto run = [&](std::uint64_t seed) {
    std::vector<double> all;
    EpochBatches e = make_batches(d, opts, make_rng(seed, 7));
    while (auto b = e.next()) {
      CHECK(b->inputs.dim(2) == 3000);
      all.insert(all.end(), b->inputs.values().begin(), b->inputs.values().end());
    }
    return all;
  };
  const auto a = run(1), b = run(1), c = run(2);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("last batch may be short") {
  BatchOptions opts;
  opts.crop_len = 4;
  opts.batch_size = 5;
  opts.augment = false;
  const Dataset d = make_dataset(1, 9);
  EpochBatches e = make_batches(d, opts, make_rng(0, 0));
  std::vector<std::size_t> sizes;
  while (auto b = e.next()) sizes.push_back(b->labels.size());
  CHECK(sizes == std::vector<std::size_t>{5, 5, 2});
}

// --- synthetic generator --------------------------------------------------------

TEST_CASE("generator is deterministic to the byte") {
  testing::TempDir a("syn_a"), b("syn_b");
  write_dataset(generate_synthetic(100, 0.5, 17), a.path());
  write_dataset(generate_synthetic(100, 0.5, 17), b.path());
  CHECK(file_bytes(a / "manifest.csv") == file_bytes(b / "manifest.csv"));
  for (const auto& entry : std::filesystem::directory_iterator(a / "signals"))
    CHECK(file_bytes(entry.path()) == file_bytes(b / "signals" / entry.path().filename().string()));
}

TEST_CASE("generator lengths, classes and sampling rate") {
  const auto records = generate_synthetic(200, 0.25, 5);
  REQUIRE(records.size() == 200);
  std::size_t af = 0;
  for (const Record& r : records) {
    CHECK(r.fs == 300.0);
    CHECK(r.signal.size() >= 2700);
    CHECK(r.signal.size() <= 18300);
    CHECK(r.label != Rhythm::kNoisy);
    af += r.label == Rhythm::kAF;
  }
  CHECK(af == 50);
}

TEST_CASE("RR variability separates the classes") {
  Rng rng = make_rng(6, 0);
  for (int i = 0; i < 20; ++i) {
    const SyntheticEcg af = synthesize_ecg(true, 18000, rng);
    const SyntheticEcg normal = synthesize_ecg(false, 18000, rng);
    CHECK(rr_cv(af.r_peaks) > 0.2);
    CHECK(rr_cv(normal.r_peaks) < 0.2);
  }
}
