#include "afresnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace afresnet {

namespace {

constexpr std::uint64_t kLayoutStream = 0x4c41'594f;  // "LAYO"
constexpr std::uint64_t kRecordStream = 0x5245'4344;  // "RECD"

// Share of non-AF records labelled N (the rest are O), taken from the
// 5076 / 2415 proportion of the public training set.
constexpr double kNormalShare = 5076.0 / (5076.0 + 2415.0);

struct Wave {
  double offset;  // seconds relative to the R peak
  double amplitude;
  double width;   // gaussian sigma, seconds
};

// Q, R, S and T waves; the P wave is added separately for regular rhythms.
constexpr Wave kQrst[] = {
    {-0.025, -0.12, 0.008},
    {0.0, 1.0, 0.012},
    {0.028, -0.22, 0.010},
    {0.26, 0.30, 0.045},
};
constexpr Wave kPWave = {-0.16, 0.15, 0.022};

void add_wave(std::vector<double>& signal, double fs, double center_s, const Wave& w) {
  const double c = (center_s + w.offset) * fs;
  const double sigma = w.width * fs;
  const auto lo = static_cast<std::ptrdiff_t>(std::floor(c - 5 * sigma));
  const auto hi = static_cast<std::ptrdiff_t>(std::ceil(c + 5 * sigma));
  const auto n = static_cast<std::ptrdiff_t>(signal.size());
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, lo); i <= std::min(hi, n - 1); ++i) {
    const double z = (static_cast<double>(i) - c) / sigma;
    signal[static_cast<std::size_t>(i)] += w.amplitude * std::exp(-0.5 * z * z);
  }
}

}  // namespace

SyntheticEcg synthesize_ecg(bool af, std::size_t n_samples, Rng& rng, const SyntheticOptions& o) {
  SyntheticEcg ecg;
  ecg.signal.assign(n_samples, 0.0);
  const double duration = static_cast<double>(n_samples) / o.fs;

  std::normal_distribution<double> regular(o.rr_mean, o.rr_jitter);
  std::uniform_real_distribution<double> irregular(o.af_rr_min, o.af_rr_max);
  auto next_rr = [&] { return af ? irregular(rng) : std::max(0.3, regular(rng)); };

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double t = unit(rng) * next_rr();
  while (t < duration) {
    for (const Wave& w : kQrst) add_wave(ecg.signal, o.fs, t, w);
    if (!af) add_wave(ecg.signal, o.fs, t, kPWave);
    ecg.r_peaks.push_back(static_cast<std::size_t>(std::lround(t * o.fs)));
    t += next_rr();
  }
  while (!ecg.r_peaks.empty() && ecg.r_peaks.back() >= n_samples) ecg.r_peaks.pop_back();

  std::normal_distribution<double> noise(0.0, o.noise_std);
  for (double& v : ecg.signal) v += noise(rng);

  ecg.inverted = unit(rng) < o.invert_fraction;
  if (ecg.inverted)
    for (double& v : ecg.signal) v = -v;
  return ecg;
}

std::vector<Record> generate_synthetic(std::size_t n_records, double af_fraction, std::uint64_t seed,
                                       const SyntheticOptions& options) {
  if (n_records == 0) throw std::invalid_argument("synthetic dataset needs at least one record");
  if (!(af_fraction >= 0.0 && af_fraction <= 1.0)) throw std::invalid_argument("af_fraction must lie in [0, 1]");

  const auto n_af = static_cast<std::size_t>(std::llround(af_fraction * static_cast<double>(n_records)));
  std::vector<bool> is_af(n_records, false);
  std::fill(is_af.begin(), is_af.begin() + static_cast<std::ptrdiff_t>(n_af), true);
  Rng layout = make_rng(seed, kLayoutStream);
  std::shuffle(is_af.begin(), is_af.end(), layout);

  const auto min_len = static_cast<std::size_t>(std::lround(options.min_seconds * options.fs));
  const auto max_len = static_cast<std::size_t>(std::lround(options.max_seconds * options.fs));

  std::vector<Record> records;
  records.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    Rng rng = make_rng(seed, kRecordStream, i);
    std::uniform_int_distribution<std::size_t> length(min_len, max_len);
    const std::size_t n = length(rng);
    SyntheticEcg ecg = synthesize_ecg(is_af[i], n, rng, options);

    Record r;
    char id[32];
    std::snprintf(id, sizeof id, "syn%05zu", i);
    r.id = id;
    r.fs = options.fs;
    if (is_af[i]) {
      r.label = Rhythm::kAF;
    } else {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      r.label = unit(rng) < kNormalShare ? Rhythm::kNormal : Rhythm::kOther;
    }
    r.signal = std::move(ecg.signal);
    for (double& v : r.signal) v = static_cast<float>(v);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace afresnet
