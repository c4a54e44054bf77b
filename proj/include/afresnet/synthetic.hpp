#pragma once

#include <cstdint>
#include <vector>

#include "afresnet/data.hpp"

namespace afresnet {

// Pseudo-ECG generator used as a desk-scale stand-in for real recordings.
struct SyntheticOptions {
  double fs = 300.0;
  double min_seconds = 9.0;
  double max_seconds = 61.0;
  double rr_mean = 0.8;       // regular rhythm
  double rr_jitter = 0.02;    // std of regular RR intervals
  double af_rr_min = 0.4;     // AF: RR ~ U[af_rr_min, af_rr_max]
  double af_rr_max = 1.2;
  double noise_std = 0.05;
  double invert_fraction = 0.3;
};

struct SyntheticEcg {
  std::vector<double> signal;
  std::vector<std::size_t> r_peaks;  // sample index of every R wave
  bool inverted = false;
};

// One trace of `n_samples` samples. AF traces have irregular RR intervals and
// no P waves.
SyntheticEcg synthesize_ecg(bool af, std::size_t n_samples, Rng& rng, const SyntheticOptions& options = {});

// round(n * af_fraction) AF records (label A), the rest split between N and
// O; lengths uniform in [min_seconds, max_seconds]. Samples are rounded to
// f32 precision so a write/load cycle reproduces them exactly.
std::vector<Record> generate_synthetic(std::size_t n_records, double af_fraction, std::uint64_t seed,
                                       const SyntheticOptions& options = {});

}  // namespace afresnet
