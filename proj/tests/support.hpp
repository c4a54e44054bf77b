#pragma once

// Shared fixtures for the test binaries: the published benchmark rows as
// literals, naive reference kernels, and small helpers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "afresnet/tensor.hpp"

namespace testing {

struct BenchRow {
  int index;
  const char* config;
  std::int64_t n_params;
};

inline const std::array<BenchRow, 30> kBenchRows{{
    {1, "8; cna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 3658},
    {2, "32; cna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 4258},
    {3, "8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 7026},
    {4, "8; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 7026},
    {5, "32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 7626},
    {6, "32; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 7626},
    {7, "8; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 10522},
    {8, "32; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 11122},
    {9, "8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 13762},
    {10, "32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 14362},
    {11, "8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 20754},
    {12, "32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 21354},
    {13, "32; cnacna; [4, 8, 12, 20, 32, 52, 84]; [1, 1, 1, 1, 1, 1, 1]", 64202},
    {14, "32; ncnacn; [4, 8, 12, 20, 32, 52, 84]; [1, 1, 1, 1, 1, 1, 1]", 64522},
    {15, "32; cnacna; [4, 8, 12, 20, 32, 52, 84]; [2, 3, 4, 5, 4, 3, 2]", 172154},
    {16, "32; ncnacn; [4, 8, 12, 20, 32, 52, 84]; [2, 3, 4, 5, 4, 3, 2]", 173314},
    {17, "8; cna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 176450},
    {18, "32; cna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 177050},
    {19, "8; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 439594},
    {20, "8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 439594},
    {21, "32; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 440194},
    {22, "32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 440194},
    {23, "8; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 525050},
    {24, "32; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 525650},
    {25, "8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 965882},
    {26, "32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 966482},
    {27, "8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 1136794},
    {28, "32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 1137394},
    {29, "ResNet18", 3843138},
    {30, "ResNet34", 7217474},
}};

// Documented malformed inputs with the diagnostic each must produce. A
// position of -1 marks a validation error (no character offset).
struct MalformedCase {
  const char* text;
  const char* diagnostic;
  int position;
};

inline const std::array<MalformedCase, 10> kMalformed{{
    {"", "expected integer for input_filters", 0},
    {"8 cna; [4]; [1]", "expected ';'", 2},
    {"8; ; [4]; [1]", "expected layout", 3},
    {"8; cna; 4, 8; [1, 1]", "expected '['", 8},
    {"8; cna; [4, 8; [1, 1]", "expected ',' or ']'", 13},
    {"8; cna; [4, x]; [1, 1]", "expected integer for filters", 12},
    {"8; cna; [4, 8]; [1, 1]; extra", "unexpected trailing characters", 22},
    {"8; cna; [4,8]; [1,2,3]", "filters/blocks length mismatch", -1},
    {"8; cxa; [4]; [1]", "layout contains illegal symbol 'x'", -1},
    {"8; cna; [0, 4]; [1, 1]", "filters must be ≥ 1", -1},
}};

inline const BenchRow& bench_row(int index) { return kBenchRows.at(static_cast<std::size_t>(index - 1)); }

inline afresnet::Tensor random_tensor(afresnet::Shape dims, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  afresnet::Tensor t(std::move(dims));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

inline double max_abs_diff(const afresnet::Tensor& a, const afresnet::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// --- naive reference kernels ----------------------------------------------

inline afresnet::Tensor naive_conv1d(const afresnet::Tensor& x, const afresnet::Tensor& w, int stride, int pad) {
  const int B = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1)), L = static_cast<int>(x.dim(2));
  const int O = static_cast<int>(w.dim(0)), K = static_cast<int>(w.dim(2));
  const int out = (L + 2 * pad - K) / stride + 1;
  afresnet::Tensor y({static_cast<std::size_t>(B), static_cast<std::size_t>(O), static_cast<std::size_t>(out)});
  for (int b = 0; b < B; ++b)
    for (int o = 0; o < O; ++o)
      for (int t = 0; t < out; ++t) {
        double s = 0.0;
        for (int c = 0; c < C; ++c)
          for (int k = 0; k < K; ++k) {
            const int i = t * stride + k - pad;
            if (i >= 0 && i < L) s += w.at(o, c, k) * x.at(b, c, i);
          }
        y.at(b, o, t) = s;
      }
  return y;
}

// Train-mode batch normalization with biased variance.
inline afresnet::Tensor naive_batchnorm_train(const afresnet::Tensor& x, const afresnet::Tensor& gamma,
                                              const afresnet::Tensor& beta, double eps) {
  afresnet::Tensor y(x.dims());
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < L; ++t) mean += x.at(b, c, t);
    mean /= static_cast<double>(B * L);
    double var = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < L; ++t) var += (x.at(b, c, t) - mean) * (x.at(b, c, t) - mean);
    var /= static_cast<double>(B * L);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < L; ++t)
        y.at(b, c, t) = gamma[c] * (x.at(b, c, t) - mean) / std::sqrt(var + eps) + beta[c];
  }
  return y;
}

inline afresnet::Tensor naive_dense(const afresnet::Tensor& x, const afresnet::Tensor& w, const afresnet::Tensor& bias) {
  const std::size_t B = x.dim(0), C = x.dim(1), O = w.dim(1);
  afresnet::Tensor y({B, O});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < O; ++o) {
      double s = bias[o];
      for (std::size_t c = 0; c < C; ++c) s += x.at(b, c) * w.at(c, o);
      y.at(b, o) = s;
    }
  return y;
}

// Central differences of f with respect to every element of `t`.
inline std::vector<double> numeric_gradient(afresnet::Tensor& t, const std::function<double()>& f, double h = 1e-5) {
  std::vector<double> g(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double keep = t[i];
    t[i] = keep + h;
    const double up = f();
    t[i] = keep - h;
    const double down = f();
    t[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// |a - n| / max(|a|, |n|, floor): relative error that stays meaningful for
// gradients near zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("afresnet_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
