#include "afresnet/table_a1.hpp"

namespace afresnet {

namespace {

constexpr BenchmarkRow kRows[] = {
    {1, "8; cna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 3658, 0.826, 0.004},
    {2, "32; cna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 4258, 0.826, 0.004},
    {3, "8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 7026, 0.884, 0.002},
    {4, "8; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 7026, 0.879, 0.006},
    {5, "32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 7626, 0.889, 0.005},
    {6, "32; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 7626, 0.884, 0.004},
    {7, "8; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 10522, 0.884, 0.004},
    {8, "32; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 11122, 0.887, 0.001},
    {9, "8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 13762, 0.894, 0.007},
    {10, "32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 14362, 0.898, 0.008},
    {11, "8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 20754, 0.896, 0.006},
    {12, "32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 21354, 0.896, 0.006},
    {13, "32; cnacna; [4, 8, 12, 20, 32, 52, 84]; [1, 1, 1, 1, 1, 1, 1]", 64202, 0.901, 0.005},
    {14, "32; ncnacn; [4, 8, 12, 20, 32, 52, 84]; [1, 1, 1, 1, 1, 1, 1]", 64522, 0.892, 0.008},
    {15, "32; cnacna; [4, 8, 12, 20, 32, 52, 84]; [2, 3, 4, 5, 4, 3, 2]", 172154, 0.891, 0.007},
    {16, "32; ncnacn; [4, 8, 12, 20, 32, 52, 84]; [2, 3, 4, 5, 4, 3, 2]", 173314, 0.896, 0.007},
    {17, "8; cna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 176450, 0.862, 0.002},
    {18, "32; cna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 177050, 0.862, 0.004},
    {19, "8; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 439594, 0.891, 0.002},
    {20, "8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 439594, 0.899, 0.002},
    {21, "32; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 440194, 0.891, 0.003},
    {22, "32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 440194, 0.894, 0.010},
    {23, "8; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 525050, 0.887, 0.009},
    {24, "32; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 525650, 0.892, 0.002},
    {25, "8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 965882, 0.888, 0.013},
    {26, "32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 966482, 0.893, 0.009},
    {27, "8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 1136794, 0.887, 0.007},
    {28, "32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 1137394, 0.885, 0.008},
    {29, "ResNet18", 3843138, 0.844, 0.002},
    {30, "ResNet34", 7217474, 0.853, 0.007},
};

}  // namespace

std::span<const BenchmarkRow> benchmark_table() { return kRows; }

}  // namespace afresnet
