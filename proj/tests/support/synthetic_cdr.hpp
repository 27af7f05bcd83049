#pragma once

// Deterministic stand-in for the published combustion dataset. The generator
// draws inputs from the five-parameter box, evaluates two smooth correlated
// response functions, and then applies the exact affine moment correction so
// the written table has sample statistics (1/(n-1) convention) matching the
// published values to machine precision:
//   mean_1 = 1406, sigma_1 = 276.1, mean_2 = 1349, sigma_2 = 356,
//   rho_12 = 0.95575.
// rho is pinned at four digits rather than the printed two so the allocation
// table derived from it lands on the published counts.

#include <cstddef>
#include <string>

namespace testsupport {

inline constexpr double kCdrMu1 = 1406.0;
inline constexpr double kCdrSigma1 = 276.1;
inline constexpr double kCdrMu2 = 1349.0;
inline constexpr double kCdrSigma2 = 356.0;
inline constexpr double kCdrRho = 0.95575;
inline constexpr double kCdrCostHigh = 1.94;
inline constexpr double kCdrCostLow = 6.2e-3;

/// Writes the dataset CSV (header z1..z5,y1,y2) and returns the path.
std::string write_synthetic_cdr_dataset(const std::string& path, std::size_t rows = 4096,
                                        unsigned long long seed = 20240901ULL);

}  // namespace testsupport
