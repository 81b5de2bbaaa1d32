#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace neurodrive::detail {

/// Real-to-complex DFT of x zero-padded (or truncated) to nfft points.
/// Returns nfft/2 + 1 bins. Safe to call from several threads.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t nfft);

}  // namespace neurodrive::detail
