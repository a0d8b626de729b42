#pragma once

#include <complex>
#include <span>

namespace mrv::detail {

/// Real-to-half-complex forward DFT of length n = in.size();
/// out.size() must be n / 2 + 1.
void forward_real_dft(std::span<const double> in, std::span<std::complex<double>> out);

/// Inverse of forward_real_dft including the 1/n normalization.
void inverse_real_dft(std::span<const std::complex<double>> in, std::span<double> out);

}  // namespace mrv::detail
