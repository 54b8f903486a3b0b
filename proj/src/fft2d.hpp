#pragma once

#include <complex>
#include <vector>

namespace spnp::detail {

using Complex = std::complex<double>;

/// Unnormalized 2-D DFT of a row-major height x width plane. Plans are cached
/// per size behind a mutex; execution is reentrant.
void fft2d(std::vector<Complex>& data, int height, int width);
/// Inverse DFT including the 1/(height*width) factor.
void ifft2d(std::vector<Complex>& data, int height, int width);

}  // namespace spnp::detail
