#pragma once

#include <complex>
#include <vector>

namespace gmc::fft {

using cvec = std::vector<std::complex<double>>;

// Unnormalized forward DFT: X_k = sum_n x_n e^{-j 2 pi k n / N}.
// Radix-2 for power-of-two lengths, Bluestein otherwise.
void forward_inplace(cvec& x);

// Inverse with 1/N normalization; forward then inverse is the identity.
void inverse_inplace(cvec& x);

cvec forward(cvec x);
cvec inverse(cvec x);

std::size_t next_pow2(std::size_t n);

} // namespace gmc::fft
