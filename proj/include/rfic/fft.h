#ifndef RFIC_FFT_H_
#define RFIC_FFT_H_

#include <cstddef>
#include <span>
#include <vector>

#include "rfic/waveform.h"

namespace rfic {

// Thin FFTW wrapper. Forward transform is unnormalised; inverse divides by n
// so that Inverse(Forward(x)) == x.
std::vector<cplx> Fft(std::span<const cplx> x);
std::vector<cplx> InverseFft(std::span<const cplx> x);

// In-place on a buffer whose size() is the transform length.
void FftInPlace(std::vector<cplx>& x, bool inverse);

std::size_t NextPow2(std::size_t n);
// Smallest length >= n whose only prime factors are 2, 3, 5 and 7.
std::size_t NextFastSize(std::size_t n);
// Largest 7-smooth length <= n (n >= 1).
std::size_t PrevFastSize(std::size_t n);

// Frequency (Hz) of FFT bin k for an n-point transform at rate fs, mapped to
// [-fs/2, fs/2).
double BinFrequency(std::size_t k, std::size_t n, double fs);

}  // namespace rfic

#endif  // RFIC_FFT_H_
