// Reference computations the tests compare the library against. Nothing here
// calls the code under test except to read constellation tables and
// interpolator taps.
#ifndef RFIC_TESTS_ORACLES_H_
#define RFIC_TESTS_ORACLES_H_

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "rfic/metrics.h"
#include "rfic/sigsynth.h"

namespace rfic::oracle {

using cplx = std::complex<double>;

// Hard-decision symbol error rate over `n` random symbols with complex AWGN
// of the given total power (constellation has unit power). Brute-force
// nearest-point search.
double SymbolErrorRate(Constellation format, double noise_power, std::size_t n,
                       std::uint64_t seed);

// RMS EVM (percent) of the AWGN level at which SER = 1 %, by bisection with
// common random numbers so SER is monotone in the noise level.
double SerThresholdEvmPct(Constellation format, std::size_t n = 100000,
                          std::uint64_t seed = 7);

// Analog Butterworth lowpass from the normalised polynomial coefficients,
// H(0) = 1.
cplx Butterworth(double f_hz, double f3db, int order);

// Frequency response at normalised frequency f (cycles/sample) of the
// library's fractional-delay operator for a delay of d samples.
cplx InterpolatorResponse(double d, double f);

// 10 log10(sum S / sum S |R|^2) over the PSD bins inside `band`: the depth a
// residual transfer function R produces on a source with PSD S.
double BandDepthDb(const PsdEstimate& s, Band band,
                   const std::function<cplx(double f_hz)>& residual);

// Complex Gaussian noise with independent re/im of variance power / 2.
std::vector<cplx> GaussianNoise(std::size_t n, double power, std::uint64_t seed);

}  // namespace rfic::oracle

#endif  // RFIC_TESTS_ORACLES_H_
