#ifndef RFIC_CANCELLER_H_
#define RFIC_CANCELLER_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfic/waveform.h"

namespace rfic {

// One delay plus one complex gain applied to the reference before
// subtraction.
struct CancellerTaps {
  double delay = 0.0;  // seconds; r_L ~ gain * r_H(t - delay)
  cplx gain{0.0, 0.0};
  double residual_power_db = 0.0;
};

inline constexpr double kDefaultMinCoherence = 0.2;

struct DelayEstimate {
  double delay = 0.0;        // seconds, sub-sample refined
  long integer_lag = 0;      // samples
  double coherence = 0.0;    // peak |xcorr| / (|r_L| |r_H|)
};

// Cross-correlation peak search over |lag| <= max_lag, refined by a parabola
// through the correlation magnitude around the peak. Throws
// kNoCoherentReference when the normalised peak is below min_coherence.
DelayEstimate EstimateDelayDetailed(const BasebandWaveform& r_l,
                                    const BasebandWaveform& r_h,
                                    double max_lag,
                                    double min_coherence = kDefaultMinCoherence);

double EstimateDelay(const BasebandWaveform& r_l, const BasebandWaveform& r_h,
                     double max_lag,
                     double min_coherence = kDefaultMinCoherence);

// Least-squares w = <r_L, r_H(delay)> / |r_H(delay)|^2 over the common valid
// window. Throws kDegenerateReference when the delayed reference is all zero.
cplx EstimateGain(const BasebandWaveform& r_l, const BasebandWaveform& r_h,
                  double delay);

// y = r_L - gain * fractional_delay(r_H, delay).
BasebandWaveform Cancel(const BasebandWaveform& r_l,
                        const BasebandWaveform& r_h,
                        const CancellerTaps& taps);

// Single-tap complex NLMS run over an aligned reference, starting from
// `initial`. Returns the final weight.
cplx RefineGainNlms(const BasebandWaveform& r_l,
                    const BasebandWaveform& aligned_reference, cplx initial,
                    double step = 0.05);

struct CancelOptions {
  double max_lag = 1e-6;  // seconds
  double min_coherence = kDefaultMinCoherence;
  std::size_t training_window = 0;  // samples of the common valid window; 0 = all
  // Prefix of the training window used to estimate the taps; 0 = all of it.
  // The spectrally weighted fit needs only a short record, so this mostly
  // buys speed on long captures.
  std::size_t delay_window = 0;
  bool nlms = false;
  double nlms_step = 0.05;
};

struct CancelResult {
  BasebandWaveform output;
  CancellerTaps taps;
  int free_parameters = 2;
};

// estimate_delay -> estimate_gain -> joint refinement of both, weighting
// each frequency by the inverse residual PSD so SOI-occupied bins count
// little (-> optional NLMS) -> cancel.
CancellerTaps TrainTaps(const BasebandWaveform& r_l,
                        const BasebandWaveform& r_h,
                        const CancelOptions& options = {});
CancelResult CancelAuto(const BasebandWaveform& r_l,
                        const BasebandWaveform& r_h,
                        const CancelOptions& options = {});

struct IcaSettings {
  int max_iterations = 200;
  double tolerance = 1e-6;
  std::size_t training_window = 0;  // 0 = whole common valid window
};

struct SeparationResult {
  std::vector<BasebandWaveform> outputs;
  // outputs = demix * [x1; x2] (BSS mode).
  Eigen::Matrix2cd demix = Eigen::Matrix2cd::Identity();
  std::optional<CancellerTaps> taps;  // reference mode
  int iterations = 0;
  bool converged = false;
  int free_parameters = 0;
  bool not_converged = false;  // NotConverged flag; result still usable
  bool unseparable = false;    // UnseparableWarning flag
  std::vector<double> excess_kurtosis;
  // Set by ResolvePermutation: outputs[0] is the SOI estimate.
  bool labelled = false;
};

// PCA whitening from the 2x2 sample covariance, then complex fixed-point ICA
// with the kurtosis contrast (deflation; in two dimensions the second unit is
// the orthogonal complement of the first). Outputs have unit power and are
// ordered as found.
SeparationResult BssSeparate(const BasebandWaveform& x1,
                             const BasebandWaveform& x2,
                             const IcaSettings& settings = {});

// Labels the output most correlated with `reference` as interference and
// returns outputs ordered (SOI, interference) with the SOI at unit power.
// Throws kAmbiguousLabeling when both |correlations| < 0.2.
SeparationResult ResolvePermutation(SeparationResult result,
                                    const BasebandWaveform& reference);

// |<a, b>| / (|a| |b|) over the common valid window.
double NormalizedCorrelation(const BasebandWaveform& a,
                             const BasebandWaveform& b);

}  // namespace rfic

#endif  // RFIC_CANCELLER_H_
