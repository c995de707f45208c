// Randomised invariants. Each case draws its parameters from a fixed master
// seed so failures reproduce; the trial seed is printed on failure.
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "rfic/canceller.h"
#include "rfic/channel.h"
#include "rfic/demod.h"
#include "rfic/experiment.h"
#include "rfic/metrics.h"
#include "rfic/sigsynth.h"

namespace rfic {
namespace {

constexpr double kFs = 200e6;
constexpr int kTrials = 8;

class Property : public ::testing::Test {
 protected:
  std::mt19937_64 rng_{0x5eedu};
  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::uint64_t Seed() { return rng_() >> 16; }
  cplx Phasor(double lo, double hi) {
    return std::polar(Uniform(lo, hi), Uniform(-3.14159, 3.14159));
  }
};

BasebandWaveform Fm(std::size_t n, std::uint64_t seed) {
  return GenerateFmInterference(FmNoiseSpec{80e6, 10e6, 1.0, seed}, n, kFs);
}

BasebandWaveform Noise(std::size_t n, std::uint64_t seed, double power) {
  return BasebandWaveform(oracle::GaussianNoise(n, power, seed), kFs);
}

BasebandWaveform Combine(cplx a, const BasebandWaveform& x, cplx b,
                         const BasebandWaveform& y) {
  BasebandWaveform out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.samples[i] = a * x.samples[i] + b * y.samples[i];
  }
  return out;
}

const Constellation kFormats[] = {Constellation::kQpsk, Constellation::kQam16,
                                  Constellation::kQam64, Constellation::kQam256};

TEST_F(Property, ModulateDemodulateRoundTrip) {
  for (int t = 0; t < kTrials; ++t) {
    const auto seed = Seed();
    const auto fmt = kFormats[seed % 4];
    const auto n = static_cast<std::size_t>(Uniform(200, 2000));
    SCOPED_TRACE(testing::Message() << "seed " << seed << " n " << n);
    const auto tx = RandomSymbols(n, fmt, 5e6, seed);
    DemodConfig dc;
    dc.format = fmt;
    const auto rx = Demodulate(GenerateSoi(tx, dc.pulse), dc);
    ASSERT_EQ(rx.symbols.size(), n);
    const auto evm = Evm(rx, tx);
    EXPECT_LT(evm.evm_rms_pct, 0.1);
    const auto& pts = ConstellationPoints(fmt);
    for (std::size_t i = 0; i < n; ++i) {
      const cplx hard = pts[Slice(evm.alignment_gain * rx.symbols[i], fmt)];
      ASSERT_LT(std::abs(hard - tx.symbols[i]), 1e-12) << i;
    }
  }
}

TEST_F(Property, PsdIntegratesToMeanPower) {
  for (int t = 0; t < kTrials; ++t) {
    const auto seed = Seed();
    const auto n = static_cast<std::size_t>(Uniform(20000, 200000));
    const double power = Uniform(0.01, 10.0);
    SCOPED_TRACE(testing::Message() << "seed " << seed << " n " << n);
    auto fm = GenerateFmInterference(FmNoiseSpec{Uniform(1e6, 80e6), 10e6, power, seed},
                                     n, kFs);
    EXPECT_NEAR(WelchPsd(fm).TotalPower(), power, 0.02 * power);
    const auto w = Noise(n, seed + 1, power);
    const double p = MeanPower(w.samples);
    EXPECT_NEAR(WelchPsd(w).TotalPower(), p, 0.03 * p);
  }
}

TEST_F(Property, DelayEstimateWithinTwentiethOfSample) {
  for (int t = 0; t < kTrials; ++t) {
    const auto seed = Seed();
    const double d = Uniform(-20.0, 20.0);
    SCOPED_TRACE(testing::Message() << "seed " << seed << " delay " << d);
    const auto h = Fm(1 << 15, seed);
    BasebandWaveform l = d >= 0.0 ? FractionalDelay(h, d / kFs) : h;
    BasebandWaveform hh = d >= 0.0 ? h : FractionalDelay(h, -d / kFs);
    l = Add(Combine(Phasor(0.1, 3.0), l, 0.0, l), Noise(l.size(), seed + 1, 0.01));
    EXPECT_NEAR(EstimateDelay(l, hh, 1e-6) * kFs, d, 0.05);
  }
}

TEST_F(Property, GainErrorFallsAsRootLength) {
  // RMS gain error over trials at N and 16 N; white reference and noise.
  const cplx g{0.6, -0.3};
  double mse[2] = {0.0, 0.0};
  const std::size_t lengths[2] = {1 << 12, 1 << 16};
  for (int k = 0; k < 2; ++k) {
    for (int t = 0; t < 2 * kTrials; ++t) {
      const auto seed = Seed();
      const auto h = Noise(lengths[k], seed, 1.0);
      const auto l = Combine(g, h, 1.0, Noise(lengths[k], seed + 1, 0.1));
      mse[k] += std::norm(EstimateGain(l, h, 0.0) - g);
    }
  }
  EXPECT_NEAR(std::sqrt(mse[0] / mse[1]), 4.0, 1.6);
}

TEST_F(Property, GainEstimateIsEquivariant) {
  for (int t = 0; t < kTrials; ++t) {
    const auto seed = Seed();
    const cplx c = Phasor(0.01, 100.0);
    const double d = Uniform(0.0, 10.0) / kFs;
    SCOPED_TRACE(testing::Message() << "seed " << seed);
    const auto h = Fm(1 << 13, seed);
    const auto l = Add(FractionalDelay(h, d), Noise(h.size(), seed + 1, 0.1));
    const cplx g = EstimateGain(l, h, d);
    const cplx gc = EstimateGain(Combine(c, l, 0.0, l), h, d);
    EXPECT_LT(std::abs(gc - c * g), 1e-10 * std::abs(c * g));
  }
}

TEST_F(Property, CancelIsLinear) {
  for (int t = 0; t < kTrials; ++t) {
    const auto seed = Seed();
    SCOPED_TRACE(testing::Message() << "seed " << seed);
    const CancellerTaps taps{Uniform(0.0, 20.0) / kFs, Phasor(0.1, 2.0), 0.0};
    const std::size_t n = 4096;
    const auto l1 = Noise(n, seed, 1.0), l2 = Noise(n, seed + 1, 1.0);
    const auto h1 = Noise(n, seed + 2, 1.0), h2 = Noise(n, seed + 3, 1.0);
    const cplx a = Phasor(0.1, 5.0), b = Phasor(0.1, 5.0);
    const auto lhs = Cancel(Combine(a, l1, b, l2), Combine(a, h1, b, h2), taps);
    const auto rhs = Combine(a, Cancel(l1, h1, taps), b, Cancel(l2, h2, taps));
    ASSERT_EQ(lhs.valid_begin, rhs.valid_begin);
    ASSERT_EQ(lhs.valid_end, rhs.valid_end);
    for (std::size_t i = lhs.valid_begin; i < lhs.valid_end; ++i) {
      ASSERT_LT(std::abs(lhs.samples[i] - rhs.samples[i]), 1e-10);
    }
  }
}

TEST_F(Property, DepthIsAntisymmetric) {
  for (int t = 0; t < kTrials; ++t) {
    const auto seed = Seed();
    const auto a = Noise(1 << 14, seed, Uniform(0.1, 10.0));
    const auto b = Noise(1 << 14, seed + 1, Uniform(0.001, 1.0));
    const double lo = Uniform(-90e6, 0.0);
    const Band band{lo, lo + Uniform(1e6, 80e6)};
    EXPECT_DOUBLE_EQ(CancellationDepth(a, b, band).depth_db,
                     -CancellationDepth(b, a, band).depth_db);
  }
}

TEST_F(Property, EvmTracksResidualRatio) {
  const PulseShape pulse;
  for (int t = 0; t < 4; ++t) {
    const auto seed = Seed();
    const double rho_db = Uniform(-35.0, -10.0);
    SCOPED_TRACE(testing::Message() << "seed " << seed << " rho " << rho_db);
    const auto tx = RandomSymbols(3000, Constellation::kQpsk, 5e6, seed);
    auto rx = GenerateSoi(tx, pulse);
    // White noise of power rho * sps sits rho below the SOI passband PSD.
    const double rho = std::pow(10.0, rho_db / 10.0);
    rx = Add(rx, Noise(rx.size(), seed + 1, rho * pulse.sps));
    DemodConfig dc;
    const double evm = Evm(Demodulate(rx, dc), tx).evm_rms_pct;
    EXPECT_NEAR(evm, 100.0 * std::sqrt(rho), 0.1 * 100.0 * std::sqrt(rho));
  }
}

TEST_F(Property, SimulationIsAPureFunctionOfSeed) {
  const char* yaml = R"(
schema_version: 1
sim: {seed: 1, n_symbols: 600}
interference: {isr_db: 10}
)";
  for (int t = 0; t < 3; ++t) {
    const auto seed = Seed();
    const auto c = ParseScenarioConfig(yaml, seed);
    RunTrace ta, tb;
    const auto a = Simulate(c, &ta);
    const auto b = Simulate(c, &tb);
    EXPECT_EQ(*a.evm_pct, *b.evm_pct);
    EXPECT_EQ(a.depth_db, b.depth_db);
    EXPECT_EQ(ta.output.samples, tb.output.samples);
    EXPECT_NE(Simulate(ParseScenarioConfig(yaml, seed + 1)).depth_db, a.depth_db);
  }
}

}  // namespace
}  // namespace rfic
