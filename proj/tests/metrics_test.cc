#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.h"
#include "rfic/demod.h"
#include "rfic/error.h"
#include "rfic/metrics.h"
#include "rfic/sigsynth.h"

namespace rfic {
namespace {

constexpr double kFs = 200e6;

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rfic::Error thrown";
  return ErrorCode::kIoError;
}

BasebandWaveform Noise(std::size_t n, std::uint64_t seed, double power = 1.0) {
  return BasebandWaveform(oracle::GaussianNoise(n, power, seed), kFs);
}

BasebandWaveform Scaled(BasebandWaveform w, double g) {
  for (auto& v : w.samples) v *= g;
  return w;
}

TEST(WelchPsd, ToneIntegratesToItsPower) {
  const double f0 = 12.5e6;
  const auto p = WelchPsd(GenerateTone(f0, 1.0, 1 << 16, kFs));
  const auto peak = std::max_element(p.psd.begin(), p.psd.end()) - p.psd.begin();
  EXPECT_NEAR(p.freqs[static_cast<std::size_t>(peak)], f0, p.bin_spacing);
  EXPECT_NEAR(p.TotalPower(), 1.0, 0.01);
}

TEST(WelchPsd, WhiteNoiseIsFlat) {
  const auto p = WelchPsd(Noise(256 * 500, 1), 256);
  ASSERT_GE(p.segments, 100u);
  const auto [lo, hi] = std::minmax_element(p.psd.begin(), p.psd.end());
  EXPECT_LT(10.0 * std::log10(*hi / *lo), 3.0);
}

TEST(WelchPsd, ZeroInputGivesZeroPsd) {
  const auto p = WelchPsd(BasebandWaveform(std::vector<cplx>(8192), kFs));
  for (double v : p.psd) EXPECT_EQ(v, 0.0);
}

TEST(WelchPsd, RejectsLongSegment) {
  EXPECT_EQ(CodeOf([] { WelchPsd(Noise(1000, 1), 4096); }),
            ErrorCode::kInvalidSegment);
  EXPECT_EQ(CodeOf([] { WelchPsd(Noise(10000, 1), 1024, 1.0); }),
            ErrorCode::kInvalidArgument);
}

TEST(WelchPsd, ParsevalForSeveralSignals) {
  // Long records: the filter ramps at the SOI ends carry too little weight
  // under the Hann taper of the first and last segments to matter.
  const auto fm = GenerateFmInterference(FmNoiseSpec{80e6, 10e6, 2.0, 3}, 1 << 17, kFs);
  const auto soi =
      GenerateSoi(RandomSymbols(30000, Constellation::kQam16, 5e6, 4), PulseShape{});
  for (const auto* w : {&fm, &soi}) {
    const double p = MeanPower(w->valid());
    EXPECT_NEAR(WelchPsd(*w).TotalPower(), p, 0.01 * p);
  }
  const auto n = Noise(1 << 17, 5, 0.3);
  EXPECT_NEAR(WelchPsd(n).TotalPower(), MeanPower(n.samples), 0.003);
}

TEST(WelchPsd, StandardErrorFallsAsRootSegments) {
  // Relative spread across bins of white noise, at 10/100/1000 segments.
  std::vector<double> spread;
  for (std::size_t segs : {10u, 100u, 1000u}) {
    const std::size_t seg = 256;
    const auto p = WelchPsd(Noise(seg * segs, 7 + segs), seg, 0.0);
    double m = 0.0, v = 0.0;
    for (double x : p.psd) m += x;
    m /= static_cast<double>(p.psd.size());
    for (double x : p.psd) v += (x - m) * (x - m);
    spread.push_back(std::sqrt(v / static_cast<double>(p.psd.size())) / m);
  }
  EXPECT_NEAR(spread[0] / spread[1], std::sqrt(10.0), 0.3 * std::sqrt(10.0));
  EXPECT_NEAR(spread[1] / spread[2], std::sqrt(10.0), 0.3 * std::sqrt(10.0));
}

TEST(IsrAt, IdenticalIsZero) {
  const auto p = WelchPsd(Noise(1 << 14, 1));
  EXPECT_DOUBLE_EQ(IsrAt(p, p, 0.0), 0.0);
}

TEST(IsrAt, HundredFoldToneIsTwentyDb) {
  const auto soi = WelchPsd(GenerateTone(1e6, 1.0, 1 << 15, kFs));
  const auto in = WelchPsd(GenerateTone(1e6, 100.0, 1 << 15, kFs));
  EXPECT_NEAR(IsrAt(soi, in, 1e6), 20.0, 0.3);
}

TEST(IsrAt, ZeroSoiBinIsInfinite) {
  const auto soi = WelchPsd(BasebandWaveform(std::vector<cplx>(8192), kFs));
  const auto in = WelchPsd(Noise(8192, 2));
  EXPECT_EQ(IsrAt(soi, in, 0.0), std::numeric_limits<double>::infinity());
}

TEST(IsrAt, OutsideRangeThrows) {
  const auto p = WelchPsd(Noise(8192, 2));
  EXPECT_EQ(CodeOf([&] { IsrAt(p, p, 150e6); }), ErrorCode::kOutOfBand);
}

TEST(CancellationDepth, SameIsZeroAndPowerRatioMatches) {
  const auto w = Noise(1 << 15, 3);
  const Band band{-10e6, 10e6};
  EXPECT_NEAR(CancellationDepth(w, w, band).depth_db, 0.0, 1e-12);
  const auto after = Scaled(w, std::sqrt(1e-3));
  EXPECT_NEAR(CancellationDepth(w, after, band).depth_db, 30.0, 0.01);
}

TEST(CancellationDepth, AntisymmetricUnderSwap) {
  const auto a = Noise(1 << 15, 4);
  const auto b = Noise(1 << 15, 5, 0.01);
  const Band band{-20e6, 5e6};
  const auto ab = CancellationDepth(a, b, band);
  const auto ba = CancellationDepth(b, a, band);
  EXPECT_DOUBLE_EQ(ab.depth_db, -ba.depth_db);
  ASSERT_EQ(ab.depth_curve_db.size(), ba.depth_curve_db.size());
  for (std::size_t k = 0; k < ab.depth_curve_db.size(); ++k) {
    EXPECT_DOUBLE_EQ(ab.depth_curve_db[k], -ba.depth_curve_db[k]);
  }
}

TEST(CancellationDepth, ZeroResidualSaturates) {
  const auto a = Noise(1 << 14, 6);
  const auto d = CancellationDepth(a, BasebandWaveform(std::vector<cplx>(a.size()), kFs),
                                   Band{-1e6, 1e6});
  EXPECT_TRUE(d.saturated);
  EXPECT_EQ(d.depth_db, kDepthFloorDb);
}

TEST(CancellationDepth, RejectsBandOutsideNyquist) {
  const auto a = Noise(1 << 14, 6);
  EXPECT_EQ(CodeOf([&] { CancellationDepth(a, a, Band{0.0, 120e6}); }),
            ErrorCode::kOutOfBand);
}

SymbolStream Stream(std::vector<cplx> s) {
  SymbolStream out;
  out.symbols = std::move(s);
  out.format = Constellation::kQpsk;
  out.symbol_rate = 5e6;
  return out;
}

TEST(Evm, IdenticalIsZero) {
  const auto tx = RandomSymbols(1000, Constellation::kQam64, 5e6, 1);
  EXPECT_NEAR(Evm(tx, tx).evm_rms_pct, 0.0, 1e-12);
}

TEST(Evm, MinusTwentyDbNoiseIsTenPercent) {
  const auto tx = RandomSymbols(10000, Constellation::kQpsk, 5e6, 2);
  const auto noise = oracle::GaussianNoise(tx.symbols.size(), 0.01, 3);
  SymbolStream rx = tx;
  for (std::size_t i = 0; i < rx.symbols.size(); ++i) rx.symbols[i] += noise[i];
  EXPECT_NEAR(Evm(rx, tx).evm_rms_pct, 10.0, 0.5);
}

TEST(Evm, InvariantToCommonComplexScale) {
  const auto tx = RandomSymbols(5000, Constellation::kQam16, 5e6, 4);
  const auto noise = oracle::GaussianNoise(tx.symbols.size(), 0.02, 5);
  SymbolStream rx = tx;
  for (std::size_t i = 0; i < rx.symbols.size(); ++i) rx.symbols[i] += noise[i];
  const double base = Evm(rx, tx).evm_rms_pct;
  SymbolStream rotated = rx;
  for (auto& v : rotated.symbols) v *= std::polar(3.7, 2.1);
  EXPECT_NEAR(Evm(rotated, tx).evm_rms_pct, base, 1e-9);
  SymbolStream clean = tx;
  for (auto& v : clean.symbols) v *= std::polar(0.2, -0.9);
  EXPECT_NEAR(Evm(clean, tx).evm_rms_pct, 0.0, 1e-9);
}

TEST(Evm, LengthMismatchThrows) {
  const auto a = Stream({1.0, 1.0});
  const auto b = Stream({1.0});
  EXPECT_EQ(CodeOf([&] { Evm(a, b); }), ErrorCode::kInvalidLength);
}

TEST(Evm, TracksInBandResidualRatio) {
  // Flat residual with PSD ratio rho to the SOI at the carrier: matched
  // filtering leaves EVM = 100 sqrt(rho).
  const PulseShape pulse{40, 0.2, 64};
  const auto tx = RandomSymbols(6000, Constellation::kQpsk, 5e6, 8);
  const auto soi = GenerateSoi(tx, pulse);
  const auto soi_psd = WelchPsd(soi);
  for (double rho_db : {-30.0, -20.0, -10.0}) {
    const auto resid = Noise(soi.size(), 9, 40.0 * std::pow(10.0, rho_db / 10.0));
    const auto res_psd = WelchPsd(resid);
    double s = 0.0, r = 0.0;
    for (std::size_t k = 0; k < soi_psd.freqs.size(); ++k) {
      if (std::abs(soi_psd.freqs[k]) < 1.5e6) {
        s += soi_psd.psd[k];
        r += res_psd.psd[k];
      }
    }
    const double rho = r / s;
    BasebandWaveform rx = soi;
    for (std::size_t i = 0; i < rx.size(); ++i) rx.samples[i] += resid.samples[i];
    DemodConfig dc;
    dc.pulse = pulse;
    const auto got = Demodulate(rx, dc);
    const double evm = Evm(got, tx).evm_rms_pct;
    EXPECT_NEAR(evm, 100.0 * std::sqrt(rho), 0.1 * 100.0 * std::sqrt(rho)) << rho_db;
  }
}

TEST(SeparationSir, KnownMixture) {
  const auto s = Noise(1 << 15, 10);
  const auto o = Noise(1 << 15, 11);
  BasebandWaveform y = s;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y.samples[i] = std::polar(2.0, 0.4) * s.samples[i] + 0.02 * o.samples[i];
  }
  EXPECT_NEAR(SeparationSirDb(y, s), 10.0 * std::log10(4.0 / 4e-4), 0.2);
}

}  // namespace
}  // namespace rfic
