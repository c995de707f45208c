#!/usr/bin/env python3
"""Fits the reference-arm detuning used by spectral_response.yaml.

Both arms are 4th-order Butterworth lowpass responses. Taps are matched at a
low calibration carrier, so the residual at carrier f is
    |1 - H_ref(f) / H_ant(f) * H_ant(f_cal) / H_ref(f_cal)|.
Targets: depth >= 30 dB for f <= 4 GHz and >= 20 dB for 4 < f <= 6 GHz.
Picks the largest detuning (closest to 9.5 GHz) that clears both targets with
at least 1 dB to spare.
"""
import numpy as np

ORDER = 4
F_ANT = 9.0e9
F_CAL = 50e6
CARRIERS = np.arange(0.1e9, 6.0e9 + 1, 0.1e9)


def butterworth(f, f3db, order=ORDER):
  s = 1j * f / f3db
  k = np.arange(order)
  poles = np.exp(1j * np.pi * (2 * k + order + 1) / (2 * order))
  h = np.ones_like(s)
  for p in poles:
    h = h * (-p) / (s - p)
  return h


def depth_db(f, f_ref):
  w = butterworth(F_CAL, F_ANT) / butterworth(F_CAL, f_ref)
  r = 1 - w * butterworth(f, f_ref) / butterworth(f, F_ANT)
  return -20 * np.log10(np.abs(r))


def margin(f_ref):
  d = depth_db(CARRIERS, f_ref)
  low = d[CARRIERS <= 4e9].min() - 30
  high = d[CARRIERS > 4e9].min() - 20
  return min(low, high)


def main():
  pick = None
  for f_ref in np.arange(9.05e9, 9.55e9, 0.05e9):
    m = margin(f_ref)
    print(f"f_ref {f_ref / 1e9:.2f} GHz: margin {m:+.2f} dB")
    if m >= 1.0:
      pick = (f_ref, m)
  print(f"pick {pick[0] / 1e9:.2f} GHz (margin {pick[1]:+.2f} dB)")


if __name__ == "__main__":
  main()
