"""Independent brute-force reference implementations for the metric tests.

Pure-Python enumeration over all candidate thresholds: no numpy, no imports
from the code under test. Kept deliberately naive (O(n^2) counting) so the
library can be checked against it for exact equality, including tie-breaks.
"""
from __future__ import annotations

import math

THRESHOLD_ABOVE_ONE = math.nextafter(1.0, 2.0)


def candidate_thresholds(bonafide, attacks):
    return sorted(set(bonafide) | set(attacks) | {0.0, THRESHOLD_ABOVE_ONE})


def apcer_at(attacks, tau):
    return sum(1 for s in attacks if s >= tau) / len(attacks)


def bpcer_at(bonafide, tau):
    return sum(1 for s in bonafide if s < tau) / len(bonafide)


def det_points(bonafide, attacks):
    return [
        (tau, apcer_at(attacks, tau), bpcer_at(bonafide, tau))
        for tau in candidate_thresholds(bonafide, attacks)
    ]


def eer(bonafide, attacks):
    """(eer, threshold): exact equality at the smallest threshold when one
    exists, else the linear-interpolation crossing between the bracketing
    points."""
    points = det_points(bonafide, attacks)
    for tau, a, b in points:
        if a == b:
            return a, tau
    for (t0, a0, b0), (t1, a1, b1) in zip(points, points[1:]):
        d0 = a0 - b0
        d1 = a1 - b1
        if d0 > 0.0 and d1 < 0.0:
            tau = t0 + d0 * (t1 - t0) / (d0 - d1)
            return a0 + (a1 - a0) * (tau - t0) / (t1 - t0), tau
    raise AssertionError("no crossing found")


def bpcer_at_apcer(bonafide, attacks, ap):
    """(bpcer, threshold) at the smallest threshold with APCER <= 1/ap."""
    target = 1.0 / ap
    for tau, a, b in det_points(bonafide, attacks):
        if a <= target:
            return b, tau
    raise AssertionError("unreachable: APCER is 0 at the upper sentinel")
