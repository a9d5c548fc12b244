"""Independent brute-force references used by the tests.

These deliberately avoid the package's vectorised component code: everything
is scalar complex arithmetic expanding the coupler / delay / coupler
composition slot by slot, so the simulator and the oracle can only agree if
both are right.
"""

from __future__ import annotations

import cmath
import math


def brute_force_dli_ports(amplitudes, delay: int = 1) -> tuple[list[float], list[float]]:
    """Per-slot (constructive, destructive) output intensities of a delay-line
    interferometer, expanded slot by slot.

    Conventions match the simulator: 50:50 couplers with ``1j`` on the cross
    port and the delay in the cross arm; the constructive port is the second
    output of the second coupler.
    """
    amps = [complex(a) for a in amplitudes]
    n = len(amps)
    r = 1.0 / math.sqrt(2.0)
    arm_a = [a * r for a in amps]
    arm_b = [a * r * 1j for a in amps]
    constructive: list[float] = []
    destructive: list[float] = []
    for k in range(n + delay):
        ua = arm_a[k] if k < n else 0j
        ub = arm_b[k - delay] if 0 <= k - delay < n else 0j
        out_a = ua * r + ub * r * 1j
        out_b = ua * r * 1j + ub * r
        destructive.append(abs(out_a) ** 2)
        constructive.append(abs(out_b) ** 2)
    return constructive, destructive


def brute_force_cow_monitor(
    occupancy,
    phases,
    amplitude: float,
    t_b: float,
    threshold_rel: float = 0.5,
) -> tuple[list[bool], list[bool]]:
    """Per-slot click pattern of the two monitoring detectors of a COW receiver.

    The monitoring line is the cross port of Bob's input splitter
    (``1j * sqrt(1 - t_b)`` per slot), interfered in a one-slot interferometer;
    a detector clicks when its output intensity exceeds ``threshold_rel`` of
    the nominal monitoring-line level.
    """
    amps = [
        amplitude * occ * cmath.exp(1j * ph) * math.sqrt(1.0 - t_b) * 1j
        for occ, ph in zip(occupancy, phases)
    ]
    constructive, destructive = brute_force_dli_ports(amps, delay=1)
    threshold = threshold_rel * (1.0 - t_b) * amplitude**2
    m1 = [v > threshold for v in constructive]
    m2 = [v > threshold for v in destructive]
    return m1, m2
