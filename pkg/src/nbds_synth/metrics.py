"""
Metrics Module

Waveform comparison and oscillation measures: RMSE/NRMSE against a reference
trace, peak-to-peak amplitude and period, spike detection and the pairwise
phase offsets of a spiking network.
"""

import logging
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import NoOscillation, ValidationError
from .simlab import Waveform

logger = logging.getLogger(__name__)

# Re-arm level below the threshold, as a fraction of the trace range.
HYSTERESIS = 0.10

# Fraction of a trace discarded as transient before measuring oscillations.
SETTLE_FRACTION = 0.5

MIN_CROSSINGS = 3


@dataclass
class Metrics:
    """Per-state comparison figures; fields left None were not measured."""

    rmse: Optional[float] = None
    nrmse: Optional[float] = None
    peak_to_peak: Optional[float] = None
    period: Optional[float] = None
    spike_count: Optional[int] = None
    phase_offsets: Dict[str, float] = field(default_factory=dict)
    divergence_time: Optional[float] = None

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None and v != {}}


def _aligned(a: Waveform, b: Waveform, state: str) -> Tuple[np.ndarray, np.ndarray]:
    """Samples of `a` and of reference `b` on a's grid, restricted to their overlap."""
    xa, xb = a.trace(state), b.trace(state)
    if len(a.times) == len(b.times) and np.array_equal(a.times, b.times):
        return xa, xb
    inside = (a.times >= b.times[0]) & (a.times <= b.times[-1])
    if np.count_nonzero(inside) < 2:
        raise ValidationError("waveforms do not overlap in time")
    return xa[inside], np.interp(a.times[inside], b.times, xb)


def rmse(a: Waveform, b: Waveform, state: str) -> float:
    """Root mean square difference of one state; b is resampled onto a's grid if needed."""
    xa, xb = _aligned(a, b, state)
    return float(np.sqrt(np.mean((xa - xb) ** 2)))


def nrmse(a: Waveform, b: Waveform, state: str) -> float:
    """
    RMSE divided by the range of the reference waveform `b`.

    A flat reference has no range; the ratio is then 0 for an exact match and
    infinite otherwise.
    """
    xa, xb = _aligned(a, b, state)
    error = float(np.sqrt(np.mean((xa - xb) ** 2)))
    span = float(np.ptp(xb))
    if span == 0.0:
        return 0.0 if error == 0.0 else float("inf")
    return error / span


def _rising_crossings(t: np.ndarray, x: np.ndarray, level: float, rearm: float) -> List[float]:
    """
    Interpolated times where x rises through `level`.

    After each crossing the detector stays disarmed until x falls below
    `rearm`; a trace that starts at or above the level starts disarmed.
    """
    above = x >= level
    ups = np.flatnonzero(~above[:-1] & above[1:]) + 1
    lows = np.flatnonzero(x < rearm)
    if x[0] < level:
        ready = 0
    else:
        ready = lows[0] if len(lows) else len(x)
    times = []
    for k in ups:
        if k < ready:
            continue
        x0, x1 = x[k - 1], x[k]
        times.append(float(t[k - 1] + (level - x0) * (t[k] - t[k - 1]) / (x1 - x0)))
        j = np.searchsorted(lows, k)
        ready = lows[j] if j < len(lows) else len(x)
    return times


def oscillation_metrics(w: Waveform, state: str) -> Tuple[float, float]:
    """
    Peak-to-peak amplitude and period over the final half of a trace.

    Returns:
        (peak_to_peak in A, period in s)

    Raises:
        NoOscillation: If fewer than three rising midrange crossings remain
    """
    tail = w.tail(1.0 - SETTLE_FRACTION)
    x = tail.trace(state)
    hi, lo = float(np.max(x)), float(np.min(x))
    peak_to_peak = hi - lo
    if peak_to_peak == 0.0:
        raise NoOscillation(f"{state}: constant trace")
    mid = 0.5 * (hi + lo)
    crossings = _rising_crossings(tail.times, x, mid, mid - HYSTERESIS * peak_to_peak)
    if len(crossings) < MIN_CROSSINGS:
        raise NoOscillation(f"{state}: {len(crossings)} rising crossings in the final half")
    return peak_to_peak, float(np.mean(np.diff(crossings)))


def detect_spikes(w: Waveform, state: str, threshold: float = 0.0) -> List[float]:
    """
    Spike times of a state: upward threshold crossings, re-armed only after
    the trace falls 10% of its range below the threshold.
    """
    x = w.trace(state)
    rearm = threshold - HYSTERESIS * float(np.ptp(x))
    return _rising_crossings(w.times, x, threshold, rearm)


def phase_offsets(w: Waveform, states: Sequence[str], threshold: float = 0.0) -> Dict[str, float]:
    """
    Pairwise phase offsets of spiking states, in degrees.

    Spike times after the transient are reduced modulo the common period and
    averaged on the circle; each pairwise difference is folded onto
    [0°, 180°] so an ordering of a→b→c reads 120° for every pair.

    Returns:
        "a-b" -> degrees for every pair, in argument order

    Raises:
        NoOscillation: If a state spikes fewer than twice after the transient
    """
    start = w.times[0] + SETTLE_FRACTION * (w.times[-1] - w.times[0])
    spikes = {}
    for name in states:
        times = np.array([s for s in detect_spikes(w, name, threshold) if s >= start])
        if len(times) < 2:
            raise NoOscillation(f"{name}: fewer than two spikes after the transient")
        spikes[name] = times
    period = float(np.mean([np.mean(np.diff(times)) for times in spikes.values()]))
    phases = {name: np.angle(np.mean(np.exp(2j * np.pi * times / period)))
              for name, times in spikes.items()}
    offsets = {}
    for a, b in combinations(states, 2):
        degrees = np.degrees(phases[b] - phases[a]) % 360.0
        offsets[f"{a}-{b}"] = float(min(degrees, 360.0 - degrees))
    return offsets
