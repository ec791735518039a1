"""QRS morphology analysis: DTW dissimilarity and clinical criteria.

Dynamic time warping uses the classic full dynamic program with local
cost |a_i - b_j| and steps down/right/diagonal, returning the
unnormalized optimal path cost; it compares delineated QRS windows, which
is what makes complexes of different lengths comparable.

Local criteria: QRS duration (onset to offset at a 2% amplitude
threshold), pathological Q waves (duration >= 30 ms or amplitude >= 25%
of the R wave), fragmented QRS (extra prominent deflections beyond the
canonical Q/R/S set) and poor R-wave progression across V1..V6.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.signal import find_peaks

from .ecg import LEAD_NAMES, QRSRecording

ONSET_THRESHOLD_FRACTION = 0.02
FQRS_PROMINENCE_FRACTION = 0.05
PATHOLOGICAL_Q_MS = 30.0
PATHOLOGICAL_Q_R_RATIO = 0.25
PRWP_R_MM = 2.0

FQRS_LEAD_GROUPS = {
    "inferior": ("II",),
    "anterior": ("V3", "V4"),
    "lateral": ("V5", "V6"),
}


class DelineationError(ValueError):
    """No QRS complex found in a trace."""


@njit(cache=True)
def _dtw_kernel(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    prev[0] = abs(a[0] - b[0])
    for j in range(1, m):
        prev[j] = prev[j - 1] + abs(a[0] - b[j])
    for i in range(1, n):
        cur[0] = prev[0] + abs(a[i] - b[0])
        for j in range(1, m):
            best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = abs(a[i] - b[j]) + best
        prev, cur = cur, prev
    return prev[m - 1]


def dtw(a, b) -> float:
    """Unnormalized DTW path cost between two series (local cost |a-b|,
    steps down/right/diagonal, no window)."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("dtw inputs must be nonempty")
    return float(_dtw_kernel(a, b))


def delineate(trace, sample_period: float) -> tuple[float, float]:
    """(onset, offset) in ms: first and last sample above 2% of the peak."""
    trace = np.asarray(trace, dtype=float)
    peak = np.abs(trace).max() if trace.size else 0.0
    if peak <= 0.0:
        raise DelineationError("flat trace: no QRS complex")
    above = np.abs(trace) > ONSET_THRESHOLD_FRACTION * peak
    idx = np.where(above)[0]
    if idx.size == 0:
        raise DelineationError("no samples above the delineation threshold")
    return float(idx[0] * sample_period), float(idx[-1] * sample_period)


@dataclass
class LeadFeatures:
    onset: float
    offset: float
    duration: float
    q_amp: float = 0.0
    q_duration: float = 0.0
    r_amp: float = 0.0
    r_time: float = float("nan")
    s_amp: float = 0.0
    fqrs_count: int = 0
    pathological_q: bool = False


@dataclass
class QRSFeatures:
    leads: dict                      # lead name -> LeadFeatures
    duration: float                  # max per-lead duration (ms)
    pathological_q: bool
    fqrs_flags: dict                 # lead-group name -> bool
    prwp: bool


def _extrema(window, prominence: float):
    """Indices of prominent local extrema, in order, with their signs."""
    peaks, _ = find_peaks(window, prominence=prominence)
    troughs, _ = find_peaks(-window, prominence=prominence)
    idx = np.concatenate([peaks, troughs])
    sign = np.concatenate([np.ones(len(peaks)), -np.ones(len(troughs))])
    order = np.argsort(idx, kind="stable")
    return idx[order].astype(int), sign[order]


def analyze_lead(trace, sample_period: float) -> LeadFeatures:
    """Delineate one lead and extract Q/R/S morphology features."""
    trace = np.asarray(trace, dtype=float)
    onset, offset = delineate(trace, sample_period)
    i0 = int(round(onset / sample_period))
    i1 = int(round(offset / sample_period))
    window = trace[i0:i1 + 1]
    peak = np.abs(trace).max()
    # pad so deflections at the window edge register as extrema
    padded = np.concatenate([[0.0], window, [0.0]])
    idx, sign = _extrema(padded, FQRS_PROMINENCE_FRACTION * peak)
    idx = idx - 1

    feats = LeadFeatures(onset=onset, offset=offset, duration=offset - onset)
    canonical = 0
    pos = idx[(sign > 0) & (padded[idx + 1] > 0)]
    if pos.size:
        # dominant positive deflection defines the R amplitude; the Q wave,
        # if any, must precede the first positive deflection
        r_local = int(pos[np.argmax(window[pos])])
        first_pos = int(pos[0])
        feats.r_amp = float(window[r_local])
        feats.r_time = onset + r_local * sample_period
        canonical += 1
        before = idx[(sign < 0) & (idx < first_pos) & (padded[idx + 1] < 0)]
        after = idx[(sign < 0) & (idx > first_pos) & (padded[idx + 1] < 0)]
        if before.size:
            q_local = int(before[0])
            feats.q_amp = float(window[q_local])
            canonical += 1
            feats.q_duration = _deflection_end(window, q_local, sample_period)
        if after.size:
            feats.s_amp = float(window[int(after[0])])
            canonical += 1
    else:
        neg = idx[(sign < 0) & (padded[idx + 1] < 0)]
        if neg.size:
            # QS complex: one dominant negative deflection, counted as Q
            q_local = int(neg[np.argmin(window[neg])])
            feats.q_amp = float(window[q_local])
            feats.q_duration = _deflection_end(window, q_local, sample_period)
            canonical += 1
    feats.fqrs_count = max(0, len(idx) - canonical)
    feats.pathological_q = detect_pathological_q(feats)
    return feats


def _deflection_end(window, q_local: int, sample_period: float) -> float:
    """Duration of the negative deflection containing sample q_local,
    measured from QRS onset to its return to baseline."""
    end = q_local
    while end + 1 < len(window) and window[end + 1] < 0:
        end += 1
    return (end + 1) * sample_period


def detect_pathological_q(feats: LeadFeatures) -> bool:
    """Q wave lasting >= 30 ms or with amplitude >= 25% of the R wave."""
    if feats.q_amp >= 0.0:
        return False
    return (feats.q_duration >= PATHOLOGICAL_Q_MS
            or abs(feats.q_amp) >= PATHOLOGICAL_Q_R_RATIO * feats.r_amp)


def count_fqrs(trace, sample_period: float) -> int:
    return analyze_lead(trace, sample_period).fqrs_count


def detect_prwp(lead_features: dict, gain_mm: float) -> bool:
    """Poor R-wave progression over the precordial leads.

    True when R in V3 or V4 is 2 mm or less, or the progression reverses
    (R of V5 < R of V6, or R of V2 < R of V1).
    """
    r = {v: lead_features[v].r_amp for v in ("V1", "V2", "V3", "V4", "V5", "V6")}
    return (r["V3"] * gain_mm <= PRWP_R_MM
            or r["V4"] * gain_mm <= PRWP_R_MM
            or r["V5"] < r["V6"]
            or r["V2"] < r["V1"])


def extract_features(rec: QRSRecording) -> QRSFeatures:
    leads = {}
    for name in LEAD_NAMES:
        leads[name] = analyze_lead(rec.leads[name], rec.sample_period)
    fqrs_flags = {group: any(leads[l].fqrs_count >= 1 for l in members)
                  for group, members in FQRS_LEAD_GROUPS.items()}
    return QRSFeatures(
        leads=leads,
        duration=max(f.duration for f in leads.values()),
        pathological_q=any(f.pathological_q for f in leads.values()),
        fqrs_flags=fqrs_flags,
        prwp=detect_prwp(leads, rec.gain_mm),
    )


def _qrs_window(rec: QRSRecording, name: str) -> np.ndarray:
    trace = np.asarray(rec.leads[name], dtype=float)
    try:
        onset, offset = delineate(trace, rec.sample_period)
    except DelineationError:
        return trace
    i0 = int(round(onset / rec.sample_period))
    i1 = int(round(offset / rec.sample_period))
    return trace[i0:i1 + 1]


def lead_dtw(a: QRSRecording, b: QRSRecording, name: str) -> float:
    """DTW between the delineated QRS windows of one lead of two recordings."""
    return dtw(_qrs_window(a, name), _qrs_window(b, name))


@dataclass
class DissimilarityReport:
    names: list                       # scenario names, baseline excluded
    per_lead: np.ndarray              # (n_scenarios, 12) DTW vs baseline
    dtw_max: np.ndarray
    dtw_avg: np.ndarray
    pairwise_names: list              # baseline + scenarios
    pairwise: np.ndarray              # mean-over-leads DTW between runs

    def row(self, name: str) -> dict:
        i = self.names.index(name)
        return {"per_lead": dict(zip(LEAD_NAMES, self.per_lead[i])),
                "dtw_max": float(self.dtw_max[i]), "dtw_avg": float(self.dtw_avg[i])}


def dissimilarity_report(baseline: QRSRecording, scenarios: dict) -> DissimilarityReport:
    """Per-lead DTW of each scenario against baseline plus the pairwise
    mean-over-leads matrix across all runs (baseline included)."""
    for name, rec in scenarios.items():
        if set(rec.leads) != set(baseline.leads):
            raise ValueError(f"{name}: lead set does not match baseline")
    names = list(scenarios)
    base_win = {l: _qrs_window(baseline, l) for l in LEAD_NAMES}
    wins = [base_win] + [{l: _qrs_window(rec, l) for l in LEAD_NAMES}
                         for rec in scenarios.values()]

    per_lead = np.array([[dtw(w[l], base_win[l]) for l in LEAD_NAMES]
                         for w in wins[1:]]) if names else np.zeros((0, len(LEAD_NAMES)))
    all_names = ["baseline"] + names
    pairwise = np.zeros((len(all_names), len(all_names)))
    for i in range(len(all_names)):
        for j in range(i + 1, len(all_names)):
            vals = [dtw(wins[i][l], wins[j][l]) for l in LEAD_NAMES]
            pairwise[i, j] = pairwise[j, i] = float(np.mean(vals))
    return DissimilarityReport(
        names=names, per_lead=per_lead,
        dtw_max=per_lead.max(axis=1) if names else np.zeros(0),
        dtw_avg=per_lead.mean(axis=1) if names else np.zeros(0),
        pairwise_names=all_names, pairwise=pairwise)
