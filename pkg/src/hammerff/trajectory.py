"""Quintic point-to-point references and multi-segment training setpoints."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "QuinticSpec",
    "ReferenceSet",
    "quintic",
    "quintic_profile",
    "concat_references",
    "chain_segments",
    "peak_acceleration",
    "PEAK_ACCEL_FACTOR",
]

#: max |d^2/ds^2 (10 s^3 - 15 s^4 + 6 s^5)| attained at s = 1/2 -+ 1/(2 sqrt 3)
PEAK_ACCEL_FACTOR = 10.0 / math.sqrt(3.0)


def _samples(duration, ts, what):
    n = duration / ts
    k = round(n)
    if abs(n - k) > 1e-9 * max(1.0, abs(n)):
        raise ConfigurationError(f"{what} {duration!r} s is not an integer multiple of Ts={ts!r}")
    return int(k)


@dataclass(frozen=True)
class QuinticSpec:
    """One rest-to-rest quintic move.

    ``dwell_before``/``dwell_after`` hold the start/end position for the given
    time in seconds.
    """

    distance: float
    duration: float
    start_position: float = 0.0
    dwell_after: float = 0.0
    dwell_before: float = 0.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigurationError("duration must be positive")
        if self.dwell_after < 0 or self.dwell_before < 0:
            raise ConfigurationError("dwell times must be non-negative")

    @property
    def end_position(self):
        return self.start_position + self.distance

    def sample_count(self, ts):
        return (_samples(self.dwell_before, ts, "dwell_before") + _samples(self.duration, ts, "duration")
                + 1 + _samples(self.dwell_after, ts, "dwell_after"))

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self):
        return {"distance": self.distance, "duration": self.duration,
                "start_position": self.start_position, "dwell_after": self.dwell_after,
                "dwell_before": self.dwell_before}


def quintic_profile(s):
    """Normalized rest-to-rest quintic ``10 s^3 - 15 s^4 + 6 s^5``."""
    s = np.asarray(s, dtype=float)
    return s ** 3 * (10.0 + s * (-15.0 + 6.0 * s))


def peak_acceleration(spec):
    """Analytic peak |acceleration| of the move in m/s^2."""
    return PEAK_ACCEL_FACTOR * abs(spec.distance) / spec.duration ** 2


def quintic(spec, ts):
    """Sampled position signal for ``spec`` at sampling time ``ts``.

    The move samples ``s = k/n`` for ``k = 0..n`` (both endpoints included),
    preceded and followed by the dwell samples.
    """
    n = _samples(spec.duration, ts, "duration")
    if n < 2:
        raise ConfigurationError("duration must span at least 2 samples")
    pre = _samples(spec.dwell_before, ts, "dwell_before")
    post = _samples(spec.dwell_after, ts, "dwell_after")
    move = spec.start_position + spec.distance * quintic_profile(np.arange(n + 1) / n)
    return np.concatenate([np.full(pre, spec.start_position), move,
                           np.full(post, spec.end_position)])


def chain_segments(segments, start=0.0):
    """Copies of ``segments`` with start positions chained end to start."""
    out = []
    pos = start
    for seg in segments:
        out.append(replace(seg, start_position=pos))
        pos += seg.distance
    return out


def concat_references(segments, ts, atol=1e-12):
    """Concatenate quintic segments into one reference.

    Raises :class:`ConfigurationError` if a segment does not start where the
    previous one ended.
    """
    segments = list(segments)
    if not segments:
        raise ConfigurationError("no segments to concatenate")
    for i in range(1, len(segments)):
        prev, cur = segments[i - 1], segments[i]
        if abs(cur.start_position - prev.end_position) > atol * max(1.0, abs(prev.end_position)):
            raise ConfigurationError(
                f"segment {i} starts at {cur.start_position!r}, previous ends at {prev.end_position!r}")
    return np.concatenate([quintic(seg, ts) for seg in segments])


@dataclass(frozen=True)
class ReferenceSet:
    """Benchmark references plus the trial schedule (trial index -> segment index)."""

    segments: tuple
    schedule: tuple = (0, 0, 0, 1, 1, 2, 2)
    training_dwell: float = 0.05
    labels: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "schedule", tuple(int(s) for s in self.schedule))
        if not self.segments:
            raise ConfigurationError("reference set needs at least one segment")
        if not self.schedule:
            raise ConfigurationError("schedule must cover at least one trial")
        bad = [s for s in self.schedule if not 0 <= s < len(self.segments)]
        if bad:
            raise ConfigurationError(f"schedule refers to unknown segments {bad}")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"r{i + 1}" for i in range(len(self.segments))))

    @property
    def n_trials(self):
        return len(self.schedule)

    @property
    def motion_distance(self):
        """Distance of the first reference, used to normalize errors and noise."""
        return abs(self.segments[0].distance)

    def trial_reference(self, trial, ts):
        return quintic(self.segments[self.schedule[trial]], ts)

    def training_segments(self):
        segs = [replace(s, dwell_after=self.training_dwell) for s in self.segments]
        return chain_segments(segs, start=self.segments[0].start_position)

    def training_reference(self, ts):
        """All segments back to back with ``training_dwell`` after each."""
        return concat_references(self.training_segments(), ts)

    @classmethod
    def from_dict(cls, d):
        segs = [QuinticSpec.from_dict(s) for s in d["segments"]]
        kw = {}
        if "schedule" in d:
            kw["schedule"] = tuple(d["schedule"])
        if "training_dwell" in d:
            kw["training_dwell"] = float(d["training_dwell"])
        if "labels" in d:
            kw["labels"] = tuple(d["labels"])
        return cls(tuple(segs), **kw)

    def to_dict(self):
        return {"segments": [s.to_dict() for s in self.segments], "schedule": list(self.schedule),
                "training_dwell": self.training_dwell, "labels": list(self.labels)}
