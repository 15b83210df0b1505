"""Numerical tolerances shared by all modules."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields

SCALE_ENV = "BSAKIT_TOLERANCE_SCALE"


@dataclass(frozen=True)
class Tolerances:
    """Absolute tolerances, meant for inputs normalized to unit trace/norm.

    herm  -- max |m - m^dagger| entry accepted as Hermitian
    psd   -- most negative eigenvalue accepted (and clamped) as zero
    eig   -- eigen/inverse residual target
    rank  -- Gram determinant / trace below which a set or map is degenerate
    cert  -- optimality certificate residuals
    """

    herm: float = 1e-9
    psd: float = 1e-9
    eig: float = 1e-10
    rank: float = 1e-10
    cert: float = 1e-8

    def scaled(self, factor: float) -> Tolerances:
        if not factor > 0:
            raise ValueError(f"tolerance scale must be positive, got {factor!r}")
        return Tolerances(**{f.name: getattr(self, f.name) * factor for f in fields(self)})

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()


def from_env(environ=None) -> Tolerances:
    """Default tolerances multiplied by ``$BSAKIT_TOLERANCE_SCALE`` (1.0 if unset)."""
    environ = os.environ if environ is None else environ
    raw = environ.get(SCALE_ENV, "").strip()
    if not raw:
        return DEFAULT
    return DEFAULT.scaled(float(raw))
