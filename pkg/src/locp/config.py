"""Tolerance configuration.

All comparisons in the package are relative: an equality check
``x == y`` is implemented as ``||x - y|| <= eq * scale`` where ``scale``
is max(1, norms involved), and eigenvalue nonnegativity is checked
against ``-psd * spectral_norm``.  The defaults can be overridden per
call, via :func:`set_default_tolerances`, or through the environment
variables ``LOCP_TOL_EQ``, ``LOCP_TOL_PSD``, ``LOCP_TOL_RANK`` and
``LOCP_TOL_ROUNDTRIP``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    eq: float = 1e-9          # relative Frobenius tolerance for equalities
    psd: float = 1e-10        # relative eigenvalue tolerance for PSD checks
    rank: float = 1e-10       # relative singular-value threshold for ranks
    roundtrip: float = 1e-7   # derivative round-trip tolerance

    def with_overrides(self, **kwargs) -> "Tolerances":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


def _from_env() -> Tolerances:
    def get(name: str, default: float) -> float:
        raw = os.environ.get(name)
        return float(raw) if raw else default

    return Tolerances(
        eq=get("LOCP_TOL_EQ", 1e-9),
        psd=get("LOCP_TOL_PSD", 1e-10),
        rank=get("LOCP_TOL_RANK", 1e-10),
        roundtrip=get("LOCP_TOL_ROUNDTRIP", 1e-7),
    )


_DEFAULT = _from_env()


def default_tolerances() -> Tolerances:
    return _DEFAULT


def set_default_tolerances(tols: Tolerances) -> None:
    global _DEFAULT
    _DEFAULT = tols


def resolve(tols: Tolerances | None) -> Tolerances:
    return _DEFAULT if tols is None else tols
