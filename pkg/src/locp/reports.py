"""Certificate reports returned by verification routines.

Verifications never raise on mathematical failure; they produce a
:class:`CertificateReport` with one entry per checked level plus
whole-object residuals.  Reports are plain data and JSON-friendly.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class LevelCheck:
    level: int
    passed: bool
    witness: int | None = None
    values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"level": self.level, "pass": self.passed}
        if self.witness is not None:
            d["witness"] = self.witness
        d.update(self.values)
        return d


@dataclass
class CertificateReport:
    kind: str
    passed: bool
    levels: list[LevelCheck] = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def level(self, l: int) -> LevelCheck:
        for entry in self.levels:
            if entry.level == l:
                return entry
        raise KeyError(f"no level {l} in report")

    def merge(self, other: "CertificateReport", kind: str) -> "CertificateReport":
        """Conjunction of two reports over the same level set."""
        merged: list[LevelCheck] = []
        other_by_level = {e.level: e for e in other.levels}
        for e in self.levels:
            o = other_by_level.get(e.level)
            if o is None:
                merged.append(e)
                continue
            vals = dict(e.values)
            vals.update(o.values)
            merged.append(LevelCheck(e.level, e.passed and o.passed,
                                     e.witness if e.witness is not None else o.witness,
                                     vals))
        vals = dict(self.values)
        vals.update(other.values)
        return CertificateReport(kind, self.passed and other.passed, merged, vals)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "pass": self.passed,
            "levels": [e.to_dict() for e in self.levels],
            **self.values,
        }

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.kind}"]
        for e in self.levels:
            vals = ", ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}"
                             for k, v in e.values.items())
            w = f" (witness {e.witness})" if e.witness is not None else ""
            lines.append(f"  level {e.level}{w}: "
                         f"{'pass' if e.passed else 'FAIL'}  {vals}")
        for k, v in self.values.items():
            if isinstance(v, float):
                lines.append(f"  {k} = {v:.3e}")
        return "\n".join(lines)
