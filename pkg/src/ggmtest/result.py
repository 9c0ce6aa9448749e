"""Result record shared by the goodness-of-fit and conditional randomization tests."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = ["TestResult"]


@dataclass
class TestResult:
    """Observed statistic, copy statistics and p-value of one Monte Carlo test."""

    __test__ = False  # keep pytest from collecting this class

    statistic: str
    observed: float
    copies: np.ndarray
    pvalue: float
    mode: str
    seed: int
    iterations: int
    warnings: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)
    copy_data: np.ndarray | None = None

    @property
    def num_copies(self) -> int:
        return int(np.size(self.copies))

    def reject(self, alpha: float = 0.05) -> bool:
        return self.pvalue <= alpha

    def to_dict(self) -> dict[str, Any]:
        return {
            "statistic": self.statistic,
            "observed": float(self.observed),
            "copies": [float(v) for v in np.ravel(self.copies)],
            "pvalue": float(self.pvalue),
            "mode": self.mode,
            "seed": int(self.seed),
            "M": self.num_copies,
            "L": int(self.iterations),
            "warnings": list(self.warnings),
            "extra": _jsonable(self.extra),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestResult":
        missing = {"statistic", "observed", "copies", "pvalue", "mode", "seed", "L"} - set(d)
        if missing:
            raise ValueError(f"result record lacks fields: {sorted(missing)}")
        copies = np.asarray(d["copies"], dtype=float)
        if "M" in d and int(d["M"]) != copies.size:
            raise ValueError("M does not match the number of copy statistics")
        p = float(d["pvalue"])
        if not 0 < p <= 1:
            raise ValueError("pvalue must lie in (0, 1]")
        return cls(
            statistic=str(d["statistic"]),
            observed=float(d["observed"]),
            copies=copies,
            pvalue=p,
            mode=str(d["mode"]),
            seed=int(d["seed"]),
            iterations=int(d["L"]),
            warnings=list(d.get("warnings", [])),
            extra=dict(d.get("extra", {})),
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
