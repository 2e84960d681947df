"""Verification report records and their JSON / text serialization."""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional


@dataclass
class Check:
    """One verification outcome.  ``threshold`` is what ``estimate`` was held to."""

    name: str
    estimate: float
    se: float
    threshold: float
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)
    note: Optional[str] = None

    def as_dict(self):
        out = {
            "name": self.name,
            "estimate": _finite_or_none(self.estimate),
            "SE": _finite_or_none(self.se),
            "threshold": _finite_or_none(self.threshold),
            "pass": bool(self.passed),
        }
        if self.details:
            out["details"] = self.details
        if self.note:
            out["note"] = self.note
        return out

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: estimate={self.estimate:.6g} SE={self.se:.3g} threshold={self.threshold:.6g}"


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def write_report(checks, json_path, text_path, meta=None):
    """Write the JSON report and the human-readable summary; return overall pass."""
    all_pass = all(c.passed for c in checks)
    payload = {"all_pass": all_pass, "checks": [c.as_dict() for c in checks]}
    if meta:
        payload["meta"] = meta
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_jsonable)
        fh.write("\n")
    with open(text_path, "w") as fh:
        for c in checks:
            fh.write(c.line() + "\n")
            if c.note:
                fh.write(f"    note: {c.note}\n")
        n_fail = sum(not c.passed for c in checks)
        fh.write(f"{len(checks) - n_fail}/{len(checks)} checks passed\n")
    return all_pass


def _jsonable(x):
    try:
        import numpy as np

        if isinstance(x, np.ndarray):
            return x.tolist()
        if isinstance(x, np.generic):
            return x.item()
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"not JSON serializable: {type(x)}")
