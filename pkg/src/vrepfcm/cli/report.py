"""Run reports written by every CLI invocation."""

from __future__ import annotations

import json
import os
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field


@dataclass
class RunReport:
    command: str
    config: str | None = None
    seed: int = 0
    status: str = "running"
    timings: dict = field(default_factory=dict)
    dofs: int | None = None
    quadrature_points: int | None = None
    energy: float | None = None
    residuals: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    error: dict | None = None

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def fail(self, category: str, message: str, code: int):
        self.status = "failed"
        self.error = {"category": category, "message": message, "exit_code": code}

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, out_dir: str, name: str = "report.json"):
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
        return path


def _jsonable(o):
    import numpy as np

    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"{type(o).__name__} is not JSON serializable")
