"""Training-set container, CSV/JSON ingestion, and synthetic DGPs.

File formats
------------
CSV with header ``y,x1,...,xp`` and one row per observation, numbers written
with full round-trip precision; or a JSON array of ``{"y": number,
"x": [number, ...]}`` objects.  Non-finite values are rejected.

Sampling contract
-----------------
Every DGP draws exactly ``p + 1`` standard normals per row, in row order, and
transforms them deterministically.  Hence the first ``m`` rows drawn from a
stream equal an ``m``-row draw from a fresh stream with the same key, which
gives nested common random numbers across sample sizes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr
from scipy.stats import t as student_t

from .errors import DimensionMismatch, MalformedInput, TooFewRows
from .rng import stream


@dataclass(frozen=True)
class TrainingSet:
    """Immutable i.i.d. sample of response-feature rows.

    Datasets enter the library with n >= 2 (enforced by loaders and
    samplers); leave-fold-out refits may construct single-row subsets.
    """

    y: np.ndarray  # shape (n,)
    x: np.ndarray  # shape (n, p)

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        x = np.ascontiguousarray(self.x, dtype=float)
        if y.ndim != 1 or x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise DimensionMismatch("y must be (n,) and x must be (n, p)")
        if y.shape[0] < 1:
            raise TooFewRows("training set must not be empty")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise MalformedInput("non-finite value in training data")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "TrainingSet":
        return TrainingSet(self.y[idx], self.x[idx])

    def head(self, m: int) -> "TrainingSet":
        return TrainingSet(self.y[:m], self.x[:m])


def _parse_float(token: str, where: str) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise MalformedInput(f"{where}: not a number: {token!r}") from exc
    if not math.isfinite(value):
        raise MalformedInput(f"{where}: non-finite value {token!r}")
    return value


def _from_rows(rows: list[tuple[float, list[float]]]) -> TrainingSet:
    if len(rows) < 2:
        raise TooFewRows(f"need at least 2 rows, got {len(rows)}")
    p = len(rows[0][1])
    if any(len(x) != p for _, x in rows):
        raise MalformedInput("ragged rows: feature dimensions differ")
    y = np.array([y for y, _ in rows], dtype=float)
    x = np.array([x for _, x in rows], dtype=float).reshape(len(rows), p)
    return TrainingSet(y, x)


def load_dataset(path, format: str = "csv") -> TrainingSet:
    """Read a dataset file; ``format`` is ``"csv"`` or ``"json"``."""
    text = Path(path).read_text()
    if format == "csv":
        return _parse_csv(text)
    if format == "json":
        return _parse_json(text)
    raise MalformedInput(f"unknown format {format!r}")


def _parse_csv(text: str) -> TrainingSet:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TooFewRows("empty file") from None
    header = [h.strip() for h in header]
    p = len(header) - 1
    if p < 0 or header[0] != "y" or header[1:] != [f"x{i}" for i in range(1, p + 1)]:
        raise MalformedInput(f"bad header {header!r}, expected y,x1,...,xp")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != p + 1:
            raise MalformedInput(f"line {lineno}: expected {p + 1} fields, got {len(row)}")
        values = [_parse_float(tok, f"line {lineno}") for tok in row]
        rows.append((values[0], values[1:]))
    return _from_rows(rows)


def _parse_json(text: str) -> TrainingSet:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise MalformedInput("JSON dataset must be an array of {y, x} objects")
    rows = []
    for i, obj in enumerate(data):
        if not isinstance(obj, dict) or "y" not in obj or "x" not in obj:
            raise MalformedInput(f"element {i}: expected an object with keys y and x")
        y = _parse_float(str(obj["y"]), f"element {i}")
        xs = obj["x"]
        if not isinstance(xs, list):
            raise MalformedInput(f"element {i}: x must be an array")
        rows.append((y, [_parse_float(str(v), f"element {i}") for v in xs]))
    return _from_rows(rows)


def save_dataset(train: TrainingSet, path, format: str = "csv") -> None:
    """Write a dataset with round-trip decimal precision."""
    path = Path(path)
    if format == "csv":
        lines = ["y," + ",".join(f"x{i}" for i in range(1, train.p + 1)) if train.p else "y"]
        for i in range(train.n):
            fields = [repr(float(train.y[i]))] + [repr(float(v)) for v in train.x[i]]
            lines.append(",".join(fields))
        path.write_text("\n".join(lines) + "\n")
    elif format == "json":
        rows = [{"y": float(train.y[i]), "x": [float(v) for v in train.x[i]]} for i in range(train.n)]
        path.write_text(json.dumps(rows))
    else:
        raise MalformedInput(f"unknown format {format!r}")


DGP_KINDS = ("gaussian_linear", "student_linear", "classification_grid", "custom_table", "dirac_first_coord")


@dataclass(frozen=True)
class DgpSpec:
    """Synthetic data-generating process.

    kinds and params:
      gaussian_linear:    beta (len p), sigma > 0; y = beta'x + sigma*z
      student_linear:     beta, sigma > 0, dof > 0; heavy-tailed t noise
      classification_grid: p, class_count K >= 2; y = 1 + (floor(K*Phi(x1)) mod K)
      custom_table:       table_y, table_x; rows resampled uniformly
      dirac_first_coord:  p, point; x1 pinned to `point`, y standard normal
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise MalformedInput(f"unknown dgp kind {self.kind!r}")
        p = self.params
        if self.kind in ("gaussian_linear", "student_linear"):
            beta = np.asarray(p["beta"], dtype=float)
            if beta.ndim != 1:
                raise DimensionMismatch("beta must be a vector")
            if not p.get("sigma", 1.0) > 0:
                raise MalformedInput("sigma must be positive")
            if self.kind == "student_linear" and not p.get("dof", 0) > 0:
                raise MalformedInput("dof must be positive")
        elif self.kind == "classification_grid":
            if int(p.get("class_count", 0)) < 2:
                raise MalformedInput("class_count must be at least 2")

    @property
    def p(self) -> int:
        if self.kind in ("gaussian_linear", "student_linear"):
            return len(self.params["beta"])
        if self.kind == "custom_table":
            return int(np.asarray(self.params["table_x"]).shape[1])
        return int(self.params.get("p", 1))

    def draw(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw n rows (y, x); consumes (p + 1) normals per row in row order."""
        p = self.p
        block = rng.standard_normal((n, p + 1))
        x = block[:, :p].copy()
        z = block[:, p]
        if self.kind == "gaussian_linear":
            beta = np.asarray(self.params["beta"], dtype=float)
            sigma = float(self.params.get("sigma", 1.0))
            y = x @ beta + sigma * z
        elif self.kind == "student_linear":
            beta = np.asarray(self.params["beta"], dtype=float)
            sigma = float(self.params.get("sigma", 1.0))
            dof = float(self.params["dof"])
            y = x @ beta + sigma * student_t.ppf(ndtr(z), dof)
        elif self.kind == "classification_grid":
            K = int(self.params["class_count"])
            y = 1.0 + np.floor(K * ndtr(x[:, 0])) % K
        elif self.kind == "custom_table":
            ty = np.asarray(self.params["table_y"], dtype=float)
            tx = np.asarray(self.params["table_x"], dtype=float)
            idx = np.minimum((ndtr(z) * ty.size).astype(int), ty.size - 1)
            y = ty[idx]
            x = tx[idx]
        else:  # dirac_first_coord
            x[:, 0] = float(self.params["point"])
            y = z.copy()
        return y, x

    def sample(self, n: int, rng: np.random.Generator) -> TrainingSet:
        if n < 2:
            raise TooFewRows("a sampled training set needs n >= 2")
        y, x = self.draw(n, rng)
        return TrainingSet(y, x)

    def to_dict(self) -> dict:
        params = {
            k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.params.items()
        }
        return {"kind": self.kind, **params}

    @classmethod
    def from_dict(cls, obj: dict) -> "DgpSpec":
        obj = dict(obj)
        kind = obj.pop("kind")
        return cls(kind, obj)


def sample_gaussian_linear(n: int, p: int, beta, sigma: float, seed: int) -> TrainingSet:
    """i.i.d. rows with x ~ N(0, I_p) and y = beta'x + N(0, sigma^2)."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (p,):
        raise DimensionMismatch(f"beta has length {beta.size}, expected {p}")
    if not sigma > 0:
        raise MalformedInput("sigma must be positive")
    dgp = DgpSpec("gaussian_linear", {"beta": beta, "sigma": float(sigma)})
    return dgp.sample(n, stream(seed))


def sample_classification(n: int, p: int, class_count: int, seed: int) -> TrainingSet:
    """x ~ N(0, I_p); class y = 1 + (floor(K * Phi(x1)) mod K), K = class_count."""
    dgp = DgpSpec("classification_grid", {"p": int(p), "class_count": int(class_count)})
    return dgp.sample(n, stream(seed))
