"""Chain container and its on-disk format.

A chain holds N states in *original* parameter coordinates, the posterior
log density at each state, and the cumulative model-evaluation count.  Row 0
is the initial state; each later row is one sampler transition.

Persisted form: a CSV with columns ``step,<param...>,log_post,cum_evals``
(floats printed with %.17g so reruns are byte-identical) plus a JSON sidecar
``<stem>.meta.json`` carrying the sampler name, seed, burn-in offset, walker
count, and sampler-specific extras.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ValidationError

__all__ = ["Chain", "save_chain", "load_chain"]

_META_SCHEMA = 1


@dataclass
class Chain:
    params: tuple[str, ...]
    states: np.ndarray
    log_post: np.ndarray
    cum_evals: np.ndarray
    sampler: str
    seed: int | None = None
    burn_in: int | None = None
    walkers: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = tuple(self.params)
        self.states = np.asarray(self.states, dtype=float)
        self.log_post = np.asarray(self.log_post, dtype=float)
        self.cum_evals = np.asarray(self.cum_evals, dtype=np.int64)
        n, p = self.states.shape if self.states.ndim == 2 else (-1, -1)
        if self.states.ndim != 2 or p != len(self.params):
            raise ValidationError(
                f"states must be (N, {len(self.params)}), got {self.states.shape}")
        if self.log_post.shape != (n,) or self.cum_evals.shape != (n,):
            raise ValidationError("log_post and cum_evals must have one entry per state")
        if np.any(np.diff(self.cum_evals) < 0):
            raise ValidationError("cumulative evaluation counts must be non-decreasing")
        if self.burn_in is not None and not (0 <= self.burn_in < n):
            raise ValidationError(f"burn-in {self.burn_in} outside chain of length {n}")

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def trimmed(self, burn_in: int | None = None) -> "Chain":
        """Copy with the first ``burn_in`` rows removed (default: own offset)."""
        b = self.burn_in if burn_in is None else int(burn_in)
        if b is None:
            raise ValidationError("no burn-in offset known; run burn-in detection first")
        if not (0 <= b < self.n):
            raise ValidationError(f"burn-in {b} outside chain of length {self.n}")
        return replace(self, states=self.states[b:], log_post=self.log_post[b:],
                       cum_evals=self.cum_evals[b:], burn_in=0)

    def prefix(self, n: int) -> "Chain":
        """Copy holding only the first ``n`` rows."""
        if not (1 <= n <= self.n):
            raise ValidationError(f"prefix length {n} outside [1, {self.n}]")
        return replace(self, states=self.states[:n], log_post=self.log_post[:n],
                       cum_evals=self.cum_evals[:n])


def save_chain(chain: Chain, path) -> None:
    """Write ``<path>`` (CSV) and ``<path stem>.meta.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = "step," + ",".join(chain.params) + ",log_post,cum_evals"
    lines = [header]
    for i in range(chain.n):
        cells = [str(i)]
        cells += [format(x, ".17g") for x in chain.states[i]]
        cells.append(format(chain.log_post[i], ".17g"))
        cells.append(str(int(chain.cum_evals[i])))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")

    meta = {
        "schema": _META_SCHEMA,
        "sampler": chain.sampler,
        "seed": chain.seed,
        "params": list(chain.params),
        "n_samples": chain.n,
        "burn_in": chain.burn_in,
        "walkers": chain.walkers,
    }
    meta.update(_jsonify(chain.meta))
    path.with_suffix(".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=1) + "\n")


def load_chain(path) -> Chain:
    """Inverse of :func:`save_chain`."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[0] != "step" or header[-2:] != ["log_post", "cum_evals"] or len(header) < 4:
        raise ValidationError(f"unrecognized chain CSV header in {path}")
    params = tuple(header[1:-2])
    meta_path = path.with_suffix(".meta.json")
    info = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    if info and info.get("schema") != _META_SCHEMA:
        raise ValidationError(
            f"chain metadata schema {info.get('schema')} != {_META_SCHEMA} in {meta_path}")
    known = {"schema", "sampler", "seed", "params", "n_samples", "burn_in", "walkers"}
    extras = {k: v for k, v in info.items() if k not in known}
    return Chain(
        params=params,
        states=data[:, 1:-2],
        log_post=data[:, -2],
        cum_evals=data[:, -1].astype(np.int64),
        sampler=info.get("sampler", "unknown"),
        seed=info.get("seed"),
        burn_in=info.get("burn_in"),
        walkers=info.get("walkers", 1),
        meta=extras,
    )


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
