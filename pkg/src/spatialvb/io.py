"""File formats: weight-matrix triplets, delimited data with NA markers,
and the artifact layout written by the CLI.

Reals are serialized with repr(), the shortest decimal that round-trips, so
replicate comparisons are exact.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .missing import MissingPattern
from .vb import FitResult
from .weights import SpatialWeights

NA_TOKEN = "NA"


def _fmt(x) -> str:
    return repr(float(x))


# -- weight matrices ----------------------------------------------------------


def write_weights(w: SpatialWeights, path) -> None:
    """Coordinate triplets `i j weight`, 0-based, both triangles."""
    coo = w.matrix.tocoo()
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {_fmt(v)}\n")


def read_weights(path, row_normalized: bool | None = None) -> SpatialWeights:
    """Read triplet text; tolerates a MatrixMarket header (1-based indices,
    size line). Entries present in only one triangle are mirrored.

    If row_normalized is None it is detected from the row sums.
    """
    lines = Path(path).read_text().splitlines()
    market = bool(lines) and lines[0].startswith("%%MatrixMarket")
    entries: dict[tuple[int, int], float] = {}
    size_line_pending = market
    n_declared = None
    for line in lines:
        line = line.strip()
        if not line or line.startswith("%") or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        if size_line_pending:
            n_declared = int(parts[0])
            if int(parts[1]) != n_declared:
                raise ValueError("weight matrix must be square")
            size_line_pending = False
            continue
        if len(parts) == 2:
            i, j, v = int(parts[0]), int(parts[1]), 1.0
        elif len(parts) == 3:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        else:
            raise ValueError(f"malformed triplet line: {line!r}")
        if market:
            i, j = i - 1, j - 1
        if i == j:
            raise ValueError(f"diagonal weight entry at unit {i}")
        if (i, j) in entries and entries[(i, j)] != v:
            raise ValueError(f"conflicting duplicate entry at ({i}, {j})")
        entries[(i, j)] = v
    if not entries:
        raise ValueError(f"no weight entries found in {path}")
    for (i, j), v in list(entries.items()):
        if (j, i) not in entries:
            entries[(j, i)] = v
    n = n_declared if n_declared is not None else 1 + max(max(i, j) for i, j in entries)
    rows = np.fromiter((k[0] for k in entries), dtype=np.intp, count=len(entries))
    cols = np.fromiter((k[1] for k in entries), dtype=np.intp, count=len(entries))
    vals = np.fromiter(entries.values(), dtype=float, count=len(entries))
    m = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if row_normalized is None:
        sums = np.asarray(m.sum(axis=1)).ravel()
        occupied = np.diff(m.indptr) > 0
        row_normalized = bool(np.allclose(sums[occupied], 1.0, atol=1e-12))
    return SpatialWeights(matrix=m, row_normalized=row_normalized)


# -- delimited data -----------------------------------------------------------


def write_response(y: np.ndarray, path, pattern: MissingPattern | None = None) -> None:
    """One `y` column; positions flagged missing are written as NA."""
    missing = set(pattern.unobserved_idx.tolist()) if pattern is not None else set()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"])
        for i, v in enumerate(np.asarray(y, dtype=float)):
            writer.writerow([NA_TOKEN if i in missing else _fmt(v)])


def read_response(path) -> tuple[np.ndarray, MissingPattern]:
    """Returns (values with NaN at missing positions, pattern)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0].strip().lower() != "y":
            raise ValueError(f"{path}: expected a 'y' header row")
        vals, miss = [], []
        for row in reader:
            if not row:
                continue
            token = row[0].strip()
            if token == "":
                raise ValueError(f"{path}: empty field; use the explicit NA token")
            if token.upper() == NA_TOKEN:
                vals.append(np.nan)
                miss.append(1)
            else:
                vals.append(float(token))
                miss.append(0)
    return np.asarray(vals), MissingPattern(m=np.asarray(miss, dtype=np.int8))


def write_matrix(mat: np.ndarray, path, prefix: str) -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{prefix}{j}" for j in range(mat.shape[1])])
        for row in mat:
            writer.writerow([_fmt(v) for v in row])


def read_matrix(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ncol = len(header)
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != ncol:
                raise ValueError(f"{path}: ragged row {row!r}")
            rows.append([float(v) for v in row])
    return np.asarray(rows)


def write_pattern(pattern: MissingPattern, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "m"])
        for i, m in enumerate(pattern.m):
            writer.writerow([i, int(m)])


def read_pattern(path) -> MissingPattern:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        pairs = [(int(r[0]), int(r[1])) for r in reader if r]
    m = np.zeros(len(pairs), dtype=np.int8)
    for i, v in pairs:
        m[i] = v
    return MissingPattern(m=m)


# -- dataset bundles ----------------------------------------------------------


@dataclass
class Dataset:
    x: np.ndarray
    weights: SpatialWeights
    y: np.ndarray                 # NaN at missing positions
    pattern: MissingPattern
    x_star: np.ndarray | None
    y_full: np.ndarray | None
    truth: dict | None
    digest: str | None = None

    @property
    def y_obs(self) -> np.ndarray:
        return self.y[self.pattern.observed_idx]

    @property
    def mechanism(self) -> str:
        return "mnar" if self.x_star is not None else "mar"


def dataset_digest(directory) -> str:
    directory = Path(directory)
    h = hashlib.sha256()
    for name in sorted(p.name for p in directory.iterdir() if p.is_file()):
        if name == "manifest.json":
            continue
        h.update(name.encode())
        h.update((directory / name).read_bytes())
    return h.hexdigest()


def write_dataset(sim, cfg, out_dir, version: str) -> None:
    """Emit the file bundle for a simulated dataset."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_response(sim.y_full, out / "y.csv", pattern=sim.pattern)
    write_response(sim.y_full, out / "y_full.csv")
    write_matrix(sim.x, out / "X.csv", "x")
    write_weights(sim.weights, out / "W.txt")
    write_pattern(sim.pattern, out / "pattern.csv")
    truth = {"beta": [float(b) for b in sim.truth.beta],
             "sigma2_y": sim.truth.sigma2_y, "rho": sim.truth.rho,
             "seed": cfg.seed}
    if sim.selection is not None:
        write_matrix(sim.selection.x_star, out / "Xstar.csv", "xstar")
        truth["psi"] = {"psi_x": [float(v) for v in sim.selection.psi_x],
                        "psi_y": float(sim.selection.psi_y)}
    (out / "truth.json").write_text(json.dumps(truth, indent=2))
    (out / "sim_config.json").write_text(cfg.to_json())
    manifest = {"kind": "dataset", "seed": cfg.seed, "version": version,
                "config_sha256": hashlib.sha256(cfg.to_json().encode()).hexdigest(),
                "digest": dataset_digest(out)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    y, pattern = read_response(d / "y.csv")
    x = read_matrix(d / "X.csv")
    weights = read_weights(d / "W.txt")
    x_star = read_matrix(d / "Xstar.csv") if (d / "Xstar.csv").exists() else None
    y_full = None
    if (d / "y_full.csv").exists():
        y_full, _ = read_response(d / "y_full.csv")
    truth = None
    if (d / "truth.json").exists():
        truth = json.loads((d / "truth.json").read_text())
    if (d / "pattern.csv").exists():
        stored = read_pattern(d / "pattern.csv")
        if not np.array_equal(stored.m, pattern.m):
            raise ValueError(f"{d}: pattern.csv disagrees with the NAs in y.csv")
    digest = None
    if (d / "manifest.json").exists():
        digest = json.loads((d / "manifest.json").read_text()).get("digest")
    if digest is None:
        digest = dataset_digest(d)
    return Dataset(x=x, weights=weights, y=y, pattern=pattern, x_star=x_star,
                   y_full=y_full, truth=truth, digest=digest)


# -- fit artifacts ------------------------------------------------------------


def _trace_csv(path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_fit_result(res: FitResult, out_dir, version: str,
                     dataset_digest_value: str | None = None,
                     config_doc: dict | None = None,
                     unconstrained_names: list | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "method": res.method, "mechanism": res.mechanism, "seed": res.seed,
        "iterations": res.iterations, "p": res.p,
        "elbo_label": res.elbo_label,
        "theta": {name: {"mean": float(m), "sd": float(s)}
                  for name, m, s in zip(res.theta_names, res.theta_mean, res.theta_sd)},
        "theta_order": list(res.theta_names),
        "tuning": res.tuning, "flags": res.flags,
        "elapsed_seconds": res.elapsed_seconds,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    _trace_csv(out / "elbo_trace.csv", ["iteration", "value"],
               ((t, _fmt(v) if np.isfinite(v) else NA_TOKEN)
                for t, v in enumerate(res.elbo_trace)))
    names = unconstrained_names or res.theta_names
    _trace_csv(out / "mean_trajectory.csv", ["iteration"] + list(names),
               ((t, *(_fmt(v) for v in row))
                for t, row in enumerate(res.mean_trajectory)))
    _trace_csv(out / "missing_posterior.csv", ["index", "mean", "sd"],
               ((int(i), _fmt(m), _fmt(s) if np.isfinite(s) else NA_TOKEN)
                for i, m, s in zip(res.yu_index, res.yu_mean, res.yu_sd)))
    if res.chain is not None:
        chain_names = list(names) + [f"yu{int(i)}" for i in res.yu_index]
        _trace_csv(out / "chain.csv", chain_names,
                   ((_fmt(v) for v in row) for row in res.chain))
    manifest = {"kind": "fit", "method": res.method, "seed": res.seed,
                "version": version, "dataset_digest": dataset_digest_value}
    if config_doc is not None:
        manifest["config_sha256"] = hashlib.sha256(
            json.dumps(config_doc, sort_keys=True).encode()).hexdigest()
        (out / "run_config.json").write_text(json.dumps(config_doc, indent=2))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))


def read_fit_summary(run_dir) -> dict:
    return json.loads((Path(run_dir) / "summary.json").read_text())


def read_missing_posterior(run_dir) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(Path(run_dir) / "missing_posterior.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        idx, mean, sd = [], [], []
        for row in reader:
            if not row:
                continue
            idx.append(int(row[0]))
            mean.append(float(row[1]))
            sd.append(np.nan if row[2] == NA_TOKEN else float(row[2]))
    return np.asarray(idx), np.asarray(mean), np.asarray(sd)
