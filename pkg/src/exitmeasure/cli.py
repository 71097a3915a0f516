"""Batch front end: parse a run configuration, execute the full pipeline
(walks -> exit matrices -> spectrum -> reconstructions) and write
deterministic CSV/JSON artifacts.

Exit codes: 0 success, 2 configuration/validation error, 3 runtime abort
(walk budget).  All CSV content is reproducible bit for bit for a fixed
seed regardless of the worker thread count; wall-clock timing goes only
into summary.json.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import backend
from .conductivity import ConductivityTensor, identity_tensor, make_tensor
from .errors import ConfigurationError, ValidationError, WalkBudgetError
from .estimator import (EstimatorBundle, MeasurementSet, make_measurements,
                        mc_rem, uniform_nu)
from .geometry import (GAMMA0, Domain, catalog, component_distances,
                       dist_to_boundary, side_points)
from .problems import (EXAMPLES, SOLUTIONS, GammaD, reconstruction_error,
                       synthesize_measurements)
from .tsvd import perturb_measurements, spectrum, tsvd_family
from .walk import WalkConfig
from .weights import WeightFamily, make_family

_F = ".17g"  # CSV float format


def _fmt(x) -> str:
    return format(float(x), _F)


@dataclass
class RunConfig:
    example: str | None = None
    solution: str | None = None
    measurements: str | None = None
    domain: str | None = None
    domain_params: dict = field(default_factory=dict)
    k: list | None = None  # row-major tensor entries
    m0: int | None = None
    m1: int | None = None
    md: int | None = None
    gamma_d_kind: str | None = None
    gamma_d_center: list | None = None
    gamma_d_radius: float | None = None
    n: int | None = None
    eps: float | None = None
    seed: int = 0
    replicates: int = 1
    r: str | None = None
    weights: str = "voronoi"
    idw_power: int = 2
    idw_radius_factor: float = 2.0
    noise: float = 0.0
    max_steps: int = 1_000_000
    out: str = "runs/latest"
    threads: int | None = None


def parse_r_list(text: str) -> list[int]:
    """Truncation levels: "6", "1,3,6" or "1:15"."""
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":")
        levels = list(range(int(lo), int(hi) + 1))
    else:
        levels = [int(t) for t in text.split(",") if t.strip()]
    if not levels or min(levels) < 1:
        raise ValidationError(f"invalid truncation list {text!r}")
    return levels


_FILE_KEYS = {f.name for f in RunConfig.__dataclass_fields__.values()} | {"out_dir"}


def read_config_file(path) -> dict:
    """Flat key = value lines; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key == "out_dir":
            key = "out"
        if key not in _FILE_KEYS and key not in ("domain_params",):
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val.strip()
    return values


def _coerce(cfg: RunConfig) -> RunConfig:
    def floats(v):
        return [float(t) for t in str(v).replace(",", " ").split()]

    for name in ("m0", "m1", "md", "n", "seed", "replicates", "idw_power",
                 "max_steps"):
        v = getattr(cfg, name)
        if v is not None and not isinstance(v, int):
            setattr(cfg, name, int(str(v)))
    for name in ("eps", "noise", "idw_radius_factor", "gamma_d_radius"):
        v = getattr(cfg, name)
        if v is not None and not isinstance(v, float):
            setattr(cfg, name, float(str(v)))
    if cfg.threads is not None and not isinstance(cfg.threads, int):
        cfg.threads = int(str(cfg.threads))
    if cfg.k is not None and not isinstance(cfg.k, list):
        cfg.k = floats(cfg.k)
    if cfg.gamma_d_center is not None and not isinstance(cfg.gamma_d_center, list):
        cfg.gamma_d_center = floats(cfg.gamma_d_center)
    if isinstance(cfg.domain_params, str):
        cfg.domain_params = json.loads(cfg.domain_params)
    return cfg


# ---------------------------------------------------------------------------
# measurement ingestion


def ingest_measurements(path, dom: Domain, eps: float,
                        boundary_tol: float = 1e-9) -> MeasurementSet:
    """Measurement CSV: header kind,x1,..,xd,value[,nu] with kind in
    {interior, gamma0}.  nu defaults to the uniform scaling; an explicit nu
    column is renormalised (with a warning when off by more than 1e-6)."""
    d = dom.dimension
    rows = Path(path).read_text().splitlines()
    if not rows:
        raise ValidationError(f"{path}: empty measurement file")
    header = [h.strip().lower() for h in rows[0].split(",")]
    expected = ["kind"] + [f"x{i + 1}" for i in range(d)] + ["value"]
    if header[: len(expected)] != expected:
        raise ValidationError(
            f"{path}: header must start with {','.join(expected)}")
    has_nu = len(header) > len(expected) and header[len(expected)] == "nu"
    interior, gamma0 = [], []
    nus = []
    for lineno, raw in enumerate(rows[1:], 2):
        if not raw.strip():
            continue
        parts = [p.strip() for p in raw.split(",")]
        kind = parts[0].lower()
        pt = [float(p) for p in parts[1:1 + d]]
        val = float(parts[1 + d])
        if kind == "interior":
            if dist_to_boundary(dom, pt) <= eps:
                raise ValidationError(
                    f"{path}:{lineno}: interior point {pt} is outside the domain "
                    f"or inside the stopping shell")
            interior.append((pt, val))
            if has_nu and len(parts) > 1 + d + 1 and parts[1 + d + 1]:
                nus.append(float(parts[1 + d + 1]))
        elif kind == "gamma0":
            cd = component_distances(dom, pt)
            comp = int(np.argmin(cd))
            if cd[comp] > boundary_tol or dom.side_of(comp) != GAMMA0:
                raise ValidationError(
                    f"{path}:{lineno}: gamma0 point {pt} does not lie on an "
                    f"accessible boundary component")
            gamma0.append((pt, val))
        else:
            raise ValidationError(f"{path}:{lineno}: unknown kind {kind!r}")
    if not interior:
        raise ValidationError(f"{path}: no interior measurements")
    xd = np.array([p for p, _ in interior])
    ud = np.array([v for _, v in interior])
    if nus:
        if len(nus) != len(interior):
            raise ValidationError(f"{path}: nu column must cover every interior row")
        nu = np.asarray(nus, dtype=float)
        ss = float(np.sum(nu**2))
        if abs(ss - 1.0) > 1e-6:
            warnings.warn(f"nu column norm {ss:.6g} != 1; renormalising", stacklevel=2)
        nu = nu / np.sqrt(ss)
    else:
        nu = uniform_nu(len(interior))
    x0 = np.array([p for p, _ in gamma0]) if gamma0 else None
    u0 = np.array([v for _, v in gamma0]) if gamma0 else None
    return make_measurements(dom, xd, ud, x0, u0, nu=nu, eps=eps)


# ---------------------------------------------------------------------------
# run resolution


@dataclass(eq=False)
class ResolvedRun:
    dom: Domain
    kt: ConductivityTensor
    fam1: WeightFamily
    fam0: WeightFamily | None
    meas: MeasurementSet
    truth: np.ndarray | None
    n: int
    eps: float
    seed: int
    replicates: int
    r_list: list[int] | None  # None: 1..min(15, rank)
    noise: float
    max_steps: int
    threads: int | None
    out: Path
    config_echo: dict


def resolve(cfg: RunConfig) -> ResolvedRun:
    cfg = _coerce(replace(cfg))
    sol = None
    if cfg.solution is not None:
        if cfg.solution not in SOLUTIONS:
            raise ConfigurationError(f"unknown solution {cfg.solution!r} "
                                     f"(have {sorted(SOLUTIONS)})")
        sol = SOLUTIONS[cfg.solution]

    if cfg.example is not None:
        if cfg.example not in EXAMPLES:
            raise ConfigurationError(f"unknown example {cfg.example!r} "
                                     f"(have {sorted(EXAMPLES)})")
        ex = EXAMPLES[cfg.example]
        if cfg.m0 is not None or cfg.m1 is not None or cfg.md is not None:
            counts = {"m0": cfg.m0 or ex.m0, "md": cfg.md or ex.md}
            m1c = (cfg.m1,) if cfg.m1 else ex.m1_counts
            if cfg.m1 and len(ex.m1_counts) > 1:
                if cfg.m1 % len(ex.m1_counts):
                    raise ConfigurationError("m1 must split evenly over the "
                                             "inaccessible components")
                m1c = (cfg.m1 // len(ex.m1_counts),) * len(ex.m1_counts)
            ex = replace(ex, m0=counts["m0"], md=counts["md"], m1_counts=m1c)
        dom = ex.domain()
        n = cfg.n if cfg.n is not None else ex.n_desk
        eps = cfg.eps if cfg.eps is not None else ex.eps
        gamma1_anchors = ex.gamma1_anchors(dom)
        gamma0_anchors = ex.gamma0_points(dom)
    else:
        if cfg.domain is None:
            raise ConfigurationError("either an example id or a domain key is required")
        dom = catalog(cfg.domain, **cfg.domain_params)
        if cfg.m1 is None:
            raise ConfigurationError("custom runs need m1 (gamma1 anchor count)")
        if cfg.eps is None or cfg.n is None:
            raise ConfigurationError("custom runs need n and eps")
        n, eps = cfg.n, cfg.eps
        gamma1_anchors = side_points(dom, "gamma1", cfg.m1)
        gamma0_anchors = None
        if dom.gamma0:
            if cfg.measurements is None and cfg.m0 is None:
                raise ConfigurationError("custom runs with an accessible side need m0")
            if cfg.m0:
                gamma0_anchors = side_points(dom, "gamma0", [cfg.m0])

    if cfg.k is not None:
        d = dom.dimension
        if len(cfg.k) != d * d:
            raise ConfigurationError(f"k needs {d * d} row-major entries")
        kt = make_tensor(np.asarray(cfg.k, dtype=float).reshape(d, d))
    elif sol is not None:
        kt = sol.tensor()
    else:
        kt = identity_tensor(dom.dimension)

    fam1 = make_family(cfg.weights, gamma1_anchors, dom, cfg.idw_power,
                       cfg.idw_radius_factor)

    truth = None
    if cfg.measurements is not None:
        meas = ingest_measurements(cfg.measurements, dom, eps)
        fam0 = None
        if meas.n_boundary:
            from .geometry import BoundaryPointSet

            anchors0 = BoundaryPointSet(meas.boundary_points,
                                        np.full(meas.n_boundary, -1),
                                        np.zeros(meas.n_boundary), ())
            fam0 = make_family(cfg.weights, anchors0, dom, cfg.idw_power,
                               cfg.idw_radius_factor, with_sigma=False)
    elif sol is not None:
        if cfg.example is not None:
            meas = synthesize_measurements(ex, sol, dom, kt)
            truth = sol(gamma1_anchors.points)
        else:
            if cfg.md is None or cfg.gamma_d_kind is None:
                raise ConfigurationError("custom synthetic runs need md and a "
                                         "gamma_d locus")
            gd = GammaD(cfg.gamma_d_kind, tuple(cfg.gamma_d_center or
                                               (0.0,) * dom.dimension),
                        cfg.gamma_d_radius or 0.5)
            xd = gd.points(cfg.md).points
            x0 = gamma0_anchors.points if gamma0_anchors is not None else None
            u0 = sol(x0) if x0 is not None else None
            meas = make_measurements(dom, xd, sol(xd), x0, u0, eps=eps)
            truth = sol(gamma1_anchors.points)
        fam0 = (make_family(cfg.weights, gamma0_anchors, dom, cfg.idw_power,
                            cfg.idw_radius_factor, with_sigma=False)
                if gamma0_anchors is not None else None)
    else:
        raise ConfigurationError("either a solution id or a measurement file "
                                 "is required")

    r_list = parse_r_list(cfg.r) if cfg.r else None
    out = Path(cfg.out)
    echo = {k: v for k, v in vars(cfg).items() if v not in (None, {})}
    echo["resolved_n"] = n
    echo["resolved_eps"] = eps
    return ResolvedRun(dom, kt, fam1, fam0, meas, truth, n, eps, cfg.seed,
                       cfg.replicates, r_list, cfg.noise, cfg.max_steps,
                       cfg.threads, out, echo)


# ---------------------------------------------------------------------------
# pipeline execution


@dataclass(eq=False)
class ReplicateResult:
    seed: int
    bundle: EstimatorBundle
    eigenvalues: np.ndarray
    traces: np.ndarray
    r_values: np.ndarray
    solutions: np.ndarray
    residuals: np.ndarray
    errors: list | None  # (l2, linf) per r when truth is known


@dataclass(eq=False)
class RunReport:
    out_dir: Path
    replicates: list[ReplicateResult]
    elapsed_seconds: float


def _run_replicate(run: ResolvedRun, seed: int) -> ReplicateResult:
    meas = perturb_measurements(run.meas, run.noise, seed)
    cfg = WalkConfig(eps=run.eps, max_steps=run.max_steps, seed=seed)
    bundle = mc_rem(run.dom, run.kt, meas, run.fam1, run.fam0, cfg, run.n,
                    threads=run.threads)
    sol = spectrum(bundle)
    if run.r_list is None:
        fam = tsvd_family(bundle, meas, run.fam1,
                          list(range(1, min(15, _rank_of(bundle)) + 1)))
    else:
        fam = tsvd_family(bundle, meas, run.fam1, run.r_list)
    errors = None
    if run.truth is not None:
        errors = reconstruction_error(run.truth, fam.solutions, bundle.sigma1)
    return ReplicateResult(seed, bundle, sol.eigenvalues,
                           sol.eigenfunction_traces, fam.r_values,
                           fam.solutions, fam.residuals, errors)


def _rank_of(bundle: EstimatorBundle) -> int:
    from .linalg import numerical_rank, svd

    m = (bundle.nu[:, None] * bundle.a1) / np.sqrt(bundle.sigma1)[None, :]
    _, s, _ = svd(m)
    return max(numerical_rank(s, m.shape), 1)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def run(cfg: RunConfig) -> RunReport:
    t0 = time.perf_counter()
    r = resolve(cfg)
    reps = [_run_replicate(r, r.seed + s) for s in range(r.replicates)]
    r.out.mkdir(parents=True, exist_ok=True)
    labels = [str(s) for s in range(len(reps))]
    anchors = r.fam1.anchors

    # eigenvalues.csv: replicate, index, lambda, gap (last gap: drop to zero)
    rows = []
    for lab, rep in zip(labels, reps):
        lam = rep.eigenvalues
        for i, v in enumerate(lam):
            gap = lam[i] - lam[i + 1] if i + 1 < lam.size else lam[i]
            rows.append([lab, str(i), _fmt(v), _fmt(gap)])
    if len(reps) > 1:
        lam = np.mean([rep.eigenvalues for rep in reps], axis=0)
        for i, v in enumerate(lam):
            gap = lam[i] - lam[i + 1] if i + 1 < lam.size else lam[i]
            rows.append(["mean", str(i), _fmt(v), _fmt(gap)])
    _write_csv(r.out / "eigenvalues.csv", ["replicate", "index", "lambda", "gap"], rows)

    # density.csv: per-pole and averaged densities
    rows = []
    md = reps[0].bundle.n_poles
    for lab, rep in zip(labels, reps):
        dens = rep.bundle.a1 / rep.bundle.sigma1[None, :]
        for i in range(md):
            for j in range(dens.shape[1]):
                rows.append([lab, str(i), str(j), _fmt(anchors.params[j]),
                             _fmt(dens[i, j])])
        avg = dens.mean(axis=0)
        for j in range(avg.size):
            rows.append([lab, "avg", str(j), _fmt(anchors.params[j]), _fmt(avg[j])])
    if len(reps) > 1:
        dens = np.mean([rep.bundle.a1 / rep.bundle.sigma1[None, :] for rep in reps], axis=0)
        for i in range(md):
            for j in range(dens.shape[1]):
                rows.append(["mean", str(i), str(j), _fmt(anchors.params[j]),
                             _fmt(dens[i, j])])
        avg = dens.mean(axis=0)
        for j in range(avg.size):
            rows.append(["mean", "avg", str(j), _fmt(anchors.params[j]), _fmt(avg[j])])
    _write_csv(r.out / "density.csv",
               ["replicate", "pole", "anchor", "param", "rho"], rows)

    # eigvecs.csv: eigenfunction traces at the gamma1 anchors
    rows = []
    for lab, rep in zip(labels, reps):
        for j in range(rep.traces.shape[0]):
            for a in range(rep.traces.shape[1]):
                rows.append([lab, str(j), str(a), _fmt(rep.traces[j, a])])
    if len(reps) > 1:
        k = min(rep.traces.shape[0] for rep in reps)
        if k:
            base = reps[0].traces[:k]
            acc = np.zeros_like(base)
            for rep in reps:
                t = rep.traces[:k]
                sign = np.where(np.sum(t * base, axis=1) < 0.0, -1.0, 1.0)
                acc += sign[:, None] * t
            acc /= len(reps)
            for j in range(k):
                for a in range(acc.shape[1]):
                    rows.append(["mean", str(j), str(a), _fmt(acc[j, a])])
    _write_csv(r.out / "eigvecs.csv", ["replicate", "j", "anchor", "value"], rows)

    # tsvd.csv: reconstructions per truncation level (+ truth when known)
    rows = []
    truth_col = ([_fmt(v) for v in r.truth] if r.truth is not None
                 else [""] * len(anchors))
    for lab, rep in zip(labels, reps):
        for ri, rv in enumerate(rep.r_values):
            for a in range(rep.solutions.shape[1]):
                rows.append([lab, str(rv), str(a), _fmt(rep.solutions[ri, a]),
                             truth_col[a]])
    if len(reps) > 1 and all(np.array_equal(rep.r_values, reps[0].r_values)
                             for rep in reps):
        sols = np.mean([rep.solutions for rep in reps], axis=0)
        for ri, rv in enumerate(reps[0].r_values):
            for a in range(sols.shape[1]):
                rows.append(["mean", str(rv), str(a), _fmt(sols[ri, a]), truth_col[a]])
    _write_csv(r.out / "tsvd.csv", ["replicate", "r", "anchor", "u_r", "truth"], rows)

    # residuals.csv: interior misfit per truncation level
    rows = []
    for lab, rep in zip(labels, reps):
        for ri, rv in enumerate(rep.r_values):
            for i in range(rep.residuals.shape[1]):
                rows.append([lab, str(rv), str(i), _fmt(rep.residuals[ri, i])])
    if len(reps) > 1 and all(np.array_equal(rep.r_values, reps[0].r_values)
                             for rep in reps):
        res = np.mean([rep.residuals for rep in reps], axis=0)
        for ri, rv in enumerate(reps[0].r_values):
            for i in range(res.shape[1]):
                rows.append(["mean", str(rv), str(i), _fmt(res[ri, i])])
    _write_csv(r.out / "residuals.csv", ["replicate", "r", "pole", "abs_error"], rows)

    elapsed = time.perf_counter() - t0
    summary = {
        "backend": backend.BACKEND,
        "config": {k: (v if not isinstance(v, (np.ndarray,)) else list(v))
                   for k, v in r.config_echo.items()},
        "elapsed_seconds": elapsed,
        "replicates": [],
    }
    for lab, rep in zip(labels, reps):
        b = rep.bundle
        mu = b.mu_gamma1()
        entry = {
            "replicate": lab,
            "seed": rep.seed,
            "mu_gamma1_per_pole": [float(v) for v in mu],
            "mu_gamma1_avg": float(mu.mean()),
            "steps_mean": float(b.steps_mean.mean()),
            "steps_max": int(b.steps_max.max()),
            "idw_fallbacks": b.idw_fallbacks,
            "residual_max_per_r": {int(rv): float(rep.residuals[ri].max())
                                   for ri, rv in enumerate(rep.r_values)},
        }
        if rep.errors is not None:
            entry["errors_per_r"] = {int(rv): {"l2_rel": e[0], "linf": e[1]}
                                     for rv, e in zip(rep.r_values, rep.errors)}
        summary["replicates"].append(entry)
    summary["mu_gamma1_avg_mean"] = float(np.mean(
        [e["mu_gamma1_avg"] for e in summary["replicates"]]))
    with open(r.out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=1)
    return RunReport(r.out, reps, elapsed)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="exitmeasure",
        description="Reconstruct inaccessible Dirichlet data from interior "
                    "measurements by walk-on-ellipsoids exit statistics and "
                    "truncated-SVD inversion.")
    p.add_argument("--example", help="built-in example id (ex5_1 .. ex5_7)")
    p.add_argument("--solution", help="exact solution id (sol2d_1 .. sol3d_3)")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--measurements", help="measurement CSV (kind,x1,..,xd,value[,nu])")
    p.add_argument("--n", type=int, help="walks per pole")
    p.add_argument("--eps", type=float, help="stopping shell thickness")
    p.add_argument("--seed", type=int, help="base seed (replicate s uses seed+s)")
    p.add_argument("--replicates", type=int, help="independent replicate count")
    p.add_argument("--r", help="truncation levels: '6', '1,3,6' or '1:15'")
    p.add_argument("--weights", choices=["voronoi", "idw"], help="weight family kind")
    p.add_argument("--noise", type=float, help="uniform noise amplitude on u_D")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    return p


def config_from_args(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = RunConfig()
    if args.config:
        for key, val in read_config_file(args.config).items():
            setattr(cfg, key, val)
    for key in ("example", "solution", "measurements", "n", "eps", "seed",
                "replicates", "r", "weights", "noise", "out", "threads"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def main(argv=None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        report = run(cfg)
    except (ValidationError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WalkBudgetError as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {report.out_dir} ({report.elapsed_seconds:.2f}s, "
          f"{len(report.replicates)} replicate(s))")
    return 0


if __name__ == "__main__":
    sys.exit(main())
