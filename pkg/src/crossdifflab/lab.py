"""Experiment orchestration: strict JSON configs, runs, sweeps, artifacts.

Configs are strict: unknown keys are fatal (with a spelling suggestion),
all randomness flows from the config seed through a counter-based
generator, and every artifact is written atomically so repeated runs with
the same config are byte-identical.
"""

from __future__ import annotations

import difflib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import dual as dual_mod
from . import kolmo as kolmo_mod
from . import skt as skt_mod
from . import weights as weights_mod
from .mollify import kernel_sequence, make_kernel
from .torus import (Field, Grid, Trajectory, dump_trajectory, load_slices,
                    make_grid, norm, spacetime_norm)


class ConfigError(ValueError):
    pass


def _check_keys(d: dict, allowed, required, path: str) -> None:
    for key in d:
        if key not in allowed:
            hint = difflib.get_close_matches(key, allowed, n=1)
            msg = f"unknown key {path}.{key}"
            if hint:
                msg += f" (did you mean {hint[0]!r}?)"
            raise ConfigError(msg)
    for key in required:
        if key not in d:
            raise ConfigError(f"missing key {path}.{key}")


# ---------------------------------------------------------------------------
# named analytic field families

def philox_rng(seed: int, *counters: int) -> np.random.Generator:
    """Counter-based generator: reproducible per point, order-independent."""
    mix = 0
    for c in counters:
        mix = (mix * 0x9E3779B97F4A7C15 + int(c) + 1) & 0xFFFFFFFFFFFFFFFF
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, mix], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def build_field(grid: Grid, spec: dict, path: str, seed: int = 0) -> Field:
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError(f"{path} must be an object with a 'family' key")
    fam = spec["family"]
    if fam == "constant":
        _check_keys(spec, {"family", "value"}, {"value"}, path)
        return Field.constant(grid, float(spec["value"]))
    if fam == "fourier_mode":
        _check_keys(spec, {"family", "k", "amp", "offset"}, {"k"}, path)
        k = int(spec["k"])
        amp = float(spec.get("amp", 1.0))
        off = float(spec.get("offset", 0.0))
        return Field.from_function(
            grid, lambda *xs: off + amp * np.cos(2 * np.pi * k * xs[0]))
    if fam == "piecewise":
        _check_keys(spec, {"family", "levels"}, {"levels"}, path)
        levels = np.asarray(spec["levels"], dtype=np.float64)
        if levels.ndim != 1 or levels.size < 1:
            raise ConfigError(f"{path}.levels must be a non-empty list")
        edges = np.floor(np.arange(grid.n) * levels.size / grid.n).astype(int)
        line = levels[edges]
        if grid.dim == 1:
            vals = line
        else:
            vals = np.broadcast_to(line[:, None], grid.shape)
        return Field(grid, np.ascontiguousarray(vals).reshape(-1))
    if fam == "random":
        _check_keys(spec, {"family", "seed", "lo", "hi"}, {"lo", "hi"}, path)
        lo, hi = float(spec["lo"]), float(spec["hi"])
        if not lo < hi:
            raise ConfigError(f"{path}: need lo < hi")
        rng = philox_rng(seed, int(spec.get("seed", 0)))
        return Field(grid, rng.uniform(lo, hi, size=grid.size))
    if fam == "dump":
        _check_keys(spec, {"family", "path"}, {"path"}, path)
        dim, n, data = load_slices(spec["path"])
        if (dim, n) != (grid.dim, grid.n):
            raise ConfigError(
                f"{path}: dump is dim={dim}, n={n}; grid wants "
                f"dim={grid.dim}, n={grid.n}")
        return Field(grid, data[0])
    raise ConfigError(f"{path}.family: unknown family {fam!r}")


# ---------------------------------------------------------------------------
# config parsing

KINDS = ("kolmogorov", "dual", "verify_duality", "stability", "skt",
         "converge", "weights")

_TOP_KEYS = {"kind", "grid", "seed", "output", "mu", "z0", "source",
             "reaction", "s", "g", "eps", "count", "threshold", "species",
             "weight", "trials", "sweep_axis"}


@dataclass
class RunConfig:
    kind: str
    raw: dict
    seed: int


def _probe_grid(gd: dict, path: str) -> Grid:
    """Throwaway 1-step grid used to evaluate fields before the CFL step
    count is known."""
    try:
        return make_grid(int(gd["dim"]), int(gd["n"]),
                         float(gd["t_final"]), 1)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build_grid(gd: dict, path: str, mu_sup_hint: float | None = None) -> Grid:
    _check_keys(gd, {"dim", "n", "t_final", "steps"},
                {"dim", "n", "t_final"}, path)
    if "steps" in gd:
        steps = int(gd["steps"])
    else:
        if mu_sup_hint is None:
            raise ConfigError(f"{path}.steps required (no CFL hint)")
        steps = kolmo_mod.steps_for(int(gd["dim"]), int(gd["n"]),
                                    float(gd["t_final"]), mu_sup_hint)
    try:
        return make_grid(int(gd["dim"]), int(gd["n"]),
                         float(gd["t_final"]), steps)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw, _TOP_KEYS, {"kind"}, "config")
    kind = raw["kind"]
    if kind not in KINDS:
        hint = difflib.get_close_matches(kind, KINDS, n=1)
        msg = f"config.kind: unknown kind {kind!r}"
        if hint:
            msg += f" (did you mean {hint[0]!r}?)"
        raise ConfigError(msg)
    if "grid" not in raw:
        raise ConfigError("missing key config.grid")
    seed = int(raw.get("seed", 0))
    cfg = RunConfig(kind=kind, raw=raw, seed=seed)
    _validate_kernel_eps(cfg)
    return cfg


def _validate_kernel_eps(cfg: RunConfig) -> None:
    gd = cfg.raw.get("grid", {})
    n = gd.get("n")
    if n is None:
        return
    h = 1.0 / int(n)
    for eps in cfg.raw.get("eps", []) or []:
        if float(eps) < 2 * h:
            raise ConfigError(
                f"config.eps: kernel width {eps} is under-resolved "
                f"(needs eps >= 2h = {2 * h})")
        if float(eps) > 0.5:
            raise ConfigError(f"config.eps: kernel width {eps} exceeds 0.5")
    for i, sp in enumerate(cfg.raw.get("species", []) or []):
        eps = sp.get("kernel_eps") if isinstance(sp, dict) else None
        if eps is not None and float(eps) < 2 * h:
            raise ConfigError(
                f"config.species[{i}].kernel_eps: width {eps} is "
                f"under-resolved (needs eps >= 2h = {2 * h})")


# ---------------------------------------------------------------------------
# manifests and artifact writing

@dataclass
class RunManifest:
    config: dict
    version: str
    grid: dict
    tau: float
    wall_time: float
    checks: dict          # name -> bool
    constants: dict       # name -> float
    artifacts: list

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "version": self.version,
            "grid": self.grid,
            "tau": self.tau,
            "wall_time": self.wall_time,
            "checks": self.checks,
            "constants": self.constants,
            "artifacts": self.artifacts,
            "passed": self.passed,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_csv(path: str, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# run dispatch

def _field_trajectory(grid: Grid, spec: dict, path: str,
                      seed: int) -> Trajectory:
    return Trajectory.constant_in_time(
        grid, build_field(grid, spec, path, seed))


def _run_kolmogorov(cfg: RunConfig, outdir: str | None):
    raw = cfg.raw
    for key in ("mu", "z0"):
        if key not in raw:
            raise ConfigError(f"missing key config.{key}")
    if ("source" in raw) == ("reaction" in raw):
        raise ConfigError("exactly one of config.source/config.reaction "
                          "must be present")
    # build on a throwaway 1-step grid first to learn sup mu for auto-CFL
    probe = _probe_grid(raw["grid"], "config.grid")
    mu_probe = build_field(probe, raw["mu"], "config.mu", cfg.seed)
    grid = _build_grid(raw["grid"], "config.grid",
                       mu_sup_hint=float(mu_probe.values.max()))
    mu = _field_trajectory(grid, raw["mu"], "config.mu", cfg.seed)
    z0 = build_field(grid, raw["z0"], "config.z0", cfg.seed)
    kwargs = {}
    if "source" in raw:
        kwargs["source"] = _field_trajectory(grid, raw["source"],
                                             "config.source", cfg.seed)
    else:
        kwargs["reaction"] = _field_trajectory(grid, raw["reaction"],
                                               "config.reaction", cfg.seed)
    p = kolmo_mod.KolmogorovProblem(grid=grid, mu=mu, z0=z0, **kwargs)
    rep = kolmo_mod.solve_forward(p)
    checks = {"finite": bool(np.all(np.isfinite(rep.trajectory.data)))}
    if p.mode == "source":
        checks["mass_ledger"] = rep.mass_drift <= 1e-9 * max(
            1.0, norm(z0, "L1"))
    if z0.values.min() >= 0 and (p.mode == "reaction"
                                 or p.source.data.min() >= 0):
        checks["non_negative"] = rep.min_value >= 0.0
    constants = {"min_value": rep.min_value, "cfl_used": rep.cfl_used,
                 "final_l2": norm(rep.trajectory.slice(grid.steps), "L2")}
    if p.mode == "source":
        constants["mass_drift"] = rep.mass_drift
    artifacts = []
    if outdir:
        dump = os.path.join(outdir, "trajectory.cdl")
        dump_trajectory(dump, rep.trajectory)
        artifacts.append(dump)
    return grid, checks, constants, artifacts


def _run_dual(cfg: RunConfig, outdir: str | None):
    raw = cfg.raw
    for key in ("mu", "s"):
        if key not in raw:
            raise ConfigError(f"missing key config.{key}")
    probe = _probe_grid(raw["grid"], "config.grid")
    mu_probe = build_field(probe, raw["mu"], "config.mu", cfg.seed)
    grid = _build_grid(raw["grid"], "config.grid",
                       mu_sup_hint=float(mu_probe.values.max()))
    mu = _field_trajectory(grid, raw["mu"], "config.mu", cfg.seed)
    s = _field_trajectory(grid, raw["s"], "config.s", cfg.seed)
    p = dual_mod.DualProblem(grid=grid, mu=mu, s=s)
    phi = dual_mod.solve_dual(p)
    reps = dual_mod.verify_apriori(p, phi)
    checks = {"apriori_energy": reps[0].passed}
    if s.data.min() >= 0:
        checks["sign_non_positive"] = bool(phi.data.max() <= 1e-13)
    constants = {"apriori_ratio": reps[0].ratio,
                 "supnorm_constant": reps[1].ratio,
                 "phi0_l2": norm(phi.slice(0), "L2")}
    artifacts = []
    if outdir:
        dump = os.path.join(outdir, "phi.cdl")
        dump_trajectory(dump, phi)
        artifacts.append(dump)
    return grid, checks, constants, artifacts


def random_duality_problem(grid: Grid, seed: int, index: int):
    """One randomized (mu, z0, G, S) tuple for duality studies."""
    rng = philox_rng(seed, index)
    mu_vals = rng.uniform(0.3, 3.0, size=grid.size)
    mu = Trajectory.constant_in_time(grid, Field(grid, mu_vals))
    z0 = Field(grid, rng.standard_normal(grid.size))
    g = Trajectory.constant_in_time(
        grid, Field(grid, rng.standard_normal(grid.size)))
    s = Trajectory.constant_in_time(
        grid, Field(grid, rng.standard_normal(grid.size)))
    return mu, z0, g, s


def _run_verify_duality(cfg: RunConfig, outdir: str | None):
    raw = cfg.raw
    count = int(raw.get("count", 20))
    threshold = float(raw.get("threshold", 1e-11))
    grid = _build_grid(raw["grid"], "config.grid", mu_sup_hint=3.0)
    worst = 0.0
    for i in range(count):
        mu, z0, g, s = random_duality_problem(grid, cfg.seed, i)
        p = kolmo_mod.KolmogorovProblem(grid=grid, mu=mu, z0=z0, source=g)
        z = kolmo_mod.solve_forward(p).trajectory
        worst = max(worst, dual_mod.duality_residual(z, p, s))
    checks = {"duality_identity": bool(worst <= threshold)}
    constants = {"max_residual": float(worst), "threshold": threshold}
    return grid, checks, constants, []


def _run_stability(cfg: RunConfig, outdir: str | None):
    raw = cfg.raw
    for key in ("mu", "z0", "eps"):
        if key not in raw:
            raise ConfigError(f"missing key config.{key}")
    probe = _probe_grid(raw["grid"], "config.grid")
    mu_probe = build_field(probe, raw["mu"], "config.mu", cfg.seed)
    grid = _build_grid(raw["grid"], "config.grid",
                       mu_sup_hint=float(mu_probe.values.max()))
    mu = _field_trajectory(grid, raw["mu"], "config.mu", cfg.seed)
    z0 = build_field(grid, raw["z0"], "config.z0", cfg.seed)
    if "g" in raw:
        g = _field_trajectory(grid, raw["g"], "config.g", cfg.seed)
    else:
        g = Trajectory.constant(grid, 0.0)
    rows = dual_mod.stability_study(mu, [float(e) for e in raw["eps"]],
                                    z0, g)
    dists = [r.z_distance for r in rows]
    ok = all(b <= a * 1.10 for a, b in zip(dists, dists[1:]))
    checks = {"z_distance_non_increasing": ok}
    constants = {"final_z_distance": dists[-1]}
    artifacts = []
    if outdir:
        csv = os.path.join(outdir, "stability.csv")
        write_csv(csv, ["eps", "mu_distance", "z_distance"],
                  [(r.eps, r.mu_distance, r.z_distance) for r in rows])
        artifacts.append(csv)
    return grid, checks, constants, artifacts


def _build_skt_spec(cfg: RunConfig, grid: Grid, identity_kernels=False):
    raw = cfg.raw
    species = raw.get("species")
    if not species:
        raise ConfigError("missing key config.species")
    count = len(species)
    coeffs, reactions, kernels, init = [], [], [], []
    for i, sp in enumerate(species):
        path = f"config.species[{i}]"
        _check_keys(sp, {"coeff", "reaction", "kernel_eps", "init"},
                    {"coeff", "reaction", "init"}, path)
        cd = dict(sp["coeff"])
        _check_keys(cd, {"kind", "d", "c", "lo", "hi", "kink", "pivot"},
                    {"kind", "d"}, path + ".coeff")
        coeffs.append(skt_mod.CoeffFamily(
            kind=cd["kind"], d=float(cd["d"]),
            c=tuple(float(x) for x in cd.get("c", [])),
            lo=float(cd.get("lo", 0.0)), hi=float(cd.get("hi", np.inf)),
            kink=float(cd.get("kink", 0.0)),
            pivot=float(cd.get("pivot", 0.0))))
        rd = dict(sp["reaction"])
        _check_keys(rd, {"rho", "s"}, {"rho", "s"}, path + ".reaction")
        reactions.append(skt_mod.ReactionFamily(
            rho=float(rd["rho"]), s=tuple(float(x) for x in rd["s"])))
        eps = sp.get("kernel_eps")
        if identity_kernels or eps is None:
            kernels.append(None)
        else:
            kernels.append(make_kernel(grid, float(eps)))
        init.append(build_field(grid, sp["init"], path + ".init", cfg.seed))
    try:
        return skt_mod.SktSpec(grid=grid, coeffs=tuple(coeffs),
                               reactions=tuple(reactions),
                               kernels=tuple(kernels), init=tuple(init))
    except ValueError as exc:
        raise ConfigError(f"config.species: {exc}") from exc


def _skt_grid(cfg: RunConfig):
    raw = cfg.raw
    species = raw.get("species")
    if not species:
        raise ConfigError("missing key config.species")
    hi_max = 0.0
    for sp in species:
        cd = sp.get("coeff", {})
        hi = cd.get("hi", cd.get("d"))
        if hi is None:
            raise ConfigError("coefficient needs hi or d for the CFL bound")
        hi_max = max(hi_max, float(hi))
    return _build_grid(raw["grid"], "config.grid", mu_sup_hint=hi_max)


def _run_skt(cfg: RunConfig, outdir: str | None):
    grid = _skt_grid(cfg)
    spec = _build_skt_spec(cfg, grid)
    sols = skt_mod.solve_system(spec)
    min_val = min(float(t.data.min()) for t in sols)
    checks = {"non_negative": min_val >= 0.0}
    constants = {"min_value": min_val}
    for i, t in enumerate(sols):
        constants[f"l2q_u{i + 1}"] = spacetime_norm(t, "L2Q")
    artifacts = []
    if outdir:
        for i, t in enumerate(sols):
            dump = os.path.join(outdir, f"species_{i + 1}.cdl")
            dump_trajectory(dump, t)
            artifacts.append(dump)
    return grid, checks, constants, artifacts


def _run_converge(cfg: RunConfig, outdir: str | None):
    raw = cfg.raw
    eps_list = [float(e) for e in raw.get("eps", [])]
    if not eps_list:
        raise ConfigError("missing key config.eps")
    grid = _skt_grid(cfg)
    spec = _build_skt_spec(cfg, grid, identity_kernels=True)
    table = skt_mod.converge_study(spec, eps_list)
    count = spec.species_count
    dists = np.array([r.distances for r in table.rows])
    ok = bool(np.all(dists[1:] <= dists[:-1] * 1.10))
    checks = {"distances_non_increasing": ok}
    constants = {f"final_dist_u{i + 1}": float(dists[-1, i])
                 for i in range(count)}
    artifacts = []
    if outdir:
        csv = os.path.join(outdir, "converge.csv")
        header = ["eps", "defect"] + [f"dist_u{i + 1}" for i in range(count)]
        write_csv(csv, header,
                  [(r.eps, r.defect, *r.distances) for r in table.rows])
        artifacts.append(csv)
    return grid, checks, constants, artifacts


def _run_weights(cfg: RunConfig, outdir: str | None):
    raw = cfg.raw
    if "weight" not in raw:
        raise ConfigError("missing key config.weight")
    grid = _build_grid(dict(raw["grid"], t_final=raw["grid"].get(
        "t_final", 1.0), steps=raw["grid"].get("steps", 1)), "config.grid")
    w = weights_mod.Weight(build_field(grid, raw["weight"], "config.weight",
                                       cfg.seed))
    a2 = weights_mod.a2_constant(w)
    ratio = weights_mod.maximal_boundedness(
        w, trials=int(raw.get("trials", 20)), seed=cfg.seed)
    checks = {"a2_at_least_one": a2 >= 1.0, "ratio_finite": ratio.passed}
    constants = {"a2_constant": a2, "maximal_ratio": ratio.lhs}
    return grid, checks, constants, []


_RUNNERS = {
    "kolmogorov": _run_kolmogorov,
    "dual": _run_dual,
    "verify_duality": _run_verify_duality,
    "stability": _run_stability,
    "skt": _run_skt,
    "converge": _run_converge,
    "weights": _run_weights,
}


def run(cfg: RunConfig, outdir: str | None = None) -> RunManifest:
    start = time.perf_counter()
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    grid, checks, constants, artifacts = _RUNNERS[cfg.kind](cfg, outdir)
    manifest = RunManifest(
        config=cfg.raw,
        version=__version__,
        grid={"dim": grid.dim, "n": grid.n, "t_final": grid.t_final,
              "steps": grid.steps},
        tau=grid.tau,
        wall_time=time.perf_counter() - start,
        checks=checks,
        constants=constants,
        artifacts=artifacts,
    )
    if outdir:
        atomic_write_text(os.path.join(outdir, "manifest.json"),
                          manifest.to_json())
    return manifest


def _set_path(d: dict, dotted: str, value):
    parts = dotted.split(".")
    cur = d
    for p in parts[:-1]:
        if p not in cur or not isinstance(cur[p], dict):
            raise ConfigError(f"sweep axis {dotted!r} not found in config")
        cur = cur[p]
    if parts[-1] not in cur:
        raise ConfigError(f"sweep axis {dotted!r} not found in config")
    cur[parts[-1]] = value


def sweep(cfg: RunConfig, axis: str, values, outdir: str | None = None):
    """Independent runs along one numeric config axis; failures are
    recorded per point and the sweep continues."""
    from concurrent.futures import ThreadPoolExecutor

    max_workers = int(os.environ.get("CDL_THREADS", "0")) or None

    def one(iv):
        i, v = iv
        raw = json.loads(json.dumps(cfg.raw))
        _set_path(raw, axis, v)
        point = RunConfig(kind=cfg.kind, raw=raw, seed=cfg.seed)
        sub = os.path.join(outdir, f"point_{i:03d}") if outdir else None
        try:
            return run(point, sub)
        except Exception as exc:  # recorded, sweep continues
            return exc

    items = list(enumerate(values))
    if not items:
        return []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, items))
