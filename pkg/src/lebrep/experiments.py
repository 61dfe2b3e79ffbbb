"""Block-parallel experiment driver behind the CLI.

Paths are processed in fixed blocks of ``mc.block_size``.  Each block yields
per-path arrays; blocks are concatenated in path order and only then reduced,
so the worker count never touches a number.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig, config_from_dict
from .diagnostics import (Ladder, PerturbationSpec, agreement_paths, agreement_report, coarse_grid,
                          default_ladder, default_perturbations, deterministic_on_nodes, girsanov_paths,
                          ladder_report, make_ladder, minimality_paths, orthogonality_paths, truncated_sums,
                          veraar_paths, _gprime, _statistic)
from .grid_paths import PathBundle, TimeGrid, generate_paths, path_blocks
from .payoffs import MartingalePath, PayoffSpec, TerminalFunction, evaluate_payoff
from .reduce import mean_se, pairwise_sum, sample_var
from .representations import (RateProcess, canonical_rate, fractional_rate, integrate_rate,
                              lebesgue_form_rate, riemann_liouville, volterra_rate, write_rate_csv)
from .resolvent import resolvent_table, write_resolvent_csv

MINIMALITY_STEPS = (0.5, 1.0, 2.0)
LADDER_CHECKS = ("singular_functional", "l21", "lp1", "veraar", "gprime")


@dataclass
class Context:
    cfg: ExperimentConfig
    grid: TimeGrid
    ladder: Ladder
    spec: PayoffSpec
    paths: PathBundle | None = None
    M: MartingalePath | None = None
    beta: RateProcess | None = None


def ladder_for(cfg: ExperimentConfig, grid: TimeGrid) -> Ladder:
    K = cfg.options.get("ladder_K")
    return make_ladder(grid.T, int(K)) if K else default_ladder(grid)


def lp1_exponent(cfg: ExperimentConfig) -> float:
    if "p" in cfg.options:
        return float(cfg.options["p"])
    if cfg.representation.p is not None:
        return float(cfg.representation.p)
    return 1.5


def perturbations_for(cfg: ExperimentConfig, T: float) -> list[PerturbationSpec]:
    chi = cfg.options.get("chi", "tanh")
    return [PerturbationSpec(p.t, p.s, chi) for p in default_perturbations(T)]


def make_rate(cfg: ExperimentConfig, M: MartingalePath, paths: PathBundle) -> RateProcess:
    kind = cfg.representation.kind
    if kind == "canonical":
        return canonical_rate(M, paths)
    if kind == "lebesgue":
        return lebesgue_form_rate(M, paths.grid)
    if kind == "volterra":
        return volterra_rate(M, paths.grid)
    return fractional_rate(M, cfg.alpha, paths)


def _needs_subcell(cfg: ExperimentConfig) -> bool:
    return cfg.representation.kind == "fractional" or "rl_variance" in cfg.diagnostics


# --- per-path stages ---------------------------------------------------------

def _fine_coarse(v: np.ndarray, ctx: Context, kernel: str) -> dict:
    out = {"fine": truncated_sums(v, ctx.grid, ctx.ladder, kernel)}
    cg = coarse_grid(ctx.grid)
    if cg is not None:
        out["coarse"] = truncated_sums(v[:, ::2], cg, ctx.ladder, kernel)
    return out


def _p_singular(ctx: Context) -> dict:
    return _fine_coarse(ctx.M.integrand ** 2, ctx, "inverse")


def _p_norm(v: np.ndarray, ctx: Context) -> dict:
    out = _fine_coarse(v, ctx, "lebesgue")
    out["full"] = np.sum(v * ctx.grid.dt, axis=1)
    return out


def _p_l21(ctx: Context) -> dict:
    return _p_norm(ctx.beta.values ** 2, ctx)


def _p_lp1(ctx: Context) -> dict:
    return _p_norm(np.abs(ctx.beta.values) ** lp1_exponent(ctx.cfg), ctx)


def _p_veraar(ctx: Context) -> dict:
    root = np.sqrt(veraar_paths(ctx.M, ctx.grid))
    out = _fine_coarse(root, ctx, "lebesgue")
    out["full"] = np.sum(root * ctx.grid.dt, axis=1)
    return out


def _terminal_g(spec: PayoffSpec) -> str:
    if not isinstance(spec, TerminalFunction):
        raise ValueError("gprime check needs a terminal_function payoff")
    return spec.g


def _p_gprime(ctx: Context) -> dict:
    g = _terminal_g(ctx.spec)
    out = _fine_coarse(_gprime(g, ctx.paths.values[:, :-1]) ** 2, ctx, "inverse")
    out["comparison"] = _gprime(g, ctx.paths.values[:, -1]) ** 2
    return out


def _theta(ctx: Context) -> np.ndarray:
    return deterministic_on_nodes(ctx.cfg.options.get("theta", 1.0), ctx.grid, "theta")


def _p_girsanov(ctx: Context) -> dict:
    sigma = deterministic_on_nodes(ctx.spec, ctx.grid, "sigma")
    fp, fq, w = girsanov_paths(sigma, _theta(ctx), ctx.paths, ctx.ladder)
    return {"p": fp, "q": fq, "weights": w}


def _p_orthogonality(ctx: Context) -> dict:
    specs = perturbations_for(ctx.cfg, ctx.grid.T)
    return {"values": np.column_stack([orthogonality_paths(ctx.beta, s, ctx.paths) for s in specs])}


def _p_minimality(ctx: Context) -> dict:
    specs = perturbations_for(ctx.cfg, ctx.grid.T)
    cols = [minimality_paths(ctx.beta, s, ctx.paths, e) for s in specs for e in MINIMALITY_STEPS]
    return {"gaps": np.column_stack(cols)}


def _p_agreement(ctx: Context) -> dict:
    return {"values": agreement_paths(ctx.M, ctx.paths, int(ctx.cfg.options.get("cutoff_exponent", 6)))}


def _rl_setup(cfg: ExperimentConfig, grid: TimeGrid) -> tuple[list, np.ndarray]:
    alphas = cfg.options.get("alphas", [0.25, 5.0 / 12.0])
    fractions = cfg.options.get("rl_fractions", [0.25, 0.5, 0.75])
    idx = np.array([grid.nearest_index(f * grid.T) for f in fractions])
    return alphas, idx


def _p_rl(ctx: Context) -> dict:
    alphas, idx = _rl_setup(ctx.cfg, ctx.grid)
    return {"R": np.column_stack([riemann_liouville(ctx.M, a, ctx.paths, nodes=idx) for a in alphas])}


PATH_STAGES: dict[str, Callable[[Context], dict]] = {
    "singular_functional": _p_singular,
    "l21": _p_l21,
    "lp1": _p_lp1,
    "veraar": _p_veraar,
    "gprime": _p_gprime,
    "girsanov": _p_girsanov,
    "orthogonality": _p_orthogonality,
    "minimality": _p_minimality,
    "agreement": _p_agreement,
    "rl_variance": _p_rl,
}


def _evaluate_block(cfg: ExperimentConfig, grid: TimeGrid, paths: PathBundle) -> dict:
    spec = cfg.payoff_spec()
    xi, M = evaluate_payoff(spec, paths)
    beta = make_rate(cfg, M, paths)
    out = {"xi": xi, "err": integrate_rate(beta) - xi}
    keep = min(max(cfg.output.rate_paths - paths.first_path, 0), paths.n_paths)
    if keep:
        out["rates"] = beta.values[:keep].copy()
    ctx = Context(cfg, grid, ladder_for(cfg, grid), spec, paths, M, beta)
    for check in cfg.diagnostics:
        stage = PATH_STAGES.get(check)
        if stage is None:
            continue
        for key, val in stage(ctx).items():
            out[f"{check}.{key}"] = val
    return out


def _block_task(cfg_dicts: list, first: int, count: int) -> list:
    """All configs of one block share the Brownian paths (common random numbers)."""
    cfgs = [config_from_dict(d) for d in cfg_dicts]
    grids = [c.grid.build() for c in cfgs]
    finest = max(grids, key=lambda g: g.N)
    base = generate_paths(finest, count, cfgs[0].mc.seed, first)
    out = []
    for cfg, grid in zip(cfgs, grids):
        if grid.N == finest.N:
            paths = base
        elif _needs_subcell(cfg):
            # subcell normals of fine cells do not aggregate into coarse ones; draw afresh
            paths = generate_paths(grid, count, cfg.mc.seed, first)
        else:
            paths = base.coarsened(finest.N // grid.N)
        out.append(_evaluate_block(cfg, grid, paths))
    return out


def run_blocks(cfgs: list[ExperimentConfig]) -> list[dict]:
    """Per-path arrays for each config, concatenated over blocks in path order."""
    mc = cfgs[0].mc
    for c in cfgs[1:]:
        if (c.mc.n_paths, c.mc.seed, c.mc.block_size) != (mc.n_paths, mc.seed, mc.block_size):
            raise ValueError("configs evaluated together must share paths")
        if (c.grid.T, c.grid.q) != (cfgs[0].grid.T, cfgs[0].grid.q):
            raise ValueError("configs evaluated together must share T and q")
    dicts = [c.to_dict() for c in cfgs]
    blocks = list(path_blocks(mc.n_paths, mc.block_size))
    starts = [b[0] for b in blocks]
    counts = [b[1] for b in blocks]
    if mc.workers == 1 or len(blocks) == 1:
        results = [_block_task(dicts, s, n) for s, n in blocks]
    else:
        with ProcessPoolExecutor(max_workers=mc.workers) as ex:
            results = list(ex.map(_block_task, repeat(dicts), starts, counts))
    merged = []
    for i in range(len(cfgs)):
        keys = list(results[0][i])
        for r in results[1:]:
            keys += [k for k in r[i] if k not in keys]
        merged.append({k: np.concatenate([r[i][k] for r in results if k in r[i]]) for k in keys})
    return merged


# --- reductions --------------------------------------------------------------

def summarize(arrays: dict, cfg: ExperimentConfig) -> dict:
    err, xi = arrays["err"], arrays["xi"]
    n = len(err)
    rms = float(np.sqrt(pairwise_sum(err ** 2) / n))
    sd = float(np.sqrt(sample_var(xi))) if n > 1 else 0.0
    return {
        "representation": cfg.representation.kind,
        "alpha": cfg.alpha,
        "n_paths": n,
        "N": cfg.grid.N,
        "rms_abs": rms,
        "rms_rel": rms / sd if sd > 0 else None,
        "sd_xi": sd,
        "mean_err": float(pairwise_sum(err) / n),
    }


def _ladder_reduce(name: str, a: dict, ctx: Context) -> dict:
    return ladder_report(name, a["fine"], ctx.ladder, a.get("coarse")).to_dict()


def _norm_reduce(name: str, a: dict, ctx: Context, **norm_extra) -> dict:
    rep = _ladder_reduce(name, a, ctx)
    est, se = mean_se(a["full"])
    rep["norms"][name] = {"estimate": float(est), "se": float(se), **norm_extra}
    return rep


def _r_veraar(a: dict, ctx: Context) -> dict:
    rep = _ladder_reduce("veraar", a, ctx)
    est, se = mean_se(a["full"])
    rep["extras"].update({"estimate": float(est), "se": float(se)})
    return rep


def _r_gprime(a: dict, ctx: Context) -> dict:
    rep = _ladder_reduce(f"gprime_{_terminal_g(ctx.spec)}", a, ctx)
    cm, cs = mean_se(a["comparison"])
    rep["extras"].update({"comparison": float(cm), "comparison_se": float(cs)})
    return rep


def _r_girsanov(a: dict, ctx: Context) -> dict:
    sigma = deterministic_on_nodes(ctx.spec, ctx.grid, "sigma")
    closed = float(truncated_sums((sigma ** 2)[None, :], ctx.grid, ctx.ladder, kernel="inverse")[0, -1])
    diff, dse = mean_se(a["q"][:, -1] - a["p"][:, -1])
    wm, wse = mean_se(a["weights"])
    return {
        "reference": ladder_report("singular_functional_P", a["p"], ctx.ladder).to_dict(),
        "weighted": ladder_report("singular_functional_Q", a["q"], ctx.ladder).to_dict(),
        "difference": float(diff),
        "difference_se": float(dse),
        "weight_mean": float(wm),
        "weight_se": float(wse),
        "closed_form": closed,
    }


def _r_orthogonality(a: dict, ctx: Context) -> dict:
    mean, se = mean_se(a["values"])
    rows = []
    for spec, m, s in zip(perturbations_for(ctx.cfg, ctx.grid.T), mean, se):
        rows.append({"t": spec.t, "s": spec.s, "chi": spec.chi, "estimate": float(m), "se": float(s),
                     "statistic": _statistic(float(m), float(s))})
    return {"functional": "orthogonality", "perturbations": rows}


def _r_minimality(a: dict, ctx: Context) -> dict:
    mean, se = mean_se(a["gaps"])
    specs = perturbations_for(ctx.cfg, ctx.grid.T)
    rows, j = [], 0
    for spec in specs:
        block = []
        for e in MINIMALITY_STEPS:
            block.append({"t": spec.t, "s": spec.s, "step": e, "gap": float(mean[j]), "se": float(se[j])})
            j += 1
        by_step = {r["step"]: r for r in block}
        for r in block:
            doubled = by_step.get(2 * r["step"])
            if doubled is not None and r["gap"] != 0:
                r["ratio_to_double"] = doubled["gap"] / r["gap"]
        rows += block
    return {"functional": "minimality", "gaps": rows}


def _r_agreement(a: dict, ctx: Context) -> dict:
    rep = agreement_report(a["values"], ctx.grid, int(ctx.cfg.options.get("cutoff_exponent", 6)))
    d = rep.to_dict()
    d["functional"] = "agreement"
    d["ratio_to_scale"] = rep.max_discrepancy / rep.scale if rep.scale > 0 else None
    return d


def _r_rl(a: dict, ctx: Context) -> dict:
    alphas, idx = _rl_setup(ctx.cfg, ctx.grid)
    var = sample_var(a["R"])
    rows, j = [], 0
    for al in alphas:
        for i in idx:
            t = float(ctx.grid.nodes[i])
            target = t ** (1 - 2 * al) / (1 - 2 * al)
            rows.append({"alpha": al, "t": t, "variance": float(var[j]), "target": target,
                         "rel_error": float(var[j] / target - 1.0)})
            j += 1
    return {"functional": "rl_variance", "rows": rows}


def resolvent_for(cfg: ExperimentConfig, grid: TimeGrid):
    return resolvent_table(grid, int(cfg.options.get("resolvent_order", 10)),
                           count=int(cfg.options.get("resolvent_nodes", 64)))


def _r_resolvent(a: dict, ctx: Context) -> dict:
    table = resolvent_for(ctx.cfg, ctx.grid)
    bound_ok = bool(np.all(np.abs(table.partial_sums - table.limit) <= table.remainder_bound() + 1e-12))
    return {
        "functional": "resolvent",
        "order": table.order,
        "n_nodes": len(table.nodes),
        "t_min": float(table.nodes[0]),
        "t_max": float(table.nodes[-1]),
        "max_sum_error": table.max_sum_error(),
        "max_composition_error": {str(i): table.max_composition_error(i) for i in range(table.order + 1)},
        "remainder_bound_holds": bound_ok,
    }


REDUCERS: dict[str, Callable[[dict, Context], dict]] = {
    "singular_functional": lambda a, ctx: _ladder_reduce("singular_functional", a, ctx),
    "l21": lambda a, ctx: _norm_reduce("l21", a, ctx),
    "lp1": lambda a, ctx: _norm_reduce("lp1", a, ctx, p=lp1_exponent(ctx.cfg)),
    "veraar": _r_veraar,
    "gprime": _r_gprime,
    "girsanov": _r_girsanov,
    "orthogonality": _r_orthogonality,
    "minimality": _r_minimality,
    "agreement": _r_agreement,
    "rl_variance": _r_rl,
    "resolvent": _r_resolvent,
}


@dataclass
class Evaluation:
    cfg: ExperimentConfig
    grid: TimeGrid
    summary: dict
    reports: dict
    rates: np.ndarray | None


def evaluate(cfgs: list[ExperimentConfig]) -> list[Evaluation]:
    out = []
    for cfg, arrays in zip(cfgs, run_blocks(cfgs)):
        grid = cfg.grid.build()
        ctx = Context(cfg, grid, ladder_for(cfg, grid), cfg.payoff_spec())
        reports = {}
        for check in cfg.diagnostics:
            prefix = f"{check}."
            sub = {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
            reports[check] = REDUCERS[check](sub, ctx)
        out.append(Evaluation(cfg, grid, summarize(arrays, cfg), reports, arrays.get("rates")))
    return out


# --- output ------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_rows(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _check_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output.directory)
    if not out.is_dir():
        raise FileNotFoundError(f"output directory {out} does not exist")
    return out


def _write_reports(ev: Evaluation, out: Path, suffix: str = "") -> list[Path]:
    files = []
    fmts = ev.cfg.output.formats
    for check, rep in ev.reports.items():
        stem = f"report_{check}{suffix}"
        if "json" in fmts:
            files.append(out / f"{stem}.json")
            _write_json(files[-1], rep)
        if "csv" in fmts and "ladder" in rep:
            files.append(out / f"{stem}.csv")
            _write_rows(files[-1], ["epsilon", "value", "se"],
                        [[r["epsilon"], r["value"], r["se"]] for r in rep["ladder"]])
        if check == "resolvent" and "csv" in fmts:
            files.append(out / f"resolvent{suffix}.csv")
            write_resolvent_csv(resolvent_for(ev.cfg, ev.grid), files[-1])
    return files


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def versions() -> dict:
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "lebrep": __version__}


def _write_manifest(cfg: ExperimentConfig, command: str, out: Path, files: list[Path], extra: dict) -> Path:
    manifest = {
        "command": command,
        "config": cfg.to_dict(),
        "config_sha256": cfg.sha256(),
        "seed": cfg.mc.seed,
        "grid": {"T": cfg.grid.T, "N": cfg.grid.N, "q": cfg.grid.q},
        "alpha": cfg.alpha,
        "versions": versions(),
        "outputs": {f.name: _sha256(f) for f in sorted(files)},
        **extra,
    }
    path = out / "manifest.json"
    _write_json(path, manifest)
    return path


def run_represent(cfg: ExperimentConfig) -> dict:
    """Rate CSV (first ``rate_paths`` paths), optional reports, manifest with the error summary."""
    out = _check_dir(cfg)
    ev = evaluate([cfg])[0]
    files = []
    if "csv" in cfg.output.formats and ev.rates is not None:
        files.append(out / "rates.csv")
        write_rate_csv(RateProcess(ev.grid, ev.rates), files[-1])
    files += _write_reports(ev, out)
    _write_manifest(cfg, "represent", out, files, {"summary": ev.summary})
    return {"summary": ev.summary, "reports": ev.reports, "files": [f.name for f in files]}


def sweep_configs(cfg: ExperimentConfig, parameter: str, values: list) -> list[ExperimentConfig]:
    out = []
    for v in values:
        if parameter == "gamma":
            if cfg.payoff.get("variant") != "power_sigma":
                raise ValueError("gamma sweeps need a power_sigma payoff")
            out.append(cfg.with_changes(payoff={"variant": "power_sigma", "gamma": float(v)}, sweep=None))
        elif parameter == "alpha":
            out.append(cfg.with_changes(representation={"kind": "fractional", "alpha": float(v), "p": None}, sweep=None))
        elif parameter == "p":
            out.append(cfg.with_changes(representation={"kind": "fractional", "alpha": None, "p": float(v)}, sweep=None))
        elif parameter == "N":
            out.append(cfg.with_changes(grid={"N": int(v)}, sweep=None))
        else:
            raise ValueError(f"unsupported sweep parameter {parameter!r}")
    return out


def _sweep_spec(cfg: ExperimentConfig, parameter: str | None, values: list | None) -> tuple[str, list]:
    if parameter is None:
        if cfg.sweep is None:
            raise ValueError("no sweep parameter given and config has no sweep block")
        parameter = cfg.sweep.parameter
        values = cfg.sweep.values if values is None else values
    if parameter not in ("gamma", "alpha", "p", "N"):
        raise ValueError(f"unsupported sweep parameter {parameter!r}")
    if values is None:
        values = cfg.sweep.values if cfg.sweep is not None and cfg.sweep.parameter == parameter else []
    return parameter, list(values)


def sweep_header(cfg: ExperimentConfig, parameter: str) -> list[str]:
    cols = ["parameter", "value", "N", "alpha", "rms_abs", "rms_rel", "sd_xi"]
    if parameter == "alpha":
        cols += ["p_threshold"]
    for check in cfg.diagnostics:
        if check in LADDER_CHECKS:
            cols += [f"{check}_{k}" for k in ("verdict", "slope", "tail_slope", "rel_increment", "limit",
                                              "limit_se", "estimate", "se")]
            if check == "lp1":
                cols += ["lp1_p"]
        elif check == "agreement":
            cols += ["agreement_max", "agreement_scale"]
        else:
            raise ValueError(f"check {check!r} has no sweep columns")
    return cols


def _sweep_row(ev: Evaluation, parameter: str, value) -> list:
    s = ev.summary
    row = [parameter, value, ev.cfg.grid.N, ev.cfg.alpha, s["rms_abs"], s["rms_rel"], s["sd_xi"]]
    if parameter == "alpha":
        row.append(1.0 / (1.0 - ev.cfg.alpha))
    for check in ev.cfg.diagnostics:
        rep = ev.reports[check]
        if check in LADDER_CHECKS:
            est = rep["norms"].get(check, rep["extras"]).get("estimate")
            se = rep["norms"].get(check, rep["extras"]).get("se")
            row += [rep["verdict"], rep["slope"], rep["tail_slope"], rep["rel_increment"], rep["limit"],
                    rep["limit_se"], est, se]
            if check == "lp1":
                row.append(lp1_exponent(ev.cfg))
        else:
            row += [rep["max_discrepancy"], rep["scale"]]
    return row


def run_sweep(cfg: ExperimentConfig, parameter: str | None = None, values: list | None = None) -> dict:
    """One CSV row per parameter value; all values share the same Brownian paths."""
    parameter, values = _sweep_spec(cfg, parameter, values)
    out = _check_dir(cfg)
    header = sweep_header(cfg, parameter)
    rows = []
    if values:
        for v, ev in zip(values, evaluate(sweep_configs(cfg, parameter, values))):
            rows.append(_sweep_row(ev, parameter, v))
    path = out / f"sweep_{parameter}.csv"
    _write_rows(path, header, rows)
    _write_manifest(cfg, "sweep", out, [path], {"sweep": {"parameter": parameter, "values": values}})
    return {"header": header, "rows": rows, "files": [path.name]}


def run_diagnose(cfg: ExperimentConfig) -> dict:
    """One report per requested check; with a sweep block, one set per value plus a verdict table."""
    out = _check_dir(cfg)
    if cfg.sweep is None:
        ev = evaluate([cfg])[0]
        files = _write_reports(ev, out)
        _write_manifest(cfg, "diagnose", out, files, {"summary": ev.summary})
        return {"summary": ev.summary, "reports": ev.reports, "files": [f.name for f in files]}
    parameter, values = cfg.sweep.parameter, list(cfg.sweep.values)
    files, table, reports = [], [], {}
    if values:
        for v, ev in zip(values, evaluate(sweep_configs(cfg, parameter, values))):
            files += _write_reports(ev, out, suffix=f"_{parameter}={v:g}")
            reports[v] = ev.reports
            for check, rep in ev.reports.items():
                if "verdict" in rep:
                    table.append([parameter, v, check, rep["verdict"], rep["slope"], rep["tail_slope"],
                                  rep["limit"], rep["limit_se"]])
    path = out / "verdicts.csv"
    _write_rows(path, ["parameter", "value", "check", "verdict", "slope", "tail_slope", "limit", "limit_se"], table)
    files.append(path)
    _write_manifest(cfg, "diagnose", out, files, {"sweep": {"parameter": parameter, "values": values}})
    return {"reports": reports, "verdicts": table, "files": [f.name for f in files]}


def replay(manifest_path: str | Path, out: str | Path | None = None, workers: int | None = None) -> list[str]:
    """Re-run a manifest and return the names of outputs whose bytes differ."""
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    data = manifest["config"]
    target = Path(out) if out is not None else Path(tempfile.mkdtemp(prefix="lebrep-replay-"))
    data["output"]["directory"] = str(target)
    if workers is not None:
        data["mc"]["workers"] = workers
    cfg = config_from_dict(data)
    command = manifest["command"]
    if command == "represent":
        run_represent(cfg)
    elif command == "diagnose":
        run_diagnose(cfg)
    elif command == "sweep":
        run_sweep(cfg, manifest["sweep"]["parameter"], manifest["sweep"]["values"])
    else:
        raise ValueError(f"unknown command {command!r} in manifest")
    mismatched = []
    for name, digest in manifest["outputs"].items():
        f = target / name
        if not f.is_file() or _sha256(f) != digest:
            mismatched.append(name)
    return mismatched
