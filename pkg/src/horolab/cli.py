"""Experiment orchestration: config ingestion, stage execution, report emission.

Single binary with subcommands; every report carries the rng seed and the
arithmetic mode, and a full run with a fixed (config, seed) produces a
byte-identical bundle.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import figures
from .actions import (
    FiniteAction,
    convergence_experiment,
    joint_empirical,
    make_transversal,
    parity_quotient_config,
)
from .blockgraph import coding_injectivity_test, default_block_graph
from .groups import GroupSpec
from .horofn import adaptive_block_parameters, determinism_test
from .errors import (
    ActionNotTransitive,
    ConfigInvalid,
    HorolabError,
    NotInRecurrentCone,
)
from .reports import format_table, write_csv, write_json
from .spectral import (
    alpha_shift,
    density_recursion_check,
    DensityVector,
    empirical_block_densities,
    find_period,
    generation_growth_check,
    growth_data,
    mtp_check,
    perron,
    qc_random_suite,
    tail_mass_check,
)

STAGES = ("validate", "spheres", "blocks", "spectral", "average", "joint")


@dataclass
class ExperimentConfig:
    """Validated experiment configuration (see configs/ for examples)."""

    seed: int
    group: dict
    blocks: dict
    spectral: dict
    actions: list[dict]
    output: dict
    raw: dict = field(repr=False, default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigInvalid(f"cannot read config {path}: {e}") from None

        def need(mapping, key, where, default=None):
            if key not in mapping:
                if default is not None:
                    return default
                raise ConfigInvalid(f"missing field: {where}.{key}")
            return mapping[key]

        group = need(raw, "group", "config")
        blocks = dict(raw.get("blocks", {}))
        blocks.setdefault("H", 1)
        blocks.setdefault("W", 0)
        blocks.setdefault("adaptive", False)
        blocks.setdefault("pairs", 48)
        blocks.setdefault("samples", 200)
        blocks.setdefault("depth", 8)
        blocks.setdefault("graph_depth", 12)
        blocks.setdefault("graph_seeds", 6)
        spectral = dict(raw.get("spectral", {}))
        spectral.setdefault("max_n", 10)
        spectral.setdefault("density_n", [2, 4, 6])
        spectral.setdefault("tail_kmax", 40)
        spectral.setdefault("generation_n_max", 6)
        spectral.setdefault("mtp_n", [3, 6])
        spectral.setdefault("qc_pairs", 12)
        spectral.setdefault("qc_max_g", 4)
        spectral.setdefault("rate_tolerance", 2e-2)
        actions = raw.get("actions", [])
        for i, run in enumerate(actions):
            need(run, "action", f"actions[{i}]")
            need(run, "n_range", f"actions[{i}]")
            run.setdefault("name", f"run{i}")
            run.setdefault("x", "all")
            run.setdefault("f", {"indicator": 0})
            run.setdefault("window", 2)
            run.setdefault("joint_n", [])
        output = dict(raw.get("output", {}))
        output.setdefault("formats", ["csv", "json"])
        output.setdefault("sphere_dump_max", 5)
        return cls(
            seed=int(raw.get("seed", 0)),
            group=group,
            blocks=blocks,
            spectral=spectral,
            actions=actions,
            output=output,
            raw=raw,
        )


@dataclass
class RunContext:
    cfg: ExperimentConfig
    out: Path
    seed: int
    spec: GroupSpec = None
    graph: object = None
    H: int = 1
    W: int = 0
    summary: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    hard_failures: list[str] = field(default_factory=list)

    @property
    def meta(self) -> dict:
        return {"seed": self.seed, "mode": "exact"}

    def emit_csv(self, name, header, rows, extra_meta=None):
        meta = dict(self.meta)
        if extra_meta:
            meta.update(extra_meta)
        path = write_csv(self.out / name, header, rows, meta)
        self.files.append(name)
        return path

    def emit_json(self, name, obj):
        path = write_json(self.out / name, obj, self.meta)
        self.files.append(name)
        return path

    def want_figures(self) -> bool:
        return "svg" in self.cfg.output.get("formats", [])


def _canonical_ray(spec: GroupSpec, length: int):
    """Deterministic infinite-normal-word prefix: always the least allowed letter."""
    w = ""
    for _ in range(length):
        w += spec.allowed_letters(w)[0]
    from .horofn import Ray

    return Ray(spec, w)


# ----------------------------------------------------------------- stages


def stage_validate(ctx: RunContext):
    radius = min(6, ctx.cfg.spectral["max_n"])
    report = ctx.spec.validate_geodesics(radius)
    rips = ctx.spec.rips_spot_check(radius=4, samples=40, seed=ctx.seed)
    ctx.summary["validate"] = {"geodesics": report.to_dict(), "rips": rips.to_dict()}
    if not report.ok:
        ctx.hard_failures.append(f"geodesic validation failed: {report.summary()}")
    if not rips.ok:
        ctx.hard_failures.append(
            f"Rips spot-check defect {rips.max_defect} exceeds delta {ctx.spec.delta}"
        )


def stage_spheres(ctx: RunContext):
    spec = ctx.spec
    dump_max = ctx.cfg.output["sphere_dump_max"]
    rows = []
    for n in range(dump_max + 1):
        for i, w in enumerate(spec.sphere(n)):
            rows.append((n, i, spec.format(w)))
    ctx.emit_csv("01_spheres.csv", ("radius", "shortlex_index", "word"), rows)

    gd = growth_data(spec, ctx.cfg.spectral["max_n"])
    growth_rows = [
        (n, gd.sphere_sizes[n], gd.ratios[n - 1] if n >= 1 else "")
        for n in range(len(gd.sphere_sizes))
    ]
    ctx.emit_csv(
        "02_growth.csv",
        ("n", "size", "ratio"),
        growth_rows,
        extra_meta={"rate_estimate": gd.rate_estimate},
    )
    ctx.summary["spheres"] = {
        "sizes": gd.sphere_sizes,
        "rate_estimate": gd.rate_estimate,
    }
    if ctx.want_figures():
        figures.render_growth(
            gd.sphere_sizes,
            gd.rate_estimate,
            ctx.out / "figures" / "growth.svg",
            ctx.seed,
            "sphere growth",
        )
        ctx.files.append("figures/growth.svg")


def stage_blocks(ctx: RunContext):
    cfg = ctx.cfg.blocks
    H, W = int(cfg["H"]), int(cfg["W"])
    trail = []
    if cfg["adaptive"]:
        H, W, reports = adaptive_block_parameters(
            ctx.spec, pairs=cfg["pairs"], depth=cfg["depth"], rng_seed=ctx.seed
        )
        trail = [r.to_dict() for r in reports]
        det = reports[-1]
    else:
        det = determinism_test(
            ctx.spec, H, W, pairs=cfg["pairs"], depth=cfg["depth"], rng_seed=ctx.seed
        )
    ctx.H, ctx.W = H, W
    if not det.ok:
        ctx.hard_failures.append(
            f"determinism violated at (H={H}, W={W}); raise the block window"
        )
    graph = default_block_graph(
        ctx.spec, H, W, depth=cfg["graph_depth"], seeds=cfg["graph_seeds"], rng_seed=ctx.seed
    )
    ctx.graph = graph
    if not graph.closed:
        ctx.hard_failures.append("block graph not closed within the sweep budget")
    inj = coding_injectivity_test(
        ctx.spec, H, W, samples=cfg["samples"], depth=cfg["depth"], rng_seed=ctx.seed
    )
    if not inj.ok:
        ctx.hard_failures.append(f"coding collisions found: {inj.collisions[:2]}")
    payload = graph.to_json_dict()
    payload["determinism"] = det.to_dict()
    payload["adaptive_trail"] = trail
    payload["injectivity"] = inj.to_dict()
    ctx.emit_json("03_blockgraph.json", payload)
    M = graph.adjacency()
    ctx.emit_csv(
        "04_adjacency.csv",
        tuple(f"b{j}" for j in range(M.n)),
        M.to_rows(),
        extra_meta={"H": H, "W": W},
    )
    ctx.summary["blocks"] = {
        "H": H,
        "W": W,
        "vertices": len(graph.vertices),
        "edges": len(graph.edges),
        "closed": graph.closed,
        "determinism_ok": det.ok,
        "injectivity_ok": inj.ok,
    }


def stage_spectral(ctx: RunContext):
    spec, graph = ctx.spec, ctx.graph
    scfg = ctx.cfg.spectral
    M = graph.adjacency()
    p = find_period(M)
    pd = perron(M, p)
    gd = growth_data(spec, scfg["max_n"])
    rate_from_perron = math.log(float(pd.eigenvalue)) / p
    rate_ok = abs(rate_from_perron - gd.rate_estimate) <= scfg["rate_tolerance"]
    if not rate_ok:
        ctx.hard_failures.append(
            f"perron rate {rate_from_perron} vs growth {gd.rate_estimate} "
            f"outside tolerance {scfg['rate_tolerance']}"
        )

    # invariant level vectors from the Perron data, and their recursion
    exact_lambda = pd.eigenvalue if pd.mode == "exact" and p == 1 else None
    recursion = None
    tail = None
    if exact_lambda is not None:
        lam = Fraction(exact_lambda)
        vecs = [
            DensityVector(
                tuple(w * (1 - 1 / lam) / lam**k for w in pd.eigenvector.weights),
                level=k,
            )
            for k in range(4)
        ]
        recursion = density_recursion_check(vecs, M)
        if not recursion.ok:
            ctx.hard_failures.append("density recursion violated on invariant vectors")
        tail = tail_mass_check(
            pd.eigenvector, math.log(float(lam)), scfg["tail_kmax"], M, growth_factor=lam
        )
        if not tail.ok:
            ctx.hard_failures.append("tail-mass law violated")

    ray = _canonical_ray(spec, scfg["generation_n_max"] + ctx.H + ctx.W + 16 * spec.delta + 2 * spec.delta + 8)
    gen = generation_growth_check(
        spec, ray, scfg["generation_n_max"], ctx.H, ctx.W, graph, rate=gd.rate_estimate
    )
    if not gen.ok:
        ctx.hard_failures.append("generation counts disagree with matrix powers")

    mtp_reports = []
    for n in scfg["mtp_n"]:
        rep = mtp_check(spec, n, graph)
        mtp_reports.append(rep.to_dict())
        if not rep.ok:
            ctx.hard_failures.append(f"mass-transport identity failed at n={n}")

    qc_reports = []
    if spec.family == "free":
        rank = len(spec.chars) // 2
        for rep in qc_random_suite(rank, scfg["qc_pairs"], scfg["qc_max_g"], seed=ctx.seed):
            qc_reports.append(rep.to_dict())
            if not rep.ok:
                ctx.hard_failures.append(
                    f"quasiconformal identity failed for g={rep.g} cylinder={rep.cylinder}"
                )

    # alpha-orbit of the Perron vector: the reference phases for the
    # empirical-density convergence diagnostic
    orbit = [pd.eigenvector.normalized()]
    try:
        for _ in range(p - 1):
            orbit.append(alpha_shift(orbit[-1], M, p))
    except NotInRecurrentCone:
        pass

    rows = []
    orbit_distance = {}
    for n in scfg["density_n"]:
        emp = empirical_block_densities(spec, n, ctx.H, ctx.W, graph)
        dist = min(
            float(sum(abs(a - b) for a, b in zip(emp.vector.weights, phase.weights)))
            for phase in orbit
        )
        orbit_distance[n] = dist
        for key, weight, count in zip(
            (v.key() for v in graph.vertices), emp.vector.weights, emp.counts
        ):
            rows.append((n, key, weight, count))
    ctx.emit_csv("06_densities.csv", ("n", "block", "weight", "count"), rows)

    payload = {
        "period": p,
        "perron": pd.to_dict(),
        "growth": gd.to_dict(),
        "rate_tolerance": scfg["rate_tolerance"],
        "rate_consistent": rate_ok,
        "recursion": recursion.to_dict() if recursion else None,
        "tail": tail.to_dict() if tail else None,
        "generation": gen.to_dict(),
        "mtp": mtp_reports,
        "quasiconformal": qc_reports,
        "density_orbit_distance": {str(k): v for k, v in orbit_distance.items()},
    }
    ctx.emit_json("05_spectral.json", payload)

    print(
        format_table(
            ("n", "sphere_size", "ratio"),
            [
                (n, gd.sphere_sizes[n], gd.ratios[n - 1] if n else "")
                for n in range(len(gd.sphere_sizes))
            ],
        )
    )
    print(
        format_table(
            ("n", "density_orbit_distance",),
            sorted(orbit_distance.items()),
        )
    )
    ctx.summary["spectral"] = {
        "period": p,
        "eigenvalue": str(pd.eigenvalue),
        "mode": pd.mode,
        "rate_estimate": gd.rate_estimate,
        "rate_consistent": rate_ok,
        "generation_ok": gen.ok,
        "mtp_ok": all(r["ok"] for r in mtp_reports),
        "qc_ok": all(r["ok"] for r in qc_reports),
        "density_orbit_distance": {str(k): v for k, v in orbit_distance.items()},
    }


def _resolve_action(ctx: RunContext, run: dict):
    action_cfg = run["action"]
    if isinstance(action_cfg, str):
        action_cfg = json.loads((Path(action_cfg)).read_text())
    action = FiniteAction.from_config(ctx.spec, action_cfg)
    qcfg = run.get("quotient") or parity_quotient_config(ctx.spec)
    transversal = make_transversal(ctx.spec, qcfg)
    return action, transversal


def _f_vectors(run: dict, m: int):
    fspec = run["f"]
    if fspec == "indicators":
        return [(j, [1 if i == j else 0 for i in range(m)]) for j in range(m)]
    if isinstance(fspec, dict) and "indicator" in fspec:
        j = int(fspec["indicator"])
        return [(j, [1 if i == j else 0 for i in range(m)])]
    return [("f", [Fraction(str(v)) for v in fspec])]


def stage_average(ctx: RunContext):
    rows_all = []
    results = {}
    for run in ctx.cfg.actions:
        action, transversal = _resolve_action(ctx, run)
        lo, hi = run["n_range"]
        ns = list(range(int(lo), int(hi) + 1))
        xs = list(range(action.size)) if run["x"] == "all" else [int(run["x"])]
        fs = _f_vectors(run, action.size)
        name = run["name"]
        run_rows = []
        for fj, f in fs[:1]:  # the CSV carries the first configured f
            mean = Fraction(sum(f), action.size)
            for x in xs:
                conv = convergence_experiment(ctx.spec, action, f, x, transversal, ns)
                tv_by_n = {
                    n: joint_empirical(
                        ctx.spec, action, x, transversal, n, run["window"]
                    ).tv_distance
                    for n in ns
                    if n >= run["window"]
                }
                for r in conv:
                    run_rows.append(
                        (
                            r["n"],
                            x,
                            r["average"],
                            r["deviation"],
                            tv_by_n.get(r["n"], ""),
                        )
                    )
        rows_all.extend(run_rows)
        last_dev = max(float(r[3]) for r in run_rows if r[0] == ns[-1])
        results[name] = {"max_final_deviation": last_dev, "n_final": ns[-1]}
        if ctx.want_figures() and run_rows:
            x0 = xs[0]
            rows_fig = [
                {"n": r[0], "deviation": r[3]} for r in run_rows if r[1] == x0
            ]
            figures.render_convergence(
                rows_fig,
                ctx.out / "figures" / f"average_{name}.svg",
                ctx.seed,
                f"spherical average convergence ({name})",
            )
            ctx.files.append(f"figures/average_{name}.svg")
    ctx.emit_csv(
        "07_average.csv", ("n", "x", "average", "deviation", "tv_distance"), rows_all
    )
    ctx.summary["average"] = results


def stage_joint(ctx: RunContext):
    rows = []
    results = {}
    for run in ctx.cfg.actions:
        if not run["joint_n"]:
            continue
        action, transversal = _resolve_action(ctx, run)
        xs = list(range(action.size)) if run["x"] == "all" else [int(run["x"])]
        x0 = xs[0]
        tv_rows = []
        for n in run["joint_n"]:
            rep = joint_empirical(ctx.spec, action, x0, transversal, n, run["window"])
            rows.append((n, x0, rep.tv_distance, len(rep.pattern_marginal)))
            tv_rows.append({"n": n, "tv_distance": rep.tv_distance})
        results[run["name"]] = {
            "tv_final": float(tv_rows[-1]["tv_distance"]),
            "tv_trace": [float(r["tv_distance"]) for r in tv_rows],
        }
        if ctx.want_figures():
            figures.render_tv(
                tv_rows,
                ctx.out / "figures" / f"joint_{run['name']}.svg",
                ctx.seed,
                f"joint product defect ({run['name']})",
            )
            ctx.files.append(f"figures/joint_{run['name']}.svg")
    ctx.emit_csv("08_joint.csv", ("n", "x", "tv_distance", "patterns"), rows)
    ctx.summary["joint"] = results


_STAGE_FUNCS = {
    "validate": stage_validate,
    "spheres": stage_spheres,
    "blocks": stage_blocks,
    "spectral": stage_spectral,
    "average": stage_average,
    "joint": stage_joint,
}

_STAGE_DEPS = {
    "spectral": ("blocks",),
    "average": (),
    "joint": (),
}


def plan(subcommand: str) -> list[str]:
    if subcommand == "all":
        return list(STAGES)
    stages = list(_STAGE_DEPS.get(subcommand, ()))
    stages.append(subcommand)
    return stages


def run(config_path: Path, subcommand: str, seed: int | None, out: Path | None,
        dry_run: bool = False) -> int:
    """Execute the requested stages; exit 0 iff every hard assertion passed."""
    cfg = ExperimentConfig.load(config_path)
    actual_seed = cfg.seed if seed is None else seed
    out_dir = Path(out) if out else Path(cfg.output.get("dir", "horolab_out"))
    stages = plan(subcommand)
    if dry_run:
        print(f"config: {config_path}")
        print(f"seed:   {actual_seed}")
        print(f"out:    {out_dir}")
        print("planned stages: " + " -> ".join(stages))
        return 0
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(cfg=cfg, out=out_dir, seed=actual_seed)
    try:
        ctx.spec = GroupSpec.from_config(cfg.group)
    except HorolabError as e:
        print(f"error: config group: {e}", file=sys.stderr)
        return 2
    status = 0
    try:
        for name in stages:
            if name in ("spectral",) and ctx.graph is None:
                _STAGE_FUNCS["blocks"](ctx)
            _STAGE_FUNCS[name](ctx)
    except ActionNotTransitive as e:
        print(f"error: action not transitive: {e}", file=sys.stderr)
        status = 1
    except HorolabError as e:
        print(f"error: {e}", file=sys.stderr)
        status = 1
    if ctx.hard_failures:
        for msg in ctx.hard_failures:
            print(f"FAIL: {msg}", file=sys.stderr)
        status = status or 1
    ctx.summary["status"] = "pass" if status == 0 else "fail"
    ctx.summary["hard_failures"] = ctx.hard_failures
    ctx.summary["stages"] = stages
    ctx.summary["files"] = sorted(ctx.files)
    write_json(out_dir / "09_summary.json", ctx.summary, ctx.meta)
    print(f"{'ok' if status == 0 else 'FAILED'}: wrote {len(ctx.files) + 1} files to {out_dir}")
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="horolab",
        description="Block coding, transfer-matrix spectra, and spherical-average experiments",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in STAGES + ("all",):
        sp = sub.add_parser(name, help=f"run the {name} stage" if name != "all" else "run everything")
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=Path, default=None)
        sp.add_argument("--dry-run", action="store_true")
    args = parser.parse_args(argv)
    try:
        return run(args.config, args.subcommand, args.seed, args.out, args.dry_run)
    except ConfigInvalid as e:
        print(f"error: invalid config: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
