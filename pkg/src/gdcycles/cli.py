"""Command-line front end.

Subcommands map one-to-one onto the library pipelines:

  solve       minimizer, lambda, L, and the critical step sizes
  trajectory  run GD and dump (t, loss, w, sharpness) CSV + cycle report
  psd         periodogram of the loss tail
  bifurcate   step-size sweep CSV + SVG scatters
  basin       basin-of-attraction PGM raster
  eos         stacked run whose sharpness settles above 2/eta
  repro       run every checked-in recipe end-to-end

Exit codes: 0 success, 1 usage error, 2 domain error (separable or
degenerate data).  All outputs are deterministic given flags and --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import svg
from .analysis import (
    basin_raster,
    bifurcation_sweep,
    detect_cycle,
    psd,
    psd_to_csv,
    raster_header,
    raster_to_pgm,
    sharpness_series,
    sweep_to_csv,
    trajectory_to_csv,
)
from .construct import Recipe1D, build_1d, eos_demo, kronecker_stack
from .data import check_separable, parse_compact, parse_libsvm
from .dynamics import GDConfig, run
from .exceptions import DegenerateDataError, GDCyclesError, SeparableDataError
from .losses import LOSS_NAMES, get_loss
from .objective import Objective, minimize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit2(f"{self.prog}: error: {message}")


class SystemExit2(Exception):
    """Usage error carrying its message; mapped to exit code 1 in main()."""


@dataclass
class RunConfig:
    dataset: Path
    fmt: str
    loss: str
    eta: Optional[float]
    gamma: Optional[float]
    ref: str
    iters: int
    seed: int
    out: Optional[Path]


def _load_dataset(path: Path, fmt: str, zero_as_negative: bool = False):
    text = Path(path).read_text()
    if fmt == "auto":
        fmt = "compact" if str(path).endswith(".cds") else "libsvm"
    if fmt == "compact":
        return parse_compact(text)
    return parse_libsvm(text, zero_as_negative=zero_as_negative)


def _common_flags(p: argparse.ArgumentParser, need_eta: bool = True):
    p.add_argument("--data", required=True, type=Path, help="dataset file (.cds or libsvm text)")
    p.add_argument("--format", default="auto", choices=("auto", "compact", "libsvm"))
    p.add_argument("--zero-as-negative", action="store_true",
                   help="map label 0 to -1 when parsing libsvm text")
    p.add_argument("--loss", default="logistic", choices=LOSS_NAMES)
    if need_eta:
        p.add_argument("--eta", type=float, default=None, help="absolute step size")
        p.add_argument("--gamma", type=float, default=None,
                       help="step-size factor relative to --ref")
        p.add_argument("--ref", default="lambda", choices=("lambda", "two-L"),
                       help="gamma reference: gamma/lambda or gamma*(2/L)")
    p.add_argument("--iters", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="output directory")


def _objective(args):
    ds = _load_dataset(args.data, args.format, getattr(args, "zero_as_negative", False))
    return Objective(ds, get_loss(args.loss))


def _resolve(args, obj):
    """Resolve --eta/--gamma to an absolute step size (needs the solution
    when --gamma is given)."""
    if (args.eta is None) == (args.gamma is None):
        raise SystemExit2("exactly one of --eta and --gamma must be given")
    if args.eta is not None:
        return float(args.eta), None
    sol = minimize(obj)
    if args.ref == "lambda":
        return args.gamma / sol.lambda_star, sol
    return args.gamma * sol.eta_two_L, sol


def _outdir(args) -> Path:
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_w0(text: str, dim: int) -> np.ndarray:
    vals = [float(t) for t in text.replace(",", " ").split()]
    if len(vals) == 1 and dim > 1:
        vals = vals * dim
    if len(vals) != dim:
        raise SystemExit2(f"--w0 has {len(vals)} entries, dataset has dimension {dim}")
    return np.array(vals)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    obj = _objective(args)
    verdict = check_separable(obj.ds)
    if verdict.verdict == "separable":
        raise SeparableDataError("dataset is separable; the minimizer is at infinity")
    sol = minimize(obj, tol=args.tol)
    record = sol.to_dict()
    for key, val in record.items():
        if key == "w_star":
            print("w_star = " + " ".join(format(v, ".17g") for v in val))
        else:
            print(f"{key} = {format(val, '.17g')}")
    if args.out is not None:
        out = _outdir(args)
        (out / "solution.json").write_text(json.dumps(record, indent=2) + "\n")
    return EXIT_OK


def cmd_trajectory(args) -> int:
    obj = _objective(args)
    eta, _ = _resolve(args, obj)
    w0 = _parse_w0(args.w0, obj.dim)
    cfg = GDConfig(w0=w0, max_iters=args.iters, eta=eta, record_every=args.record_every)
    traj = run(obj, cfg)
    sharp = sharpness_series(obj, traj) if args.sharpness else None
    out = _outdir(args)
    (out / "trajectory.csv").write_text(trajectory_to_csv(traj, sharpness=sharp))
    (out / "loss.svg").write_text(svg.line_svg(
        traj.times, traj.losses, title="loss per iteration", xlabel="t", ylabel="loss"))
    if traj.diverged:
        print("diverged = 1")
        return EXIT_OK
    if len(traj.dense_tail()) >= 2 * args.k_max:
        rep = detect_cycle(obj, traj, k_max=args.k_max)
        print(f"kind = {rep.kind}")
        print(f"period = {rep.period}")
        if rep.kind != "undetermined":
            print(f"residual = {rep.residual:.3e}")
            print(f"multiplier = {format(rep.multiplier, '.17g')}")
        print(f"lyapunov = {format(rep.lyapunov, '.17g')}")
    return EXIT_OK


def cmd_psd(args) -> int:
    obj = _objective(args)
    eta, _ = _resolve(args, obj)
    w0 = _parse_w0(args.w0, obj.dim)
    traj = run(obj, GDConfig(w0=w0, max_iters=args.iters, eta=eta))
    res = psd(traj.dense_tail_losses(), window=args.window)
    out = _outdir(args)
    (out / "psd.csv").write_text(psd_to_csv(res))
    (out / "psd.svg").write_text(svg.line_svg(
        res.freqs, res.power, title="loss power spectral density",
        xlabel="cycles per iteration", ylabel="power"))
    top = int(np.argmax(res.power[1:]) + 1) if len(res.power) > 1 else 0
    print(f"dominant_freq = {format(res.freqs[top], '.17g')}")
    return EXIT_OK


def cmd_bifurcate(args) -> int:
    obj = _objective(args)
    if args.eta_max <= args.eta_min:
        raise SystemExit2("--eta-max must exceed --eta-min")
    grid = np.linspace(args.eta_min, args.eta_max, args.steps)
    sweep = bifurcation_sweep(
        obj, grid, n_inits=args.inits, T=args.iters, seed=args.seed,
        pn_group=args.pn_group,
    )
    out = _outdir(args)
    (out / "sweep.csv").write_text(sweep_to_csv(sweep))
    xs, ys, ss = [], [], []
    for cell in sweep.cells:
        if cell.diverged:
            continue
        for lv in cell.final_losses:
            xs.append(cell.eta)
            ys.append(lv)
        ss.append((cell.eta, cell.scaled_sharpness))
    (out / "sweep_loss.svg").write_text(svg.scatter_svg(
        xs, ys, title="final losses vs step size", xlabel="eta", ylabel="loss"))
    (out / "sweep_sharpness.svg").write_text(svg.scatter_svg(
        [s[0] for s in ss], [s[1] for s in ss],
        title="scaled sharpness vs step size", xlabel="eta",
        ylabel="eta*lambda_max/2"))
    if args.pn_group is not None:
        px, py = [], []
        for cell in sweep.cells:
            if cell.diverged or cell.final_pn is None:
                continue
            for pv in cell.final_pn:
                px.append(cell.eta)
                py.append(pv)
        (out / "sweep_pn.svg").write_text(svg.scatter_svg(
            px, py, title="final probabilities vs step size", xlabel="eta", ylabel="p"))
    print(f"cells = {len(sweep.cells)}")
    return EXIT_OK


def cmd_basin(args) -> int:
    obj = _objective(args)
    if obj.dim != 2:
        raise SystemExit2("basin rasterization needs a 2-dimensional dataset")
    eta, sol = _resolve(args, obj)
    if sol is None:
        sol = minimize(obj)
    w0 = _parse_w0(args.w0, 2)
    traj = run(obj, GDConfig(w0=w0, max_iters=args.iters, eta=eta))
    rep = detect_cycle(obj, traj)
    if rep.kind != "cycle":
        raise GDCyclesError(
            f"no cycle found from w0={args.w0} (got {rep.kind}); basin needs both attractors"
        )
    raster = basin_raster(
        obj, eta, (args.xmin, args.xmax, args.ymin, args.ymax),
        (args.nx, args.ny), (sol.w_star, rep.orbit), T=args.basin_iters,
    )
    out = _outdir(args)
    (out / "basin.pgm").write_text(raster_to_pgm(raster))
    (out / "basin_header.txt").write_text(raster_header(raster, gamma=args.gamma))
    counts = {int(v): int(c) for v, c in
              zip(*np.unique(raster.labels, return_counts=True))}
    total = raster.labels.size
    print(f"cycle_period = {rep.period}")
    print(f"frac_to_fixed_point = {counts.get(2, 0) / total:.6f}")
    print(f"frac_to_cycle = {counts.get(1, 0) / total:.6f}")
    print(f"frac_other = {counts.get(0, 0) / total:.6f}")
    return EXIT_OK


def cmd_eos(args) -> int:
    spec = json.loads(Path(args.recipe).read_text())
    recipe = Recipe1D(
        m=spec["m"], n=spec["n"], x_big=spec["x_big"], b=spec["b"],
        gamma=spec["gamma"], w0=spec["w0"],
    )
    stacked, eta, w0 = eos_demo(recipe, args.k, iters=args.iters)
    obj = Objective(stacked, get_loss(args.loss))
    traj = run(obj, GDConfig(w0=w0, max_iters=args.stack_iters, eta=eta))
    start = max(0, len(traj.iterates) - args.tail)
    sharp = sharpness_series(obj, traj, start=start)
    out = _outdir(args)
    lines = ["t,loss,sharpness"]
    for i, t in enumerate(traj.times[start:]):
        lines.append(f"{int(t)},{format(traj.losses[start + i], '.17g')},"
                     f"{format(sharp[i], '.17g')}")
    (out / "eos_sharpness.csv").write_text("\n".join(lines) + "\n")
    print(f"eta = {format(eta, '.17g')}")
    print(f"two_over_eta = {format(2.0 / eta, '.17g')}")
    print(f"tail_sharpness_min = {format(float(np.min(sharp)), '.17g')}")
    print(f"tail_sharpness_max = {format(float(np.max(sharp)), '.17g')}")
    print(f"sharpness_above_two_over_eta = {int(float(np.min(sharp)) > 2.0 / eta)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# repro: run the checked-in recipes end-to-end
# ---------------------------------------------------------------------------

def _recipe_path(name: str):
    return resources.files("gdcycles").joinpath("recipes", name)


def _repro_trajectory(out: Path, name: str, iters: int):
    cfg = json.loads(_recipe_path(f"{name}.json").read_text())
    ds = parse_compact(_recipe_path(f"{name}.cds").read_text())
    obj = Objective(ds, get_loss(cfg["loss"]))
    sol = minimize(obj)
    eta = cfg["gamma"] / sol.lambda_star
    traj = run(obj, GDConfig(w0=np.array(cfg["w0"]), max_iters=iters, eta=eta))
    rep = detect_cycle(obj, traj)
    sub = out / name
    sub.mkdir(parents=True, exist_ok=True)
    (sub / "trajectory.csv").write_text(trajectory_to_csv(traj))
    res = psd(traj.dense_tail_losses())
    (sub / "psd.csv").write_text(psd_to_csv(res))
    print(f"{name}: kind={rep.kind} period={rep.period} eta={eta:.6f}")
    return obj, sol, eta, rep


def cmd_repro(args) -> int:
    out = _outdir(args)
    quick = args.quick
    iters_1d = 60_000 if quick else 150_000
    iters_2d = 60_000 if quick else 150_000

    for name in ("period4_1d", "period7_1d", "period37_1d"):
        _repro_trajectory(out, name, iters_1d)
    _repro_trajectory(out, "period13_2d", iters_2d)

    # toy two-example sweep: symmetric two-point oscillation past eta = 8,
    # visible in the probe probability rather than the loss
    ds = parse_compact(_recipe_path("toy_n2.cds").read_text())
    obj = Objective(ds, get_loss("logistic"))
    grid = np.round(np.arange(7.0, 10.0001, 0.05), 10)
    sweep = bifurcation_sweep(obj, grid, n_inits=4, T=4_000 if quick else 20_000,
                              seed=args.seed, pn_group=1)
    sub = out / "toy_sweep_n2"
    sub.mkdir(parents=True, exist_ok=True)
    (sub / "sweep.csv").write_text(sweep_to_csv(sweep))
    px, py = [], []
    for cell in sweep.cells:
        if not cell.diverged and cell.final_pn is not None:
            for pv in cell.final_pn:
                px.append(cell.eta)
                py.append(pv)
    (sub / "sweep_pn.svg").write_text(svg.scatter_svg(
        px, py, title="two-example oscillation onset", xlabel="eta", ylabel="p"))
    print(f"toy_sweep_n2: {len(sweep.cells)} cells")

    # basin raster for the co-stable two-dimensional example
    cfg = json.loads(_recipe_path("basin_2d.json").read_text())
    ds = parse_compact(_recipe_path("basin_2d.cds").read_text())
    obj = Objective(ds, get_loss(cfg["loss"]))
    sol = minimize(obj)
    eta = cfg["gamma"] / sol.lambda_star
    traj = run(obj, GDConfig(w0=np.array(cfg["w0"]), max_iters=60_000, eta=eta))
    rep = detect_cycle(obj, traj)
    res = 32 if quick else 64
    raster = basin_raster(obj, eta, (-10, 30, -10, 30), (res, res),
                          (sol.w_star, rep.orbit), T=1_000 if quick else 4_000)
    sub = out / "basin_2d"
    sub.mkdir(parents=True, exist_ok=True)
    (sub / "basin.pgm").write_text(raster_to_pgm(raster))
    (sub / "basin_header.txt").write_text(raster_header(raster, gamma=cfg["gamma"]))
    print(f"basin_2d: period={rep.period} grid={res}x{res}")

    # stacked example with sharpness pinned above 2/eta
    cfg = json.loads(_recipe_path("period4_1d.json").read_text())
    recipe = Recipe1D(m=cfg["m"], n=cfg["n"], x_big=cfg["x_big"], b=cfg["b"],
                      gamma=cfg["gamma"], w0=cfg["w0"][0])
    stacked, eta_st, w0 = eos_demo(recipe, 4, iters=iters_1d)
    obj = Objective(stacked, get_loss("logistic"))
    traj = run(obj, GDConfig(w0=w0, max_iters=10_000 if quick else 30_000, eta=eta_st))
    start = max(0, len(traj.iterates) - 2048)
    sharp = sharpness_series(obj, traj, start=start)
    sub = out / "eos_stacked"
    sub.mkdir(parents=True, exist_ok=True)
    lines = ["t,loss,sharpness"]
    for i, t in enumerate(traj.times[start:]):
        lines.append(f"{int(t)},{format(traj.losses[start + i], '.17g')},"
                     f"{format(sharp[i], '.17g')}")
    (sub / "eos_sharpness.csv").write_text("\n".join(lines) + "\n")
    print(f"eos_stacked: eta={eta_st:.6f} 2/eta={2 / eta_st:.6f} "
          f"tail sharpness={float(np.mean(sharp)):.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="gdcycles",
                     description="GD dynamics lab for non-separable linear classification")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("solve", help="minimizer and critical step sizes")
    _common_flags(p, need_eta=False)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(fn=cmd_solve)

    p = subs.add_parser("trajectory", help="run GD, dump CSV, classify the limit")
    _common_flags(p)
    p.add_argument("--w0", required=True, help="initial point, comma separated")
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--k-max", type=int, default=2048)
    p.add_argument("--sharpness", action="store_true")
    p.set_defaults(fn=cmd_trajectory)

    p = subs.add_parser("psd", help="periodogram of the loss tail")
    _common_flags(p)
    p.add_argument("--w0", required=True)
    p.add_argument("--window", type=int, default=1024)
    p.set_defaults(fn=cmd_psd)

    p = subs.add_parser("bifurcate", help="step-size sweep")
    _common_flags(p, need_eta=False)
    p.add_argument("--eta-min", type=float, required=True)
    p.add_argument("--eta-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--inits", type=int, default=32)
    p.add_argument("--pn-group", type=int, default=None,
                   help="dataset group whose probability to record per cell")
    p.set_defaults(fn=cmd_bifurcate)

    p = subs.add_parser("basin", help="basin-of-attraction raster (d=2)")
    _common_flags(p)
    p.add_argument("--w0", required=True, help="initialization that reaches the cycle")
    p.add_argument("--xmin", type=float, default=-10.0)
    p.add_argument("--xmax", type=float, default=30.0)
    p.add_argument("--ymin", type=float, default=-10.0)
    p.add_argument("--ymax", type=float, default=30.0)
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--ny", type=int, default=64)
    p.add_argument("--basin-iters", type=int, default=4000)
    p.set_defaults(fn=cmd_basin)

    p = subs.add_parser("eos", help="stacked run with sharpness above 2/eta")
    p.add_argument("--recipe", required=True, type=Path,
                   help="JSON with m, n, x_big, b, gamma, w0")
    p.add_argument("--k", type=int, required=True, help="cycle period to stack")
    p.add_argument("--loss", default="logistic", choices=LOSS_NAMES)
    p.add_argument("--iters", type=int, default=150_000)
    p.add_argument("--stack-iters", type=int, default=30_000)
    p.add_argument("--tail", type=int, default=2048)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(fn=cmd_eos)

    p = subs.add_parser("repro", help="run the checked-in recipe configurations")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="smaller grids and runs")
    p.set_defaults(fn=cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit2 as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # argparse exits 0 for --help; treat anything else as usage error
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.fn(args)
    except SystemExit2 as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SeparableDataError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except GDCyclesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
