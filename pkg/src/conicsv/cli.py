"""Command-line frontend for the conic singular value toolkit.

Subcommands: `sigma` solves one instance from files, `bench` runs the
randomized Gaussian benchmark at desk scale and emits dispersion CSV,
`polar` prints the polar of a cone in both representations, `oracle`
invokes the brute-force references, and `design` runs the sensor
selection demo.

File formats:
  matrix: first line `d n`, then d rows of n reals.
  cone:   first line `n m r`, then m inequality normals and r equality
          normals, one column of n reals per line (`0 0` means R^n).
  model:  first line `N L`, then L blocks of N rows, each row holding N
          re/im pairs of a Hermitian matrix.
  delta / w0: whitespace-separated reals.

Exit codes: 0 converged, 2 uncertified result, 1 input error.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from .cones import cone_h, format_cone_g, format_cone_h, load_cone_file, member_g, member_h, polar_g, polar_h
from .dual_solver import SolverOptions, solve
from .gridapp import design_objective, greedy_design, load_model_file, load_vector_file, realify
from .oracle import grid_oracle, pg_oracle
from .rng import SplitMix64, child_seed

__all__ = ["main", "RunRecord", "CSV_HEADER", "parse_run_records"]

DESK_SCALE_CAP = 2000

CSV_HEADER = "instance_id,n,d,m,seed,sigma_min,gap,iters,converged,wall_time_seconds"


@dataclass(frozen=True)
class RunRecord:
    """One solver run in the benchmark CSV schema."""

    instance_id: str
    n: int
    d: int
    m: int
    seed: int
    sigma_min: float
    gap: float
    iters: int
    converged: bool
    wall_time_seconds: float

    def csv_row(self) -> str:
        return ",".join(
            [
                self.instance_id,
                str(self.n),
                str(self.d),
                str(self.m),
                str(self.seed),
                f"{self.sigma_min:.17g}",
                f"{self.gap:.17g}",
                str(self.iters),
                "true" if self.converged else "false",
                f"{self.wall_time_seconds:.17g}",
            ]
        )

    def json_line(self) -> str:
        return json.dumps(
            {
                "instance_id": self.instance_id,
                "n": self.n,
                "d": self.d,
                "m": self.m,
                "seed": self.seed,
                "sigma_min": self.sigma_min,
                "gap": self.gap,
                "iters": self.iters,
                "converged": self.converged,
                "wall_time_seconds": self.wall_time_seconds,
            }
        )


def parse_run_records(text: str) -> list[RunRecord]:
    """Parse benchmark CSV text back into records, skipping comments."""
    rows = []
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("missing or unexpected CSV header")
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 10:
            raise ValueError(f"bad CSV row: {ln}")
        rows.append(
            RunRecord(
                instance_id=parts[0],
                n=int(parts[1]),
                d=int(parts[2]),
                m=int(parts[3]),
                seed=int(parts[4]),
                sigma_min=float(parts[5]),
                gap=float(parts[6]),
                iters=int(parts[7]),
                converged=parts[8] == "true",
                wall_time_seconds=float(parts[9]),
            )
        )
    return rows


def load_matrix_file(path: str) -> np.ndarray:
    """Parse a matrix file: header `d n`, then d rows of n reals."""
    with open(path) as fh:
        raw = fh.read()
    lines = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            lines.append((lineno, body.split()))
    if not lines:
        raise ValueError(f"{path}:1: empty matrix file")
    lineno, header = lines[0]
    if len(header) != 2:
        raise ValueError(f"{path}:{lineno}: expected header 'd n'")
    try:
        d, n = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError(f"{path}:{lineno}: header entries must be integers") from None
    if d < 1 or n < 1:
        raise ValueError(f"{path}:{lineno}: invalid dimensions d={d} n={n}")
    body = lines[1:]
    if len(body) != d:
        raise ValueError(f"{path}: expected {d} matrix rows, got {len(body)}")
    rows = []
    for lineno, tokens in body:
        if len(tokens) != n:
            raise ValueError(f"{path}:{lineno}: expected {n} values, got {len(tokens)}")
        try:
            rows.append([float(t) for t in tokens])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return np.array(rows)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _cmd_sigma(args) -> int:
    a = load_matrix_file(args.matrix)
    cone = load_cone_file(args.cone)
    opts = SolverOptions(eps=args.eps, max_iter=args.max_iter)
    result = solve(a, cone, opts=opts)
    wall = 0.0 if args.zero_time else result.wall_time
    if args.json:
        rec = RunRecord(
            instance_id=f"{args.matrix}:{args.cone}",
            n=a.shape[1],
            d=a.shape[0],
            m=cone.n_ineq,
            seed=-1,
            sigma_min=result.sigma_min,
            gap=result.gap,
            iters=result.iters,
            converged=result.converged,
            wall_time_seconds=wall,
        )
        print(rec.json_line())
    else:
        print(f"sigma_min {_fmt(result.sigma_min)}")
        print(f"gap {_fmt(result.gap)}")
        print(f"iters {result.iters}")
        print(f"converged {'true' if result.converged else 'false'}")
        print(f"wall_time_seconds {_fmt(wall)}")
    return 0 if result.converged else 2


def _cmd_bench(args) -> int:
    try:
        ns = [int(tok) for tok in args.n.split(",") if tok]
    except ValueError:
        raise ValueError(f"could not parse --n list '{args.n}'") from None
    if not ns or any(n < 1 for n in ns):
        raise ValueError("--n entries must be positive integers")
    cap = args.cap
    if any(n > cap for n in ns):
        raise ValueError(
            f"requested n exceeds the desk-scale cap of {cap}; override with --cap at your own risk"
        )
    if args.trials < 1:
        raise ValueError("--trials must be positive")
    rows: list[RunRecord] = []
    summaries = []
    all_converged = True
    for n in ns:
        times = []
        for trial in range(args.trials):
            rng = SplitMix64(child_seed(args.seed, n, trial))
            a = rng.gaussian_matrix((n, n))
            c = rng.gaussian_matrix((n, args.m))
            cone = cone_h(n, ineq=c)
            t0 = time.perf_counter()
            result = solve(a, cone)
            wall = time.perf_counter() - t0
            all_converged &= result.converged
            times.append(wall)
            rows.append(
                RunRecord(
                    instance_id=f"bench-n{n}-t{trial}",
                    n=n,
                    d=n,
                    m=args.m,
                    seed=args.seed,
                    sigma_min=result.sigma_min,
                    gap=result.gap,
                    iters=result.iters,
                    converged=result.converged,
                    wall_time_seconds=0.0 if args.zero_time else wall,
                )
            )
        t = np.array(times)
        summaries.append(
            f"# n={n} wall_time mean={t.mean():.6g} median={np.median(t):.6g} "
            f"min={t.min():.6g} max={t.max():.6g}"
        )
    csv_text = "\n".join([CSV_HEADER] + [r.csv_row() for r in rows])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text + "\n")
        for line in summaries:
            print(line)
    else:
        print(csv_text)
        for line in summaries:
            print(line)
    return 0 if all_converged else 2


def _cmd_polar(args) -> int:
    cone = load_cone_file(args.cone)
    ph = polar_h(cone)
    pg = polar_g(cone)
    print("# polar half-space form")
    print(format_cone_h(ph))
    print("# polar generator form")
    print(format_cone_g(pg))
    if pg.n_gens == 0:
        print("# polar is {0}")
    return 0


def _cmd_oracle(args) -> int:
    a = load_matrix_file(args.matrix)
    cone = load_cone_file(args.cone)
    if args.method == "grid":
        if cone.dim > 3:
            raise ValueError("grid oracle supports only dimensions 2 and 3")
        result = grid_oracle(a, cone, resolution=args.resolution)
    else:
        result = pg_oracle(a, cone, restarts=args.restarts, max_iter=args.pg_iters, seed=args.seed)
    print(f"method {result.method}")
    print(f"value {_fmt(result.value)}")
    if result.error_bound is not None:
        print(f"error_bound {_fmt(result.error_bound)}")
    print("x_best " + " ".join(_fmt(v) for v in result.x_best))
    for key, val in sorted(result.params.items()):
        print(f"param {key} {val}")
    return 0


def _cmd_design(args) -> int:
    model = load_model_file(args.model)
    realified = realify(model)
    w0 = load_vector_file(args.w0, expected=realified.vec_dim)
    if args.eval is not None:
        delta = load_vector_file(args.eval, expected=realified.h_mat.shape[0])
        if delta.min() < 0 or delta.max() > 1:
            raise ValueError("delta entries must lie in [0, 1]")
    else:
        delta = greedy_design(realified, w0, budget=args.budget)
    objective = design_objective(realified, delta, w0)
    print(f"objective {_fmt(objective)}")
    print("delta " + " ".join(f"{v:g}" for v in delta))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conicsv",
        description="Smallest conic singular values over polyhedral cones",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sigma", help="solve one instance from matrix and cone files")
    p.add_argument("matrix")
    p.add_argument("cone")
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--json", action="store_true", help="single-line JSON record output")
    p.add_argument("--zero-time", action="store_true", help="report wall time as 0 for reproducible output")
    p.set_defaults(func=_cmd_sigma)

    p = sub.add_parser("bench", help="randomized Gaussian benchmark with dispersion CSV")
    p.add_argument("--n", required=True, help="comma-separated problem sizes")
    p.add_argument("--m", type=int, default=100, help="number of Gaussian inequality constraints")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--cap", type=int, default=DESK_SCALE_CAP, help="desk-scale size cap")
    p.add_argument("--zero-time", action="store_true", help="report wall times as 0 for reproducible output")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("polar", help="print the polar cone in both forms")
    p.add_argument("cone")
    p.set_defaults(func=_cmd_polar)

    p = sub.add_parser("oracle", help="brute-force reference solvers")
    p.add_argument("matrix")
    p.add_argument("cone")
    p.add_argument("--method", choices=["grid", "pg"], default="grid")
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--pg-iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("design", help="sensor selection demo")
    p.add_argument("model")
    p.add_argument("w0")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--greedy", action="store_true", help="run the forward-greedy heuristic")
    group.add_argument("--eval", help="evaluate the selection stored in this file")
    p.add_argument("--budget", type=int, default=1)
    p.set_defaults(func=_cmd_design)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "design" and args.greedy and args.budget < 1:
        print("error: --budget must be positive", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
