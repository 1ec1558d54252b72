"""Command-line entry point: ``cipseries {basis,project,forward,residual}``.

Every run writes CSV artifacts plus ``manifest.json`` into the output
directory (``--out``, else $CIPSERIES_OUTPUT_DIR, else run.output_dir).
CSV bodies are deterministic; the manifest timestamp is the only field that
changes between identical runs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import build_basis, gram_residual
from .config import RunConfig, parse_config
from .errors import CipError, ConfigError, DataIOError
from .galerkin import assemble_system
from .projection import (h1_projection_error, l2_projection_error, inverse_inequality_check,
                         named_function)
from .residual import (REL_THRESHOLD, MONOTONE_SLACK, decay_study, manufactured_problem,
                       solver_problem)
from .scattering import extract_cauchy_data, solve_lippmann_schwinger

OUTPUT_ENV = "CIPSERIES_OUTPUT_DIR"
TOLERANCES = {
    "orthonormality": 1e-10,
    "inverse_inequality_slack": 1e-10,
    "monotone_slack": MONOTONE_SLACK,
    "rel_residual_threshold": REL_THRESHOLD,
}

log = logging.getLogger("cipseries")


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from None
    return path


def write_field_csv(path, values, index_offset=(0, 0)):
    """Complex array (nx, ny, nk) as rows ix, iy, ik, re, im."""
    nx, ny, nk = values.shape
    rows = ((ix + index_offset[0], iy + index_offset[1], ik,
             _fmt(values[ix, iy, ik].real), _fmt(values[ix, iy, ik].imag))
            for ix in range(nx) for iy in range(ny) for ik in range(nk))
    return _write_csv(path, ("ix", "iy", "ik", "re", "im"), rows)


def read_field_csv(path, shape):
    """Inverse of ``write_field_csv`` for a block starting at index (0, 0)."""
    out = np.zeros(shape, dtype=complex)
    try:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                out[int(row["ix"]), int(row["iy"]), int(row["ik"])] = complex(float(row["re"]), float(row["im"]))
    except (OSError, KeyError, ValueError) as exc:
        raise DataIOError(f"cannot read field file {path}: {exc}") from None
    return out


def _manifest(outdir: Path, command: str, cfg: RunConfig, artifacts, extra=None):
    data = {
        "command": command,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": cfg.as_dict(),
        "tolerances": TOLERANCES,
        "artifacts": sorted(str(Path(a).name) for a in artifacts),
    }
    if extra:
        data["results"] = extra
    path = outdir / "manifest.json"
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from None


# -- subcommands ---------------------------------------------------------------

def run_basis(cfg: RunConfig, outdir: Path, args):
    basis = build_basis(cfg.band, cfg.N)
    resid = gram_residual(basis)
    arts = [
        _write_csv(outdir / "basis_coefficients.csv", ("n", "j", "c_j"),
                   ((n + 1, j, _fmt(c)) for n, e in enumerate(basis.elements)
                    for j, c in enumerate(e.coeffs))),
        _write_csv(outdir / "orthonormality.csv", ("m", "n", "residual"),
                   ((m + 1, n + 1, _fmt(resid[m, n])) for m in range(basis.N) for n in range(basis.N))),
        _write_csv(outdir / "deriv_norms.csv", ("n", "deriv_norm"),
                   ((n + 1, _fmt(x)) for n, x in enumerate(basis.deriv_norms))),
    ]
    rng = np.random.default_rng(cfg.seed)
    checks = [inverse_inequality_check(rng.standard_normal(basis.N), basis) for _ in range(100)]
    arts.append(_write_csv(outdir / "inverse_inequality.csv", ("trial", "lhs", "rhs"),
                           ((i, _fmt(a), _fmt(b)) for i, (a, b) in enumerate(checks))))
    if args.dump_system:
        system = assemble_system(basis)
        N = basis.N
        arts += [
            _write_csv(outdir / "system_D.csv", ("m", "n", "value"),
                       ((m + 1, n + 1, _fmt(system.D[m, n])) for m in range(N) for n in range(N))),
            _write_csv(outdir / "system_S.csv", ("m", "n", "re", "im"),
                       ((m + 1, n + 1, _fmt(system.S[m, n].real), _fmt(system.S[m, n].imag))
                        for m in range(N) for n in range(N))),
            _write_csv(outdir / "system_B.csv", ("m", "n", "l", "value"),
                       ((m + 1, n + 1, l + 1, _fmt(system.B[m, n, l]))
                        for m in range(N) for n in range(N) for l in range(N))),
        ]
    off = float(np.abs(resid).max())
    slack = min(b - a for a, b in checks)
    print(f"N={basis.N}  max |<Phi_m,Phi_n> - delta_mn| = {off:.3e}")
    print(f"inverse inequality: min(rhs - lhs) over 100 seeded trials = {slack:.3e}")
    return arts, {"max_orthonormality_residual": off, "inverse_inequality_min_slack": slack}


def run_project(cfg: RunConfig, outdir: Path, args):
    n_list = cfg.n_list
    basis = build_basis(cfg.band, max(n_list[-1], cfg.N))
    name = args.function or cfg.function
    try:
        f, df = named_function(name, cfg.band, basis)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rule = cfg.band.rule(max(cfg.rule_order, 2 * basis.N + 8))
    rows = [(N, _fmt(l2_projection_error(f, basis, N, rule)),
             _fmt(h1_projection_error(f, df, basis, N, rule))) for N in n_list]
    arts = [_write_csv(outdir / "project.csv", ("N", "l2_error", "h1_error"), rows)]
    for r in rows:
        print(",".join(map(str, r)))
    return arts, {"function": name}


def run_forward(cfg: RunConfig, outdir: Path, args):
    rule = cfg.band.rule(cfg.n_k)
    sol = solve_lippmann_schwinger(cfg.medium, cfg.grid, rule.nodes)
    data = extract_cauchy_data(sol)
    gy = cfg.grid.n_per_axis - 1
    arts = [
        _write_csv(outdir / "k_nodes.csv", ("ik", "k", "weight"),
                   ((i, _fmt(k), _fmt(w)) for i, (k, w) in enumerate(zip(rule.nodes, rule.weights)))),
        write_field_csv(outdir / "field_u.csv", sol.u.values),
        write_field_csv(outdir / "cauchy_g0.csv", data.g0[:, None, :], (1, gy)),
        write_field_csv(outdir / "cauchy_g1.csv", data.g1[:, None, :], (1, gy)),
    ]
    print(f"solved {len(rule.nodes)} wavenumbers with {sol.diagnostics['unknowns']} unknowns")
    return arts, {"unknowns": sol.diagnostics["unknowns"],
                  "max_linear_residual": max(sol.diagnostics["linear_residual"], default=0.0)}


def run_residual(cfg: RunConfig, outdir: Path, args):
    if cfg.source == "manufactured":
        problem = manufactured_problem(cfg.band, cfg.grid, cfg.rule_order,
                                       basis_size=max(12, cfg.n_list[-1]))
    else:
        problem = solver_problem(cfg.band, cfg.grid, cfg.medium, cfg.n_k,
                                 basis_size=max(min(cfg.n_k, 12), cfg.n_list[-1]))
    report = decay_study(problem, cfg.n_list)
    path = outdir / "residual.csv"
    try:
        path.write_text(report.to_csv())
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from None
    sys.stdout.write(report.to_csv())
    return [path], {
        "h_norm": report.h_norm,
        "tail_index": report.tail_index,
        "near_monotone": report.near_monotone(),
        "meets_threshold": report.meets_threshold(),
    }


COMMANDS = {"basis": run_basis, "project": run_project, "forward": run_forward,
            "residual": run_residual}


def _n_list(s):
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _band(s):
    try:
        lo, hi = (float(x) for x in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected K_LO,K_HI, got {s!r}") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cipseries", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="INI configuration file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--seed", type=int, help="seed for randomized checks (default 42)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("basis", help="orthonormal basis, Gram residual, derivative bound check")
    b.add_argument("--N", type=int)
    b.add_argument("--dump-system", action="store_true", help="also write D, S and B")

    pr = sub.add_parser("project", help="L2 and H1 projection errors over N")
    pr.add_argument("--function", help="gaussian | sin | in-span:M")
    pr.add_argument("--n-list", type=_n_list)

    sub.add_parser("forward", help="forward solve and Cauchy data")

    r = sub.add_parser("residual", help="decay of ||h_N - h|| over N")
    r.add_argument("--source", choices=("manufactured", "solver"))
    r.add_argument("--n-list", type=_n_list)
    r.add_argument("--grid", type=int, metavar="N_PER_AXIS")
    r.add_argument("--band", type=_band, metavar="K_LO,K_HI")
    return p


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise DataIOError(f"cannot read config {args.config}: {exc}") from None
        cfg = parse_config(text)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "N", None) is not None:
        cfg.N = args.N
    if getattr(args, "n_list", None):
        cfg.n_list = args.n_list
    if getattr(args, "source", None):
        cfg.source = args.source
    if getattr(args, "grid", None):
        cfg.n_per_axis = args.grid
    if getattr(args, "band", None):
        cfg.k_lo, cfg.k_hi = args.band
    return cfg.validate()


def dispatch(command: str, cfg: RunConfig, outdir: Path, args=None) -> int:
    args = args or argparse.Namespace(dump_system=False, function=None)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataIOError(f"cannot create {outdir}: {exc}") from None
    arts, results = COMMANDS[command](cfg, outdir, args)
    _manifest(outdir, command, cfg, arts, results)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        outdir = args.out or Path(os.environ.get(OUTPUT_ENV) or cfg.output_dir)
        return dispatch(args.command, cfg, outdir, args)
    except CipError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
