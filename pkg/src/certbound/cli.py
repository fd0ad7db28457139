"""Command-line entry point: ``certbound <subcommand> [options]``.

Every run is seeded (``--seed``, default 20240601) and writes JSON or CSV to
``--output`` (stdout by default). JSON documents carry ``"schema":
"certbound/1"`` and the full run configuration; CSV files start with a
``#`` comment line holding the same information.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import _mc
from .bounds import (ghz_variation, haar_fidelity_bound_sq, observable_independent_rhs, size_bound)
from .errors import CertboundError, DivergenceError
from .husimi import k_factor_mc, sample_configs
from .observables import (fidelity_observable, randomized_overlap, shadow_overlap_observable,
                          table1_csv, table1_experiment)
from .pauli import PauliString, decompose, matrix_of, size_distribution
from .qstate import (HermitianOperator, StateVector, density_of, make_basis_state, make_ghz,
                     make_haar_state, maximally_mixed, random_density_matrix)
from .shadows import bound_confrontation, shadow_estimates, shadow_weights

SCHEMA = "certbound/1"
DEFAULT_SEED = 20240601

SUBCOMMANDS = ("size-dist", "size-bound", "haar-fidelity-scaling", "table1", "ghz-bound",
               "simulate", "confront", "kfactor")


class ConfigError(CertboundError, ValueError):
    """Malformed command-line configuration."""


@dataclass
class RunConfig:
    subcommand: str
    state_spec: str | None = None
    n_qubits: list[int] | None = None
    alpha: float | None = None
    n_samples: int | None = None
    n_unitaries: int | None = None
    n_states: int | None = None
    seed: int = DEFAULT_SEED
    output_path: str | None = None
    output_format: str = "json"
    extra: dict = field(default_factory=dict)


# -- spec parsing ----------------------------------------------------------

_ANGLE = re.compile(r"^\s*(?:(?P<num>[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*\*?\s*)?pi(?:\s*/\s*(?P<den>\d*\.?\d+))?\s*$")


def parse_angle(text: str) -> float:
    """Radians from '1.2', 'pi', '2pi', '3*pi', 'pi/2'."""
    text = str(text).strip().lower()
    m = _ANGLE.match(text)
    if m:
        num = float(m.group("num")) if m.group("num") else 1.0
        den = float(m.group("den")) if m.group("den") else 1.0
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def parse_state_spec(text: str) -> StateVector:
    """``ghz:<N>[:phi=<rad>]`` | ``haar:<N>:<seed>`` | ``basis:<bits>`` | ``file:<path>``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "ghz":
            parts = rest.split(":")
            n = int(parts[0])
            phi = 0.0
            for p in parts[1:]:
                key, _, val = p.partition("=")
                if key != "phi":
                    raise ConfigError(f"unknown ghz option {key!r}")
                phi = parse_angle(val)
            return make_ghz(n, phi)
        if kind == "haar":
            n, seed = rest.split(":")
            return make_haar_state(int(n), np.random.default_rng(int(seed)))
        if kind == "basis":
            if not rest or set(rest) - {"0", "1"}:
                raise ConfigError(f"basis spec needs a 0/1 string, got {rest!r}")
            return make_basis_state([int(b) for b in rest])
        if kind == "file":
            path = Path(rest)
            if not path.is_file():
                raise ConfigError(f"state file not found: {rest}")
            return StateVector.from_json(path.read_text())
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad state spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown state spec {text!r}")


def parse_lab_spec(text: str, psi: StateVector | None, n_qubits: int | None) -> HermitianOperator:
    """``target`` | ``mixed`` | ``depolarized:<p>`` | ``random:<seed>``."""
    n = psi.n_qubits if psi is not None else n_qubits
    if n is None:
        raise ConfigError("lab state needs --state or --n")
    kind, _, rest = text.partition(":")
    if kind == "mixed":
        return maximally_mixed(n)
    if kind == "random":
        return random_density_matrix(n, np.random.default_rng(int(rest or 0)))
    if psi is None:
        raise ConfigError(f"lab state {text!r} needs --state")
    if kind == "target":
        return density_of(psi)
    if kind == "depolarized":
        p = float(rest)
        if not 0 <= p <= 1:
            raise ConfigError("depolarizing strength must lie in [0, 1]")
        return (1 - p) * density_of(psi) + p * maximally_mixed(n)
    raise ConfigError(f"unknown lab spec {text!r}")


def build_observable(name: str, psi: StateVector, n_unitaries: int, rng) -> HermitianOperator:
    if name == "fidelity":
        return fidelity_observable(psi)
    if name == "overlap":
        return shadow_overlap_observable(psi)
    if name == "omega":
        return randomized_overlap(psi, n_unitaries, rng).operator
    if name.startswith("pauli:"):
        p = PauliString.from_label(name[6:])
        if p.n_qubits != psi.n_qubits:
            raise ConfigError("Pauli observable length does not match the state")
        return matrix_of(p)
    raise ConfigError(f"unknown observable {name!r}")


def parse_int_list(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


# -- argument parser -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="certbound", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker cap (fallback: ${_mc.THREADS_ENV})")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    for name, help_ in (("size-dist", "Pauli size distribution of an observable"),
                        ("size-bound", "size generating-function bound of an observable")):
        p = add(name, help_)
        p.add_argument("--state", required=True)
        p.add_argument("--observable", default="fidelity")
        p.add_argument("--unitaries", type=int, default=2000)

    p = add("haar-fidelity-scaling", "closed-form bound for Haar fidelity estimation vs N")
    p.add_argument("--n-max", type=int, default=10)

    p = add("table1", "statistics of t over Haar states")
    p.add_argument("--n", default="2", help="qubit counts, e.g. 2,3 or 2-4")
    p.add_argument("--states", type=int, default=None, help="Haar states per N (default: reference M)")
    p.add_argument("--unitaries", type=int, default=2000)

    p = add("ghz-bound", "observable-independent bound of GHZ vs N")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--phi", default="pi")

    p = add("simulate", "sample protocol outcomes and shadow estimates")
    p.add_argument("--state", required=True)
    p.add_argument("--lab", default="target")
    p.add_argument("--observable", default="fidelity")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--unitaries", type=int, default=2000)

    p = add("confront", "empirical alpha-norm vs size bound")
    p.add_argument("--state", required=True)
    p.add_argument("--lab", default="mixed")
    p.add_argument("--observable", default="fidelity")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--unitaries", type=int, default=2000)

    p = add("kfactor", "MC estimate of the K factor")
    p.add_argument("--state", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--lab", default="mixed")
    p.add_argument("--alpha", type=float, default=6.0)
    p.add_argument("--samples", type=int, default=100000)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fmt = args.format or ("csv" if args.subcommand in ("table1", "ghz-bound", "haar-fidelity-scaling") else "json")
    n_list = None
    if getattr(args, "n", None) is not None:
        n_list = parse_int_list(args.n) if isinstance(args.n, str) else [int(args.n)]
    extra = {k: getattr(args, k) for k in ("observable", "lab", "phi", "n_min", "n_max") if hasattr(args, k)}
    return RunConfig(
        subcommand=args.subcommand,
        state_spec=getattr(args, "state", None),
        n_qubits=n_list,
        alpha=getattr(args, "alpha", None),
        n_samples=getattr(args, "samples", None),
        n_unitaries=getattr(args, "unitaries", None),
        n_states=getattr(args, "states", None),
        seed=args.seed,
        output_path=args.output,
        output_format=fmt,
        extra=extra,
    )


# -- subcommands -----------------------------------------------------------

def _state(cfg: RunConfig) -> StateVector:
    if not cfg.state_spec:
        raise ConfigError("--state is required")
    return parse_state_spec(cfg.state_spec)


def _cmd_size(cfg: RunConfig, threads):
    psi = _state(cfg)
    rng = np.random.default_rng(cfg.seed)
    xi = build_observable(cfg.extra["observable"], psi, cfg.n_unitaries or 2000, rng)
    dec = decompose(xi)
    if cfg.subcommand == "size-dist":
        probs = size_distribution(dec).probs.tolist()
        result = {"norm_sq": dec.norm_sq, "probs": probs}
        rows = [("s", "prob")] + [(s, p) for s, p in enumerate(probs)]
    else:
        rep = size_bound(dec)
        result = rep.to_dict()
        rows = [("N", "value"), (psi.n_qubits, rep.value)]
    return result, rows


def _cmd_haar_scaling(cfg: RunConfig, threads):
    n_max = cfg.extra["n_max"]
    if n_max < 1:
        raise ConfigError("--n-max must be >= 1")
    series = []
    for n in range(1, n_max + 1):
        sq = haar_fidelity_bound_sq(n)
        series.append({"N": n, "value": math.sqrt(sq), "value_sq": float(sq),
                       "rate": math.sqrt(sq) ** (1.0 / n)})
    rows = [("N", "value", "rate")] + [(r["N"], r["value"], r["rate"]) for r in series]
    return {"series": series, "asymptotic_rate": math.sqrt(5 / 4)}, rows


def _cmd_table1(cfg: RunConfig, threads):
    from .observables import REFERENCE_T_STATS
    ns = cfg.n_qubits or [2]
    out = []
    for n in ns:
        if n < 2:
            raise ConfigError("table1 needs N >= 2")
        m = cfg.n_states or REFERENCE_T_STATS.get(n, (0, 0, 100))[2]
        out.append(table1_experiment(n, m, cfg.n_unitaries or 2000, cfg.seed + n, threads=threads))
    result = {"rows": [r.as_dict() for r in out]}
    return result, table1_csv(out)


def _cmd_ghz(cfg: RunConfig, threads):
    phi = parse_angle(cfg.extra["phi"])
    lo, hi = cfg.extra["n_min"], cfg.extra["n_max"]
    if lo < 2 or hi < lo:
        raise ConfigError("need 2 <= n-min <= n-max")
    series = []
    for n in range(lo, hi + 1):
        rep = observable_independent_rhs(make_ghz(n), ghz_variation(n, phi))
        series.append({"N": n, "value": rep.value})
    return {"phi": phi, "series": series}, [("N", "value")] + [(s["N"], s["value"]) for s in series]


def _cmd_simulate(cfg: RunConfig, threads):
    psi = _state(cfg)
    rng = np.random.default_rng(cfg.seed)
    rho = parse_lab_spec(cfg.extra["lab"], psi, None)
    xi = build_observable(cfg.extra["observable"], psi, cfg.n_unitaries or 2000, rng)
    n = sample_configs(rho, cfg.n_samples, rng, threads)
    est = shadow_estimates(shadow_weights(xi), n)
    m = _mc.Moments.of(est)
    result = {"estimate": {"value": m.mean, "std_error": m.std_error, "n_samples": m.count},
              "exact": float(np.real(np.sum(xi.entries * rho.entries.T)))}
    header = ["shot"] + [f"n{i + 1}{c}" for i in range(psi.n_qubits) for c in "xyz"] + ["estimate"]
    rows = [tuple(header)] + [(k, *n[k].ravel().tolist(), est[k]) for k in range(n.shape[0])]
    return result, rows


def _cmd_confront(cfg: RunConfig, threads):
    psi = _state(cfg)
    rng = np.random.default_rng(cfg.seed)
    rho = parse_lab_spec(cfg.extra["lab"], psi, None)
    xi = build_observable(cfg.extra["observable"], psi, cfg.n_unitaries or 2000, rng)
    rec = bound_confrontation(xi, psi, rho, cfg.alpha, cfg.n_samples, rng, threads)
    e = rec.empirical
    return rec.to_dict(), [("N", "empirical", "bound", "sigma"), (psi.n_qubits, e.value, rec.bound.value, e.std_error)]


def _cmd_kfactor(cfg: RunConfig, threads):
    psi = parse_state_spec(cfg.state_spec) if cfg.state_spec else None
    n = cfg.n_qubits[0] if cfg.n_qubits else None
    rho = parse_lab_spec(cfg.extra["lab"], psi, n)
    est = k_factor_mc(rho, cfg.alpha, cfg.n_samples, np.random.default_rng(cfg.seed), threads)
    return {"K": est.to_dict(), "reference": 2.0**rho.n_qubits}, [("value", "std_error", "n_samples"),
                                                                   (est.value, est.std_error, est.n_samples)]


_HANDLERS = {
    "size-dist": _cmd_size, "size-bound": _cmd_size, "haar-fidelity-scaling": _cmd_haar_scaling,
    "table1": _cmd_table1, "ghz-bound": _cmd_ghz, "simulate": _cmd_simulate,
    "confront": _cmd_confront, "kfactor": _cmd_kfactor,
}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def render(cfg: RunConfig, result: dict, rows) -> str:
    cfg_dict = asdict(cfg)
    if cfg.output_format == "json":
        doc = {"schema": SCHEMA, "command": cfg.subcommand, "config": cfg_dict, "result": result,
               "created": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    head = f"# {SCHEMA} {json.dumps(cfg_dict, sort_keys=True)}\n"
    if isinstance(rows, str):
        return head + rows
    return head + "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)


def run(cfg: RunConfig, threads: int | None = None) -> str:
    """Execute one configured run and return the rendered document."""
    if cfg.subcommand not in _HANDLERS:
        raise ConfigError(f"unknown subcommand {cfg.subcommand!r}")
    result, rows = _HANDLERS[cfg.subcommand](cfg, threads)
    text = render(cfg, result, rows)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    return text


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        text = run(cfg, threads=args.threads)
    except DivergenceError as exc:
        print(f"certbound: divergence: {exc}", file=sys.stderr)
        return 3
    except (CertboundError, ValueError) as exc:
        print(f"certbound: error: {exc}", file=sys.stderr)
        return 2
    if not cfg.output_path:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
