"""Command-line interface: ``neutral-spectra <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 a hypothesis of the requested
computation fails (reducible or periodic block, non-reversible kernel),
3 numerical failure (no convergence, no survivors, underflow).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .dirichlet import ordering_report
from .errors import (
    DegenerateError,
    DivisionRemainder,
    EmptyDomain,
    HypothesisError,
    NoConvergence,
    NoSurvivors,
    PoleError,
    ValidationError,
)
from .kernel_spec import KernelSpec, reversible_measure
from .moran import transition_matrix, verify_eigen
from .neutral_lift import lift_block, lift_full
from .poly_core import build_P
from .qsd import A2dMCSpec, enumerate_qsd, extract_blocks, yaglom_limit
from .simulate import SimConfig, sample_conditional
from .spectral import assemble_basis, truncation_norms

__all__ = ["main", "build_parser", "COMMANDS"]

COMMANDS = ("validate", "lift", "blocks", "spectrum", "dirichlet", "qsd", "yaglom",
            "simulate", "moran", "truncate-compare", "poly")

EXIT_VALIDATION = 1
EXIT_HYPOTHESIS = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _state(text: str) -> tuple[int, int]:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i,j, got {text!r}") from None
    return i, j


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="neutral-spectra", description="Spectral analysis of neutral 2-D Markov chains.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", type=Path, help="chain-spec JSON file")
    p.add_argument("--out", type=Path, help="write the artifact into this directory instead of stdout")
    p.add_argument("--tol", type=float, default=1e-10, help="residual tolerance for verdicts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--initial", type=_state)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--N", type=int)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    return p


def _need(args, name: str):
    v = getattr(args, name)
    if v is None:
        raise ValidationError(f"{args.command} requires --{name}")
    return v


def _load(args) -> io.ChainSpecFile:
    return io.load_chain_spec(_need(args, "input"))


def _kernel(args) -> KernelSpec:
    f = _load(args)
    if not isinstance(f.value, KernelSpec):
        raise ValidationError(f"{args.command} needs a one-dimensional kernel, got a {f.kind} spec")
    return f.value


def _a2dmc(args) -> A2dMCSpec:
    f = _load(args)
    if isinstance(f.value, KernelSpec):
        return extract_blocks(lift_full(f.value).pi)
    if f.kind == "moran3":
        raise ValidationError("the urn has no absorbing (0,0) structure; use the moran command")
    return f.value


def _validate(args):
    f = _load(args)
    data = {"type": f.kind, "N": f.N, "valid": True}
    if isinstance(f.value, KernelSpec):
        try:
            reversible_measure(f.value)
            data["reversible"] = True
        except HypothesisError:
            data["reversible"] = False
    elif isinstance(f.value, A2dMCSpec):
        data["hypotheses"] = f.value.hypotheses
    return "json", data


def _lift(args):
    f = _load(args)
    if f.kind == "moran3":
        m = transition_matrix(f.N)
        return "csv", io.matrix_csv(m.as_float(), m.index)
    if isinstance(f.value, KernelSpec):
        chain = lift_full(f.value)
        return "csv", io.matrix_csv(chain.pi, chain.index)
    return "csv", io.matrix_csv(f.value.pi, f.value.index)


def _blocks(args):
    spec = _kernel(args)
    degrees = [args.d] if args.d is not None else range(spec.N + 1)
    out = {}
    for d in degrees:
        if not 0 <= d <= spec.N:
            raise ValidationError(f"--d must lie in 0..{spec.N}")
        b = lift_block(spec, d)
        out[str(d)] = {"states": list(b.states), "matrix": b.matrix}
    return "json", out


def _spectrum(args):
    spec = _kernel(args)
    mu = reversible_measure(spec)
    basis = assemble_basis(spec, mu)
    res = basis.residuals(lift_full(spec).pi)
    order = sorted(range(len(basis)), key=lambda c: (-basis.eigenvalues[c], int(basis.degrees[c])))
    return "json", {
        "N": spec.N,
        "count": len(basis),
        "eigenvalues": [{"theta": float(basis.eigenvalues[c]), "d": int(basis.degrees[c]),
                         "residual": float(res[c])} for c in order],
        "max_residual": float(res.max()),
        "min_singular_value": basis.min_singular_value(),
        "residuals_ok": bool(res.max() < args.tol),
    }


def _dirichlet(args):
    return "json", ordering_report(_kernel(args)).to_dict()


def _qsd(args):
    spec = _a2dmc(args)
    e = enumerate_qsd(spec)

    def dist(q):
        return {f"{i},{j}": float(q.measure[k]) for k, (i, j) in enumerate(spec.index.states)
                if (i, j) != (0, 0)}

    return "json", {
        "theta": list(e.theta),
        "family": e.family,
        "qsds": [{"kind": q.kind, "theta": q.theta, "distribution": dist(q)} for q in e.measures()],
    }


def _yaglom(args):
    spec = _a2dmc(args)
    rep = yaglom_limit(spec, _need(args, "initial"))
    if args.fmt == "csv":
        return "csv", io.distribution_csv(rep.distribution, rep.index)
    return "json", rep.to_dict()


def _simulate(args):
    f = _load(args)
    if f.kind == "moran3":
        raise ValidationError("simulate needs a kernel or a2dmc spec")
    cfg = SimConfig(args.seed, args.trials, args.horizon, _need(args, "initial"))
    res = sample_conditional(f.value, cfg)
    if args.fmt == "csv":
        return "csv", io.distribution_csv(res.distribution, res.index)
    return "json", res.to_dict()


def _moran(args):
    N = args.N
    if N is None:
        f = _load(args)
        if f.kind != "moran3":
            raise ValidationError("moran needs --N or a moran3 spec")
        N = f.N
    if N < 2:
        raise ValidationError("--N must be at least 2")
    rep = verify_eigen(N)
    if args.fmt == "json":
        return "json", rep.to_dict()
    return "text", rep.verdict + "\n"


def _truncate_compare(args):
    spec = _kernel(args)
    mu = reversible_measure(spec)
    cuts = [args.k] if args.k is not None else range(1, spec.N)
    rows = []
    for Np in cuts:
        if not 1 <= Np < spec.N:
            raise ValidationError(f"--k (the truncation level) must lie in 1..{spec.N - 1}")
        t = truncation_norms(spec, mu, Np)
        rows.append({**t.to_dict(), "sup_block_d_ge_2": max(t.block[1:], default=0.0)})
    return "json", {"N": spec.N, "table": rows}


def _poly(args):
    d = _need(args, "d")
    if d < 0:
        raise ValidationError("--d must be nonnegative")
    P = build_P(d)
    if args.fmt == "json":
        return "json", {"d": d, "sign": P.sign, "scale_sq": P.scale_sq,
                        "core": {f"{i},{j}": c for (i, j), c in sorted(P.core.coeffs.items())}}
    return "text", f"P_{d} = {P.describe()}\n"


HANDLERS = {
    "validate": _validate,
    "lift": _lift,
    "blocks": _blocks,
    "spectrum": _spectrum,
    "dirichlet": _dirichlet,
    "qsd": _qsd,
    "yaglom": _yaglom,
    "simulate": _simulate,
    "moran": _moran,
    "truncate-compare": _truncate_compare,
    "poly": _poly,
}

EXTENSIONS = {"json": "json", "csv": "csv", "text": "txt"}


def _emit(args, kind: str, payload) -> None:
    text = io.dump_json(payload) if kind == "json" else payload
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{args.command}.{EXTENSIONS[kind]}"
    path.write_text(text)


def _fail(exc: Exception, code: int) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        kind, payload = HANDLERS[args.command](args)
        _emit(args, kind, payload)
    except HypothesisError as exc:
        return _fail(exc, EXIT_HYPOTHESIS)
    except (NoConvergence, NoSurvivors, DegenerateError, PoleError, DivisionRemainder) as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except (ValidationError, EmptyDomain) as exc:
        return _fail(exc, EXIT_VALIDATION)
    return 0


if __name__ == "__main__":
    sys.exit(main())
