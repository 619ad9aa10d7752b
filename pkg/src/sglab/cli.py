"""Command-line front end.

Runs experiments in-process by default; with --server the same validated
request is POSTed to a running service and the response rendered through
the same serializer, so local and remote runs produce identical files.

Exit codes: 0 clean, 2 when some work units failed (partial output was
still written), 1 on configuration or transport errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import httpx
from pydantic import ValidationError

from . import __version__, experiments, output
from .errors import SglabError
from .schemas import (
    BoundsRequest,
    BoundsResponse,
    EvolveRequest,
    EvolveResponse,
    LateGapRequest,
    LateGapResponse,
    LocalizeRequest,
    LocalizeResponse,
    MidSpectrumRequest,
    MidSpectrumResponse,
    MinGapRequest,
    MinGapResponse,
    NeighborStatsRequest,
    NeighborStatsResponse,
    SpectrumRequest,
    SpectrumResponse,
)

_COMMANDS = {
    "spectrum": (SpectrumRequest, SpectrumResponse, experiments.run_spectrum),
    "min-gap": (MinGapRequest, MinGapResponse, experiments.run_min_gap),
    "bounds": (BoundsRequest, BoundsResponse, experiments.run_bounds),
    "localize": (LocalizeRequest, LocalizeResponse, experiments.run_localize),
    "theorem3": (LateGapRequest, LateGapResponse, experiments.run_late_gap),
    "evolve": (EvolveRequest, EvolveResponse, experiments.run_evolve),
    "mid-spectrum": (MidSpectrumRequest, MidSpectrumResponse,
                     experiments.run_mid_spectrum),
    "neighbor-stats": (NeighborStatsRequest, NeighborStatsResponse,
                       experiments.run_neighbor_stats),
}

# argparse namespace entries that are plumbing, not request fields
_INFRA = {"command", "out", "format", "server"}


def _grid_spec(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi:count, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi:count with numeric fields, got {text!r}") from None


def _seed_range(text: str) -> tuple[int, int]:
    first, sep, last = text.partition("..")
    try:
        if sep:
            return int(first), int(last)
        return int(first), int(first)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected A..B or a single seed, got {text!r}") from None


def _n_list(text: str) -> list[int]:
    try:
        return [int(piece) for piece in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated sizes, got {text!r}") from None


def _index_window(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None


def _fmt_bytes(size: float) -> str:
    for unit in ("B", "KiB", "MiB", "GiB"):
        if size < 1024.0:
            return f"{size:.0f} {unit}" if unit == "B" else f"{size:.1f} {unit}"
        size /= 1024.0
    return f"{size:.1f} TiB"


def _memory_note(n: int) -> str:
    dim = 1 << n
    return (f"cap override active: n={n}, one state vector {_fmt_bytes(dim * 8)}, "
            f"dense matrix {_fmt_bytes(float(dim) * dim * 8)}")


def _add_common(p: argparse.ArgumentParser, with_seed: bool = True) -> None:
    if with_seed:
        p.add_argument("--seed", type=int, default=None,
                       help="permutation seed (default 0)")
    p.add_argument("--perm", choices=("random", "identity"), default=None,
                   help="permutation kind (default random)")
    p.add_argument("--tol", type=float, default=None,
                   help="eigensolver tolerance")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: SGLAB_THREADS or 1)")
    p.add_argument("--force-large", dest="force", action="store_true",
                   help="override the size caps (prints a memory estimate)")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="output format (default csv)")
    p.add_argument("--server", default=None, metavar="URL",
                   help="send the request to a running service instead")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="sglab",
        description="Numerical laboratory for the adiabatic scrambled "
                    "Hamming-weight problem.",
    )
    top.add_argument("--version", action="version",
                     version=f"%(prog)s {__version__}")
    sub = top.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("spectrum", help="low eigenvalues across the schedule")
    p.add_argument("--n", type=int, required=True, help="problem size in bits")
    p.add_argument("--s-grid", type=_grid_spec, default=None, metavar="LO:HI:COUNT")
    p.add_argument("--levels", type=int, default=None,
                   help="how many levels per s (default 25)")
    _add_common(p)

    p = sub.add_parser("min-gap", help="minimum spectral gap per (n, seed)")
    p.add_argument("--n", dest="n_list", type=_n_list, required=True,
                   metavar="N[,N...]", help="problem sizes")
    p.add_argument("--seeds", type=_seed_range, default=None, metavar="A..B",
                   help="inclusive seed range (default 0..0)")
    p.add_argument("--coarse-step", type=float, default=None,
                   help="scan resolution in s (default 0.02)")
    p.add_argument("--refine-tol", type=float, default=None,
                   help="s refinement tolerance (default 1e-6)")
    _add_common(p, with_seed=False)

    p = sub.add_parser("bounds", help="variational bounds vs ground energy")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s-grid", type=_grid_spec, default=None, metavar="LO:HI:COUNT")
    _add_common(p)

    p = sub.add_parser("localize", help="ground-state localization diagnostics")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s-grid", type=_grid_spec, default=None, metavar="LO:HI:COUNT")
    _add_common(p)

    p = sub.add_parser("theorem3", help="late-schedule gap vs analytic bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s-grid", type=_grid_spec, default=None, metavar="LO:HI:COUNT")
    p.add_argument("--entropy-target", type=float, default=None,
                   help="entropy value fixing the cost cutoff (default 0.49)")
    _add_common(p)

    p = sub.add_parser("evolve", help="real-time adiabatic evolution")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--time", dest="T", type=float, required=True,
                   help="total evolution time")
    p.add_argument("--local-tol", type=float, default=None,
                   help="per-step error target (default 1e-9)")
    _add_common(p)

    p = sub.add_parser("mid-spectrum", help="levels around the middle of the stack")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s-grid", type=_grid_spec, default=None, metavar="LO:HI:COUNT")
    p.add_argument("--window", type=_index_window, default=None, metavar="LO:HI",
                   help="sorted-index range (default: 25 central levels)")
    _add_common(p)

    p = sub.add_parser("neighbor-stats",
                       help="single-flip cluster frequency vs analytic bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True, help="cluster size")
    p.add_argument("--trials", type=int, default=None,
                   help="Monte Carlo trials (default 200)")
    p.add_argument("--gamma", type=float, default=None,
                   help="set-size exponent: |M| = 2^(gamma n)")
    p.add_argument("--c", type=float, default=None,
                   help="cost cutoff: M = strings of cost <= c n")
    _add_common(p)

    return top


def _run_remote(server: str, command: str, req, resp_model):
    url = server.rstrip("/") + "/" + command
    reply = httpx.post(url, json=req.model_dump(mode="json"), timeout=None)
    if reply.status_code != 200:
        raise SglabError(f"server returned {reply.status_code}: {reply.text[:500]}")
    return resp_model.model_validate(reply.json())


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    req_model, resp_model, runner = _COMMANDS[args.command]

    fields = {k: v for k, v in vars(args).items()
              if k not in _INFRA and v is not None}
    try:
        req = req_model(**fields)
    except ValidationError as exc:
        print(f"sglab {args.command}: invalid configuration", file=sys.stderr)
        for err in exc.errors():
            where = ".".join(str(part) for part in err["loc"]) or "request"
            print(f"  {where}: {err['msg']}", file=sys.stderr)
        return 1

    if getattr(req, "force", False):
        n_max = max(req.n_list) if hasattr(req, "n_list") else req.n
        print(_memory_note(n_max), file=sys.stderr)

    try:
        if args.server:
            resp = _run_remote(args.server, args.command, req, resp_model)
        else:
            resp = runner(req)
    except SglabError as exc:
        print(f"sglab {args.command}: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"sglab {args.command}: transport error: {exc}", file=sys.stderr)
        return 1

    text = output.to_json(resp) if args.format == "json" else output.to_csv(resp)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)

    failures = getattr(resp, "failures", [])
    if failures:
        print(f"sglab {args.command}: {len(failures)} work unit(s) failed",
              file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
