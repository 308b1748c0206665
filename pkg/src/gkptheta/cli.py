"""Command-line front end.

Commands::

    gkptheta wigner  sample a state's Wigner function (csv, pgm with JSON sidecar, json summary)
    gkptheta ec      one round of error correction on a (displaced) state
    gkptheta magic   teleportation-based error correction, e.g. magic states from vacuum
    gkptheta bloch   logical Bloch vector of a state read from its sampled Wigner function
    gkptheta theta   values of a one-dimensional theta pulse train

Windows are half-widths in units of ``sqrt(pi)``. Exit codes: 0 ok, 2 invalid request,
3 physically inadmissible request, 4 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import GKPError, InvalidSpecError, PhysicsError, UnphysicalEnvelopeError
from .gkp_ec import AncillaSpec, decode_syndrome, ec_ideal, ec_map, teleport_ec, teleport_shift
from .gkp_states import (
    Bloch4,
    EnvelopeClass,
    NoiseSpec,
    approx_state_wigner,
    bloch_from_wigner,
    boundary_fraction,
    check_envelope_physical,
    min_envelope,
    pauli_expectations,
    vacuum_wigner,
    with_envelope,
)
from .phase_plane import TRACE_CONVENTION, Field2D, grid_window, sample_field
from .theta_core import DEFAULT_REL_TOL, SQRT_PI, Theta1DSpec, theta_eval_1d

_S3 = 1 / math.sqrt(3)
_S2 = 1 / math.sqrt(2)
PRESETS = {
    "zero": (0.0, 0.0, 1.0),
    "one": (0.0, 0.0, -1.0),
    "plus": (1.0, 0.0, 0.0),
    "minus": (-1.0, 0.0, 0.0),
    "plusi": (0.0, 1.0, 0.0),
    "minusi": (0.0, -1.0, 0.0),
    "plusT": (_S3, _S3, _S3),
    "plusH": (_S2, 0.0, _S2),
}


# ---------------------------------------------------------------------------
# building inputs


def _noise(args) -> NoiseSpec:
    if args.delta2 is not None or args.kappa2 is not None:
        if args.delta2 is None or args.kappa2 is None:
            raise InvalidSpecError("--delta2 and --kappa2 go together")
        return NoiseSpec(args.delta2, args.kappa2, args.phi)
    return NoiseSpec(args.beta, args.beta, args.phi)


def _state_label(args) -> str:
    if getattr(args, "bloch", None) is not None:
        return "bloch(" + ",".join(f"{x:.17g}" for x in args.bloch) + ")"
    return args.preset


def build_state(args):
    """The requested state: a Gaussian vacuum or a finite-energy GKP state."""
    if args.bloch is None and args.preset == "vacuum":
        return vacuum_wigner(), None
    vec = tuple(args.bloch) if args.bloch is not None else PRESETS[args.preset]
    noise = _noise(args)
    state = approx_state_wigner(Bloch4.from_vector(vec), noise, allow_high_noise=args.allow_high_noise)
    scale = getattr(args, "envelope_scale", 1.0)
    if scale != 1.0:
        env_min = min_envelope(noise.sigma_spike)
        env = scale * env_min
        cls = check_envelope_physical(_gaussian(env), env_min)
        if cls is EnvelopeClass.UNPHYSICAL:
            raise UnphysicalEnvelopeError(f"envelope {scale:g} x minimum is narrower than any physical state allows")
        state = with_envelope(state, env)
    return state, noise


def _gaussian(cov):
    from .gaussian import Gaussian2D

    return Gaussian2D.centered(cov)


def sample_displaced(obj, window, resolution, displacement=(0.0, 0.0)) -> Field2D:
    """Sample ``W(x - d)``, the Wigner function after displacing the state by ``d``."""
    d = np.asarray(displacement, dtype=float)
    q0, q1, p0, p1 = window
    shifted = sample_field(obj, (q0 - d[0], q1 - d[0], p0 - d[1], p1 - d[1]), resolution)
    return Field2D(window, shifted.values)


def _grid(args):
    if args.window <= 0 or args.res <= 1:
        raise InvalidSpecError("window and resolution must be positive")
    return grid_window(args.window * SQRT_PI), (args.res, args.res)


def auto_window(noise: NoiseSpec | None, sds: float = 6.0, nodes_per_cell: int = 8):
    """A window covering ``sds`` envelope deviations whose nodes include every half-lattice point."""
    if noise is None:
        half_cells = 8
    else:
        sd = math.sqrt(np.linalg.eigvalsh(noise.sigma_env)[-1])
        half_cells = max(8, math.ceil(sds * sd / (SQRT_PI / 2)))
    half = half_cells * SQRT_PI / 2
    return grid_window(half), 2 * half_cells * nodes_per_cell // 2


def _ancilla(text: str) -> AncillaSpec:
    if text == "ideal":
        return AncillaSpec.ideal()
    try:
        beta = float(text)
    except ValueError:
        raise InvalidSpecError(f"--ancilla takes 'ideal' or a noise level beta, got {text!r}") from None
    return AncillaSpec.approximate(beta)


# ---------------------------------------------------------------------------
# output


def _metadata(args, window, resolution) -> dict:
    return {
        "command": args.command,
        "version": __version__,
        "window": [float(x) for x in window],
        "window_units": "absolute quadrature values",
        "resolution": [int(x) for x in resolution],
        "truncation_rel_tol": DEFAULT_REL_TOL,
        "trace_convention": TRACE_CONVENTION,
    }


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def bloch_record(r) -> dict:
    r = [float(x) for x in r]
    normalized = [x / r[0] for x in r[1:]] if r[0] != 0 else None
    return {"r0": r[0], "r1": r[1], "r2": r[2], "r3": r[3], "normalized": normalized}


def field_csv(f: Field2D) -> str:
    lines = ["q,p,w"]
    q, p = f.q_axis, f.p_axis
    for i in range(len(q)):
        qi = f"{q[i]:.17g}"
        lines.extend(f"{qi},{p[j]:.17g},{f.values[i, j]:.17g}" for j in range(len(p)))
    return "\n".join(lines) + "\n"


def field_pgm(f: Field2D) -> tuple[bytes, dict]:
    """8-bit PGM on a symmetric scale about zero: gray = 127.5 (1 + w / max|w|).

    Image rows run from the largest ``p`` (top) to the smallest; columns follow ``q``.
    """
    scale = float(np.abs(f.values).max())
    norm = f.values / scale if scale > 0 else np.zeros_like(f.values)
    gray = np.clip(np.rint(127.5 * (1 + norm)), 0, 255).astype(np.uint8)
    img = gray.T[::-1]
    h, w = img.shape
    data = f"P5\n{w} {h}\n255\n".encode() + img.tobytes()
    sidecar = {
        "scale_max_abs_w": scale,
        "mapping": "gray = round(127.5 * (1 + w / scale)), 0 is black",
        "rows": "p descending from top",
        "columns": "q ascending",
    }
    return data, sidecar


def _emit(args, field: Field2D | None, record: dict) -> None:
    fmt = args.format
    out = Path(args.out) if args.out else None
    if fmt == "json":
        text = _dump_json(record)
        if out:
            out.write_text(text)
        else:
            sys.stdout.write(text)
        return
    if field is None:
        raise InvalidSpecError(f"{args.command} produces no field here; use --format json")
    if fmt == "csv":
        text = field_csv(field)
        if out:
            out.write_text(text)
            out.with_suffix(out.suffix + ".json").write_text(_dump_json(record))
        else:
            sys.stdout.write(text)
        return
    if fmt == "pgm":
        if out is None:
            raise InvalidSpecError("--format pgm needs --out")
        data, side = field_pgm(field)
        out.write_bytes(data)
        out.with_suffix(".json").write_text(_dump_json({**record, "pgm": side}))
        return
    raise InvalidSpecError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# commands


def cmd_wigner(args) -> None:
    state, noise = build_state(args)
    window, res = _grid(args)
    field = sample_displaced(state, window, res, args.displace)
    record = _metadata(args, window, res)
    record.update(state=_state_label(args), displacement=list(args.displace), **_noise_record(noise))
    record["field_max"] = float(field.values.max())
    record["field_min"] = float(field.values.min())
    record["field_integral"] = float(field.values.sum() * field.cell_area)
    _emit(args, field, record)


def _noise_record(noise: NoiseSpec | None) -> dict:
    if noise is None:
        return {"noise": None}
    return {"noise": {"Delta2": noise.Delta2, "kappa2": noise.kappa2, "phi": noise.phi}}


def cmd_ec(args) -> None:
    state, noise = build_state(args)
    window, res = _grid(args)
    field = sample_displaced(state, window, res, args.displace)
    anc = _ancilla(args.ancilla)
    syn = decode_syndrome(*args.m)
    record = _metadata(args, window, res)
    record.update(
        state=_state_label(args),
        displacement=list(args.displace),
        ancilla=args.ancilla,
        syndrome={"m": list(syn.m), "nearest": list(syn.nearest), "remainder": list(syn.remainder)},
        **_noise_record(noise),
    )
    if anc.is_ideal:
        bloch, _ = ec_ideal(field, syn)
        record["bloch"] = bloch_record(bloch.r)
        _emit(args, None, record)
        return
    out, prob = ec_map(field, anc, syn, order=args.order)
    record["order"] = args.order
    record["probability_density"] = prob
    record["output_window"] = [float(x) for x in out.window]
    record["bloch"] = bloch_record(_bloch_quiet(out, record))
    _emit(args, out, record)


# share of |W| on the window edge above which a readout is flagged as truncated
TRUNCATION_TOL = 1e-6


def _flag_truncation(field: Field2D, record: dict) -> None:
    frac = boundary_fraction(field)
    record["boundary_fraction"] = frac
    record["truncated"] = frac > TRUNCATION_TOL
    if record["truncated"]:
        print(
            f"warning: {frac:.2g} of the output lies on the window edge; "
            "the Bloch vector is biased, widen --window",
            file=sys.stderr,
        )


def _bloch_quiet(field: Field2D, record: dict):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = pauli_expectations(field, check_coverage=False)
    _flag_truncation(field, record)
    return r


def cmd_magic(args) -> None:
    state, noise = build_state(args)
    window, res = _grid(args)
    field = sample_field(state, window, res)
    anc = _ancilla(args.ancilla)
    record = _metadata(args, window, res)
    record.update(
        input=_state_label(args),
        ancilla=args.ancilla,
        m=list(args.m),
        applied_shift=[float(x) for x in teleport_shift(args.m)],
        **_noise_record(noise),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bloch, out = teleport_ec(field, args.m, anc)
    if not anc.is_ideal:
        _flag_truncation(out, record)
    record["bloch"] = bloch_record(bloch.r)
    _emit(args, None if anc.is_ideal else out, record)


def cmd_bloch(args) -> None:
    state, noise = build_state(args)
    if args.window is None:
        window, n = auto_window(noise)
        res = (n, n)
    else:
        window, res = _grid(args)
    field = sample_field(state, window, res)
    bloch = bloch_from_wigner(field, noise)
    record = _metadata(args, window, res)
    record.update(state=_state_label(args), bloch=bloch_record(bloch.r), **_noise_record(noise))
    _emit(args, None, record)


def cmd_theta(args) -> None:
    spec = Theta1DSpec.pulse_train(args.period * (SQRT_PI if args.sqrt_pi_units else 1.0), args.sigma2, args.v1, args.v2)
    z = np.asarray(args.z, dtype=float)
    vals = np.atleast_1d(theta_eval_1d(spec, z))
    record = {
        "command": "theta",
        "version": __version__,
        "period": float(spec.period),
        "sigma2": args.sigma2,
        "v1": str(spec.v1),
        "v2": str(spec.v2),
        "truncation_rel_tol": DEFAULT_REL_TOL,
        "values": [{"z": float(zz), "re": float(v.real), "im": float(v.imag)} for zz, v in zip(z, vals)],
    }
    if args.format != "json":
        raise InvalidSpecError("theta writes json only")
    _emit(args, None, record)


# ---------------------------------------------------------------------------
# parser


def _add_state_args(p, default_preset="zero", presets=None):
    names = sorted(PRESETS) + ["vacuum"] if presets is None else presets
    p.add_argument("--preset", choices=names, default=default_preset, help="named input state")
    p.add_argument("--input", dest="preset", choices=names, help="alias of --preset")
    p.add_argument("--bloch", type=float, nargs=3, metavar=("X", "Y", "Z"), help="logical Bloch 3-vector")
    p.add_argument("--beta", type=float, default=0.04, help="symmetric noise Delta^2 = kappa^2")
    p.add_argument("--delta2", type=float, help="position spike width (overrides --beta)")
    p.add_argument("--kappa2", type=float, help="momentum spike width (overrides --beta)")
    p.add_argument("--phi", type=float, default=0.0, help="noise rotation angle")
    p.add_argument("--envelope-scale", type=float, default=1.0, help="envelope covariance in units of the minimum")
    p.add_argument("--allow-high-noise", action="store_true", help="permit noise above the low-noise threshold")


def _add_grid_args(p, window=4.0, res=256):
    p.add_argument("--window", type=float, default=window, help="half-width in units of sqrt(pi)")
    p.add_argument("--res", type=int, default=res, help="grid points per axis")


def _add_output_args(p, default="json"):
    p.add_argument("--format", choices=["csv", "pgm", "json"], default=default)
    p.add_argument("--out", help="output path (stdout when omitted, except pgm)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkptheta", description="GKP states and error correction in phase space.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wigner", help="sample a Wigner function")
    _add_state_args(p)
    _add_grid_args(p)
    p.add_argument("--displace", type=float, nargs=2, default=[0.0, 0.0], metavar=("DQ", "DP"))
    _add_output_args(p, default="csv")
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("ec", help="one round of error correction")
    _add_state_args(p)
    _add_grid_args(p)
    p.add_argument("--displace", type=float, nargs=2, default=[0.0, 0.0], metavar=("DQ", "DP"))
    p.add_argument("--m", type=float, nargs=2, default=[0.0, 0.0], metavar=("MQ", "MP"), help="homodyne outcomes")
    p.add_argument("--ancilla", default="ideal", help="'ideal' or the ancilla noise level beta")
    p.add_argument("--order", choices=["q-then-p", "p-then-q"], default="q-then-p")
    _add_output_args(p)
    p.set_defaults(func=cmd_ec)

    p = sub.add_parser("magic", help="teleportation-based error correction")
    _add_state_args(p, default_preset="vacuum")
    _add_grid_args(p)
    p.add_argument("--m", type=float, nargs=2, default=[0.0, 0.0], metavar=("MQ", "MP"), help="heterodyne outcome")
    p.add_argument("--ancilla", default="ideal", help="'ideal' or the ancilla noise level beta")
    _add_output_args(p)
    p.set_defaults(func=cmd_magic)

    p = sub.add_parser("bloch", help="Bloch vector read from a sampled Wigner function")
    _add_state_args(p)
    p.add_argument("--window", type=float, default=None, help="half-width in units of sqrt(pi) (auto when omitted)")
    p.add_argument("--res", type=int, default=256)
    _add_output_args(p)
    p.set_defaults(func=cmd_bloch)

    p = sub.add_parser("theta", help="one-dimensional theta pulse train values")
    p.add_argument("--period", type=float, required=True)
    p.add_argument("--sqrt-pi-units", action="store_true", help="period is given in units of sqrt(pi)")
    p.add_argument("--sigma2", type=float, required=True, help="pulse variance")
    p.add_argument("--v1", default="0", help="characteristic v1 (fraction like 1/2)")
    p.add_argument("--v2", default="0", help="characteristic v2 (fraction like 1/2)")
    p.add_argument("--z", type=float, nargs="+", required=True)
    _add_output_args(p)
    p.set_defaults(func=cmd_theta)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "theta":
        from fractions import Fraction

        try:
            args.v1, args.v2 = Fraction(args.v1), Fraction(args.v2)
        except (ValueError, ZeroDivisionError):
            print("error: characteristics must be rationals like 1/2", file=sys.stderr)
            return InvalidSpecError.exit_code
    try:
        args.func(args)
    except GKPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
