"""Command line front end.

Four subcommands:

    blockflow verify    --config cfg.json [--energy RE,IM] [--xi X] [--phi P]
    blockflow curve     --config cfg.json --xi X [--phi-steps N] [--csv F] [--svg F]
    blockflow exponents --config cfg.json --energy RE,IM [--csv F]
    blockflow bounds    --config cfg.json --energy RE,IM

The config file is a JSON object; the "model" entry is a ModelSpec
document and the remaining keys (energy, z, xi, phi, phi_steps, method,
quad_points) supply defaults that individual flags override.  Numeric
results go to stdout as JSON (or CSV where noted) so runs with the same
config and seed are byte-identical.

Exit codes: 0 all requested checks passed, 1 a check failed, 2 invalid
input (bad config, singular blocks, contour through an exponent, ...).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .bounds import check_corner_decay, dichotomy
from .chains import BlockChain, ModelSpec
from .duality import (SpectralCurve, check_duality, check_open_duality,
                      check_symmetric_duality, check_transfer_routes,
                      trace_spectral_curve)
from .exponents import (ContourTooCloseError, exponent_csv, exponent_spectrum,
                        jensen_identity_check)
from .linalg import SingularMatrixError
from .resolvent import CornerSingularError, ResolventSingularError
from .symmetry import check_symplectic, check_unit_circle_exclusion, detect_pairings
from .transfer import ProductOverflowError

SCHEMA_VERSION = 1

#: fall-back boundary point for `verify` when neither z nor xi/phi is given
DEFAULT_XI = 0.2
DEFAULT_PHI = 0.8


class InputError(ValueError):
    """Bad command line or config input (exit code 2)."""


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]))
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise InputError(f"expected RE or RE,IM, got {text!r}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("config must be a JSON object")
    return doc


def _build_chain(config: dict) -> tuple[BlockChain, dict]:
    if "model" not in config:
        raise InputError("config needs a 'model' entry")
    try:
        spec = ModelSpec.from_dict(config["model"])
        chain = spec.build()
    except (ValueError, SingularMatrixError, KeyError, TypeError) as exc:
        raise InputError(f"bad model: {exc}") from exc
    summary = spec.to_dict()
    if spec.kind == "explicit":
        summary = {"kind": "explicit", "n": chain.n, "m": chain.m}
    return chain, summary


def _resolve(args, config: dict, key: str, flag_value, convert, default=None):
    """Flag beats config beats default."""
    if flag_value is not None:
        return flag_value
    if key in config:
        raw = config[key]
        try:
            return convert(raw)
        except (TypeError, ValueError) as exc:
            raise InputError(f"config field {key!r}: {exc}") from exc
    return default


def _config_complex(raw) -> complex:
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    if isinstance(raw, (int, float)):
        return complex(raw)
    raise ValueError(f"expected a number or [re, im], got {raw!r}")


def _require_energy(args, config) -> complex:
    energy = _resolve(args, config, "energy", args.energy, _config_complex)
    if energy is None:
        raise InputError("an energy is required (--energy RE,IM or config 'energy')")
    return energy


def _jsonable(obj):
    """Recursively make obj JSON-safe; non-finite floats become sentinels."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if x == math.inf:
            return "inf"
        if x == -math.inf:
            return "neg_inf"
        return x
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _emit_json(doc: dict, path: str | None) -> None:
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# verify

def _cmd_verify(args) -> int:
    config = _load_config(args.config)
    chain, model_summary = _build_chain(config)
    energy = _require_energy(args, config)
    z = _resolve(args, config, "z", None if args.z is None else _parse_complex(args.z),
                 _config_complex)
    if z is None:
        xi = _resolve(args, config, "xi", args.xi, float, DEFAULT_XI)
        phi = _resolve(args, config, "phi", args.phi, float, DEFAULT_PHI)
        arg = chain.n * xi
        if abs(arg) > 690.0:
            raise InputError(f"n*xi = {arg:.1f} overflows z = e^(n xi + i phi); "
                             "pass z directly or shrink xi")
        z = complex(math.exp(arg) * math.cos(phi), math.exp(arg) * math.sin(phi))
    if z == 0:
        raise InputError("z must be nonzero")
    from .duality import TOL_LOG

    tol_log = TOL_LOG if args.tol_log is None else args.tol_log
    checks = []
    notices = []

    def record(report, name=None):
        doc = report.to_dict()
        if name is not None and "check" not in doc:
            doc["check"] = name
        checks.append(doc)

    try:
        record(check_transfer_routes(chain, energy))
    except (ResolventSingularError, CornerSingularError) as exc:
        notices.append(f"transfer-routes skipped: {exc}")
    except ProductOverflowError as exc:
        notices.append(f"transfer-routes skipped: {exc}")

    try:
        record(check_open_duality(chain, energy, tol_log=tol_log))
    except ProductOverflowError as exc:
        notices.append(f"open-duality skipped: {exc}")

    if chain.n >= 3:
        record(check_duality(chain, energy, z, tol_log=tol_log))
        try:
            record(check_symmetric_duality(chain, energy, z, tol_log=tol_log))
        except ProductOverflowError as exc:
            notices.append(f"symmetric-duality skipped: {exc}")
    else:
        notices.append(
            "duality and symmetric-duality skipped: at n = 2 the ring "
            "corners overlap the inner hoppings and the determinant "
            "identities are only checked for n >= 3")

    spectrum = exponent_spectrum(chain, energy)
    sum_rule = spectrum.sum_rule_value(chain)
    residual = abs(spectrum.sum - sum_rule)
    checks.append({"check": "exponent-sum-rule", "sum": spectrum.sum,
                   "expected": sum_rule, "residual": residual,
                   "tol_log": 1e-8, "passed": bool(residual <= 1e-8)})

    if chain.is_hermitian():
        record(check_symplectic(chain, energy), name="symplectic")
        if abs(complex(energy).imag) >= 1e-8:
            record(check_unit_circle_exclusion(chain, energy),
                   name="unit-circle-exclusion")
        else:
            pairing = detect_pairings(chain, energy, mode="hermitian-real-E")
            checks.append({"check": "pairing", **pairing.to_dict(),
                           "passed": not pairing.unmatched})
    else:
        notices.append("chain is not Hermitian: symplectic and pairing "
                       "checks not applicable")

    passed = all(c.get("passed", True) for c in checks)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "model": model_summary,
        "energy": [energy.real, energy.imag],
        "z": [z.real, z.imag],
        "checks": checks,
        "notices": notices,
        "passed": passed,
    }
    _emit_json(doc, args.json)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# curve

_SVG_PALETTE = ("#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#d68910",
                "#117a8b", "#a04000", "#5d6d7e")


def _curve_svg(curve: SpectralCurve) -> str:
    width, height, margin = 640, 480, 54
    pts = curve.samples
    re = pts.real.ravel()
    im = pts.imag.ravel()
    lo_x, hi_x = float(re.min()), float(re.max())
    lo_y, hi_y = float(im.min()), float(im.max())
    pad_x = 0.05 * (hi_x - lo_x or 1.0)
    pad_y = 0.05 * (hi_y - lo_y or 1.0)
    lo_x, hi_x = lo_x - pad_x, hi_x + pad_x
    lo_y, hi_y = lo_y - pad_y, hi_y + pad_y

    def sx(x):
        return margin + (x - lo_x) / (hi_x - lo_x) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - lo_y) / (hi_y - lo_y) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="14">'
        f'spectral curve, xi={curve.xi!r}, loops={curve.n_loops}</text>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="monospace" font-size="12">Re E</text>',
        f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-family="monospace" font-size="12" '
        f'transform="rotate(-90 16 {height / 2:.1f})">Im E</text>',
        f'<text x="{margin}" y="{height - margin + 16}" font-family="monospace" '
        f'font-size="10">{lo_x:.3g}</text>',
        f'<text x="{width - margin:.1f}" y="{height - margin + 16}" '
        f'text-anchor="end" font-family="monospace" font-size="10">{hi_x:.3g}</text>',
        f'<text x="{margin - 4}" y="{height - margin}" text-anchor="end" '
        f'font-family="monospace" font-size="10">{lo_y:.3g}</text>',
        f'<text x="{margin - 4}" y="{margin + 10}" text-anchor="end" '
        f'font-family="monospace" font-size="10">{hi_y:.3g}</text>',
    ]
    for s in range(pts.shape[1]):
        lid = int(curve.loop_id[s])
        color = "#999999" if lid < 0 else _SVG_PALETTE[lid % len(_SVG_PALETTE)]
        for i in range(pts.shape[0]):
            e = pts[i, s]
            parts.append(f'<circle cx="{sx(e.real):.2f}" cy="{sy(e.imag):.2f}" '
                         f'r="1.6" fill="{color}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _cmd_curve(args) -> int:
    config = _load_config(args.config)
    chain, model_summary = _build_chain(config)
    xi = _resolve(args, config, "xi", args.xi, float)
    if xi is None:
        raise InputError("curve requires --xi (or config 'xi')")
    phi_steps = _resolve(args, config, "phi_steps", args.phi_steps, int, 64)
    try:
        curve = trace_spectral_curve(chain, xi, phi_steps=phi_steps)
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    import io

    buf = io.StringIO()
    curve.to_csv(buf)
    _write_text(buf.getvalue(), args.csv)
    if args.svg is not None:
        _write_text(_curve_svg(curve), args.svg)
    if args.json is not None:
        doc = {"schema_version": SCHEMA_VERSION, "command": "curve",
               "model": model_summary, "xi": xi, "phi_steps": phi_steps,
               "n_loops": curve.n_loops, "ambiguous": curve.ambiguous,
               "notes": list(curve.notes)}
        _emit_json(doc, args.json)
    return 0


# ---------------------------------------------------------------------------
# exponents

def _cmd_exponents(args) -> int:
    config = _load_config(args.config)
    chain, model_summary = _build_chain(config)
    energy = _require_energy(args, config)
    method = _resolve(args, config, "method", args.method, str, "auto")
    spectrum = exponent_spectrum(chain, energy, method=method)
    if args.csv is not None:
        import io

        buf = io.StringIO()
        exponent_csv(spectrum, buf)
        _write_text(buf.getvalue(), args.csv)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "exponents",
        "model": model_summary,
        "energy": [energy.real, energy.imag],
        "method": spectrum.method,
        "xi": [float(x) for x in spectrum.xi],
        "sum": spectrum.sum,
        "sum_rule": spectrum.sum_rule_value(chain),
        "phase_reliable": bool(spectrum.eigenvalues.phase_reliable),
    }
    if args.jensen_xi is not None:
        quad = _resolve(args, config, "quad_points", args.quad_points, int, 256)
        report = jensen_identity_check(chain, energy, args.jensen_xi,
                                       quad_points=quad)
        doc["jensen"] = report.to_dict()
    _emit_json(doc, args.json)
    return 0


# ---------------------------------------------------------------------------
# bounds

def _cmd_bounds(args) -> int:
    config = _load_config(args.config)
    chain, model_summary = _build_chain(config)
    energy = _require_energy(args, config)
    corner = check_corner_decay(chain, energy)
    dich = dichotomy(chain, energy)
    counts_ok = (dich.count_above == chain.m and dich.count_below == chain.m
                 and dich.count_middle == 0)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "bounds",
        "model": model_summary,
        "energy": [energy.real, energy.imag],
        "corner_decay": corner.to_dict(),
        "dichotomy": {**dich.to_dict(), "split_holds": counts_ok},
        "passed": bool(corner.passed),
    }
    _emit_json(doc, args.json)
    return 0 if corner.passed else 1


# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file with a 'model' entry")
    p.add_argument("--json", metavar="FILE",
                   help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockflow",
        description="Transfer matrix identities, exponents and decay bounds "
                    "for block tridiagonal chains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the determinant identity and "
                                      "consistency checks at one (E, z)")
    _add_common(p)
    p.add_argument("--energy", metavar="RE[,IM]")
    p.add_argument("--z", metavar="RE[,IM]", help="boundary factor; defaults "
                   f"to e^(n xi + i phi) with xi={DEFAULT_XI}, phi={DEFAULT_PHI}")
    p.add_argument("--xi", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--tol-log", type=float, dest="tol_log",
                   help="override the log-modulus tolerance of the "
                        "determinant checks")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("curve", help="trace the flux loops at fixed xi")
    _add_common(p)
    p.add_argument("--xi", type=float)
    p.add_argument("--phi-steps", type=int, dest="phi_steps")
    p.add_argument("--csv", metavar="FILE", help="CSV output (default stdout)")
    p.add_argument("--svg", metavar="FILE", help="also write a scatter plot")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("exponents", help="characteristic exponents at one energy")
    _add_common(p)
    p.add_argument("--energy", metavar="RE[,IM]")
    p.add_argument("--method", choices=("auto", "cyclic", "direct"))
    p.add_argument("--csv", metavar="FILE", help="write the spectrum as CSV")
    p.add_argument("--jensen-xi", type=float, dest="jensen_xi",
                   help="also evaluate the contour identity at this xi")
    p.add_argument("--quad-points", type=int, dest="quad_points")
    p.set_defaults(func=_cmd_exponents)

    p = sub.add_parser("bounds", help="resolvent corner decay and the "
                                      "singular value dichotomy")
    _add_common(p)
    p.add_argument("--energy", metavar="RE[,IM]")
    p.set_defaults(func=_cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "energy", None) is not None:
            args.energy = _parse_complex(args.energy)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SingularMatrixError, ResolventSingularError, CornerSingularError,
            ContourTooCloseError, ProductOverflowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
