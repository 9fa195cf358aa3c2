"""Command-line interface: ``hyperfact <command> ...``.

Matrices are exchanged as JSON documents

    {"format": 1, "rows": r, "cols": c, "data": [[re, im], ...]}

with entries in row-major order.  Every command prints a report listing
the claims it checked; the exit status is 0 when every claim passes, 1 on a
negative verdict, 2 on unusable input and 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dilate import dilation_residuals, douglas_dilation
from .errors import (
    ClaimError,
    ConvergenceError,
    DimensionError,
    HyperfactError,
    IllConditionedError,
    InconsistencyError,
    NotPSDError,
    PreconditionError,
)
from .factors import check_fm, make_pair, pair_defect, szego_counterexample, szego_min_eigenvalue
from .generators import generate_fm_pair
from .hyper import classify, hereditary_k_inverse
from .matcore import PSD_TOL, as_cmatrix, opnorm
from .verify import VERIFY_TOL, verify_factorization

EXIT_PASS, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
TOL_ENV = "HYPERFACT_TOL"
FORMAT_VERSION = 1


class InputError(HyperfactError):
    """Malformed or unreadable input."""


# ---------------------------------------------------------------- matrix files

def matrix_to_document(a: np.ndarray, **meta) -> dict:
    a = np.asarray(a, dtype=complex)
    doc = {"format": FORMAT_VERSION, "rows": int(a.shape[0]), "cols": int(a.shape[1])}
    doc.update(meta)
    doc["data"] = [[float(z.real), float(z.imag)] for z in a.ravel()]
    return doc


def write_matrix(path, a: np.ndarray, **meta) -> None:
    """Write ``a`` as a matrix file; floats use the shortest round-trip repr."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"matrix files hold non-empty 2-D arrays, got shape {a.shape}")
    text = json.dumps(matrix_to_document(a, **meta), indent=None, separators=(",", ":"))
    Path(path).write_text(text + "\n")


def parse_matrix(text: str, source: str = "<string>") -> tuple[np.ndarray, dict]:
    """Parse a matrix document, returning the array and any extra header fields."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{source}: top level must be an object")
    if doc.get("format") != FORMAT_VERSION:
        raise InputError(f"{source}: field 'format' must be {FORMAT_VERSION}, got {doc.get('format')!r}")
    for key in ("rows", "cols"):
        val = doc.get(key)
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise InputError(f"{source}: field '{key}' must be a positive integer, got {val!r}")
    rows, cols = doc["rows"], doc["cols"]
    data = doc.get("data")
    if not isinstance(data, list):
        raise InputError(f"{source}: field 'data' must be a list of [re, im] pairs")
    if len(data) != rows * cols:
        raise InputError(f"{source}: field 'data' has {len(data)} entries, expected {rows}x{cols}")
    out = np.empty(rows * cols, dtype=complex)
    for idx, entry in enumerate(data):
        where = f"{source}: data[{idx}] (row {idx // cols}, col {idx % cols})"
        if (not isinstance(entry, list) or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
            raise InputError(f"{where}: expected [re, im], got {entry!r}")
        if not all(math.isfinite(x) for x in entry):
            raise InputError(f"{where}: non-finite value {entry!r}")
        out[idx] = complex(entry[0], entry[1])
    meta = {k: v for k, v in doc.items() if k not in ("format", "rows", "cols", "data")}
    return out.reshape(rows, cols), meta


def read_matrix(path) -> tuple[np.ndarray, dict, str]:
    """Read a matrix file; returns the array, extra header fields and the sha256 of the bytes."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 text") from exc
    arr, meta = parse_matrix(text, str(path))
    return arr, meta, hashlib.sha256(raw).hexdigest()


# ---------------------------------------------------------------- reports

@dataclass
class Claim:
    name: str
    anchor: str
    verdict: str
    value: object = None


@dataclass
class Report:
    command: str
    argv: list[str]
    parameters: dict = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    claims: list[Claim] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)
    error: dict | None = None
    exit_status: int = EXIT_PASS

    def claim(self, name: str, anchor: str, ok: bool, value=None) -> bool:
        self.claims.append(Claim(name, anchor, "pass" if ok else "fail", _jsonable(value)))
        return ok

    def residual(self, name: str, anchor: str, value: float, tol: float) -> bool:
        return self.claim(name, anchor, bool(value <= tol), {"residual": value, "tol": tol})

    def finish(self) -> int:
        if self.error is None:
            ok = all(c.verdict == "pass" for c in self.claims)
            self.exit_status = EXIT_PASS if ok else EXIT_NEGATIVE
        return self.exit_status

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        for key, val in self.parameters.items():
            lines.append(f"  {key} = {val}")
        for path, digest in self.inputs.items():
            lines.append(f"input {path}: sha256 {digest}")
        lines.extend(self.summary)
        for c in self.claims:
            lines.append(f"[{c.verdict.upper():4}] {c.name} ({c.anchor}): {_short(c.value)}")
        for key, val in self.results.items():
            lines.append(f"{key}: {_short(val)}")
        if self.error is not None:
            lines.append(f"error ({self.error['kind']}): {self.error['message']}")
        lines.append(f"exit status: {self.exit_status}")
        return "\n".join(lines)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(value)]
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _short(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, dict):
        return ", ".join(f"{k}={_short(v)}" for k, v in value.items())
    return json.dumps(value) if isinstance(value, list) else str(value)


def _cert_value(cert) -> dict:
    return {"min_eigenvalue": cert.min_eigenvalue, "tolerance": cert.tolerance_used,
            "scale": cert.scale}


def _matrix_rows(a: np.ndarray) -> list:
    """Readable nested list; real when the imaginary part vanishes."""
    if np.allclose(a.imag, 0.0, atol=0.0):
        return a.real.tolist()
    return _jsonable(a)


# ---------------------------------------------------------------- commands

def _load_square(report: Report, path: str, name: str) -> np.ndarray:
    arr, _, digest = read_matrix(path)
    report.inputs[path] = digest
    if arr.shape[0] != arr.shape[1]:
        raise InputError(f"{path}: {name} must be square, got {arr.shape[0]}x{arr.shape[1]}")
    return arr


def cmd_classify(args, report: Report) -> None:
    t = _load_square(report, args.matrix, "T")
    m = args.m_max
    rep = classify(t, m, args.tol)
    hyper = rep.is_hypercontraction(m)
    report.claim("contraction", "||T|| <= 1", rep.is_contraction, {"norm": rep.norm})
    for n, cert in rep.certificates.items():
        report.claim(f"order {n} positive", f"K_{n}(T,T*) >= 0", cert.is_psd, _cert_value(cert))
    report.summary.append(f"{m}-hypercontraction: {'yes' if hyper else 'no'}, "
                          f"pure: {'yes' if rep.is_pure else 'no'}")
    if not hyper:
        worst = min(rep.certificates.values(), key=lambda c: c.min_eigenvalue)
        report.summary.append(f"witness eigenvalue: {worst.min_eigenvalue:.6g}")
    report.results.update(rep.to_dict())


def cmd_check_fm(args, report: Report) -> None:
    t1 = _load_square(report, args.t1, "T1")
    t2 = _load_square(report, args.t2, "T2")
    if t1.shape != t2.shape:
        raise InputError(f"factors have different sizes {t1.shape} and {t2.shape}")
    pair = make_pair(t1, t2, args.tol, check=False)
    fm = check_fm(pair, args.m, args.tol)
    report.claim("factors contractive", "||Ti|| <= 1", fm.factors_contractive,
                 {"norms": list(fm.factor_norms)})
    for i, cert in enumerate(fm.pair_defects_psd, start=1):
        report.claim(f"pair defect {i} positive", f"D^2_(m,T,T{i}) >= 0", cert.is_psd,
                     _cert_value(cert))
    report.summary.append(f"member of F_{args.m}: {'yes' if fm.is_member else 'no'}")
    failing = fm.failing_certificate()
    if failing is not None:
        i, cert = failing
        report.results["failing_certificate"] = {"defect": i, **cert.to_dict()}
    for i, mat in enumerate(fm.defect_matrices, start=1):
        report.results[f"pair_defect_{i}"] = _matrix_rows(mat)
    report.results["commutator_norm"] = fm.commutator_norm


def cmd_dilate(args, report: Report) -> None:
    t = _load_square(report, args.matrix, "T")
    res_tol = args.residual_tol
    if args.reload:
        d = Path(args.reload)
        bergman, meta, digest = read_matrix(d / "pi.json")
        report.inputs[str(d / "pi.json")] = digest
        degree = int(meta.get("degree", -1))
        m = int(meta.get("order", args.m))
        if degree < 0:
            raise InputError(f"{d / 'pi.json'}: missing 'degree' header field")
        n = t.shape[0]
        if (d / "q.json").exists():
            q, _, dq = read_matrix(d / "q.json")
            w, _, dw = read_matrix(d / "w.json")
            report.inputs[str(d / "q.json")] = dq
            report.inputs[str(d / "w.json")] = dw
        else:
            q, w = np.zeros((n, n), dtype=complex), np.zeros((0, 0), dtype=complex)
        residuals = dilation_residuals(t, m, bergman, q, w, degree, args.tol)
    else:
        pack = douglas_dilation(t, args.m, args.degree, args.tol)
        degree, residuals = pack.degree, dict(pack.residuals)
        report.parameters["degree"] = degree
        out = Path(args.out) if args.out else None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            if pack.bergman.size:
                write_matrix(out / "pi.json", pack.bergman, degree=degree, order=args.m,
                             block_dim=pack.block_dim)
            for name in ("q.json", "w.json"):
                (out / name).unlink(missing_ok=True)
            if pack.r_dim:
                write_matrix(out / "q.json", pack.q)
                write_matrix(out / "w.json", pack.w)
        report.results["residual_space_dim"] = pack.r_dim
        report.results["isometry_defect"] = pack.canonical.isometry_defect
        if pack.r_dim:
            report.results["q"] = _matrix_rows(pack.q)
            report.results["w"] = _matrix_rows(pack.w)
    anchors = {
        "isometry": "Pi* Pi = I",
        "intertwine_bergman": "M_z* Pi_V = Pi_V T*",
        "intertwine_residual_space": "W* Q = Q T*",
        "compression": "Pi* (M_z + W) Pi = T",
        "w_unitarity": "W* W = I",
        "fixed_point": "T Q^2 T* = Q^2",
        "douglas": "X* Q = Q T*",
    }
    for key, val in residuals.items():
        report.residual(key, anchors.get(key, key), val, res_tol)


def cmd_factorize(args, report: Report) -> None:
    t1 = _load_square(report, args.t1, "T1")
    t2 = _load_square(report, args.t2, "T2")
    pair = make_pair(t1, t2, args.tol)
    fm = check_fm(pair, args.m, args.tol)
    if not report.claim(f"pair in F_{args.m}", "D^2_(m,T,Ti) >= 0", fm.is_member,
                        {"min_eigenvalues": [c.min_eigenvalue for c in fm.pair_defects_psd]}):
        report.summary.append("precondition failed: the pair is not a member, nothing to factorize")
        return
    rep = verify_factorization(pair, args.m, args.degree, args.residual_tol, args.tol,
                               args.ancilla_dim)
    report.parameters["degree"] = rep.degree
    for key, val in rep.residuals.items():
        report.residual(key, key.replace("_", " "), val, args.residual_tol)
    report.results.update(rep.observations)
    report.summary.append(f"factorization verified: {'yes' if rep.passed else 'no'}")


def cmd_generate(args, report: Report) -> None:
    gen = generate_fm_pair(args.seed, args.base_dim, args.m, n_points=args.points,
                           unitary_dim=args.unitary_dim, full_space=args.full_space,
                           degree=args.degree, tol=args.tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "t1.json", gen.pair.t1)
    write_matrix(out / "t2.json", gen.pair.t2)
    fm = check_fm(gen.pair, args.m, args.tol)
    report.claim(f"generated pair in F_{args.m}", "D^2_(m,T,Ti) >= 0", fm.is_member,
                 {"min_eigenvalues": [c.min_eigenvalue for c in fm.pair_defects_psd]})
    report.results.update({"dim": gen.pair.dim, "model_degree": gen.degree,
                           "attempts": gen.attempts, "t1": str(out / "t1.json"),
                           "t2": str(out / "t2.json")})


def cmd_counterexample(args, report: Report) -> None:
    r, a, b = args.r, args.a, args.b
    pair, closed = szego_counterexample(r, a, b, args.tol)
    t_r = np.array([[0, r], [0, 0]], dtype=complex)
    hyp = classify(t_r, 2, args.tol)
    k2 = hereditary_k_inverse(t_r, 2)
    report.claim("T_r is a 2-hypercontraction", "K_2(T_r,T_r*) >= 0", hyp.is_hypercontraction(2),
                 _cert_value(hyp.certificates[2]))
    report.claim("S is a contraction", "||S|| <= 1", opnorm(pair.t2) <= 1 + args.tol,
                 {"norm": opnorm(pair.t2)})
    report.claim("T_r S^-1 is a contraction", "||T_r S^-1|| <= 1", opnorm(pair.t1) <= 1 + args.tol,
                 {"norm": opnorm(pair.t1)})
    computed = pair_defect(pair, 2, 2)
    report.residual("second pair defect matches closed form",
                    "K_1(T) - S K_1(T) S* = closed form", opnorm(computed - closed), 1e-12)
    fm = check_fm(pair, 2, args.tol)
    oracle = szego_min_eigenvalue(r, a, b)
    report.residual("minimum eigenvalue matches 2x2 oracle", "closed-form root",
                    abs(fm.pair_defects_psd[1].min_eigenvalue - oracle), 1e-10)
    report.summary.append(f"member of F_2: {'yes' if fm.is_member else 'no'}")
    report.results.update({
        "k2_min_eigenvalue": float(np.linalg.eigvalsh(k2)[0]),
        "second_pair_defect": _matrix_rows(closed),
        "second_pair_defect_min_eigenvalue": oracle,
        "first_pair_defect_min_eigenvalue": fm.pair_defects_psd[0].min_eigenvalue,
        "t1": _matrix_rows(pair.t1),
        "s": _matrix_rows(pair.t2),
    })


# ---------------------------------------------------------------- plumbing

def _default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw == "":
        return PSD_TOL
    try:
        val = float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not (val > 0 and math.isfinite(val)):
        raise InputError(f"{TOL_ENV} must be a positive finite number, got {raw!r}")
    return val


def _positive_float(text: str) -> float:
    val = float(text)
    if not (val > 0 and math.isfinite(val)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperfact",
                                     description="Hypercontractions and their factorizations.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=None,
                        help=f"relative positivity tolerance (default {PSD_TOL:g}, env {TOL_ENV})")
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="hypercontractivity of one operator")
    p.add_argument("matrix")
    p.add_argument("--m-max", type=int, default=2)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("check-fm", parents=[common], help="membership of a pair in F_m")
    p.add_argument("t1")
    p.add_argument("t2")
    p.add_argument("--m", type=int, default=2)
    p.set_defaults(func=cmd_check_fm)

    p = sub.add_parser("dilate", parents=[common], help="isometric dilation of an m-hypercontraction")
    p.add_argument("matrix")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--out", default=None, help="directory for pi.json, q.json, w.json")
    p.add_argument("--reload", default=None, metavar="DIR",
                   help="re-verify previously emitted files instead of recomputing")
    p.add_argument("--residual-tol", type=_positive_float, default=VERIFY_TOL)
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("factorize", parents=[common], help="verify the model of an F_m pair")
    p.add_argument("t1")
    p.add_argument("t2")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--ancilla-dim", type=int, default=0)
    p.add_argument("--residual-tol", type=_positive_float, default=VERIFY_TOL)
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("generate", parents=[common], help="random F_m pair from the model")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--base-dim", type=int, default=2)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--degree", type=int, default=None, help="model truncation degree")
    p.add_argument("--points", type=int, default=None, help="number of kernel points")
    p.add_argument("--unitary-dim", type=int, default=0)
    p.add_argument("--full-space", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("counterexample", parents=[common],
                       help="the 2x2 pair (T_r S^-1, S) outside F_2")
    p.add_argument("--r", type=float, default=1 / math.sqrt(2))
    p.add_argument("--a", type=float, default=1 / math.sqrt(2))
    p.add_argument("--b", type=float, default=0.5)
    p.set_defaults(func=cmd_counterexample)
    return parser


def _error_kind(exc: Exception) -> tuple[str, int]:
    if isinstance(exc, (InputError, DimensionError, PreconditionError)):
        return "input", EXIT_INPUT
    if isinstance(exc, ClaimError):
        return "claim", EXIT_NEGATIVE
    if isinstance(exc, (NotPSDError, IllConditionedError, ConvergenceError, InconsistencyError,
                        np.linalg.LinAlgError)):
        return "numerical", EXIT_NUMERIC
    if isinstance(exc, ValueError):
        return "input", EXIT_INPUT
    return "numerical", EXIT_NUMERIC


def run(argv: list[str] | None = None) -> tuple[Report, int]:
    """Parse ``argv``, run the command and return the report with its exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    report = Report(command=args.command, argv=argv)
    try:
        if args.tol is None:
            args.tol = _default_tol()
        report.parameters = {k: v for k, v in vars(args).items()
                             if k not in ("func", "command", "json") and v is not None}
        args.func(args, report)
    except (HyperfactError, ValueError, np.linalg.LinAlgError) as exc:
        kind, status = _error_kind(exc)
        report.error = {"kind": kind, "type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ClaimError):
            report.claim(exc.claim, exc.claim, False, getattr(exc, "certificate", None) and
                         _cert_value(exc.certificate))
        report.exit_status = status
    report.finish()
    return report, report.exit_status


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    report, status = run(argv)
    as_json = build_parser().parse_args(argv).json
    print(report.to_json() if as_json else report.to_text())
    if report.error is not None:
        print(f"hyperfact: {report.error['message']}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
