"""Batch command-line front end.

Reads a JSON model file describing the system, bath, and run parameters, and
emits deterministic CSV (trajectories) or JSON (reports) suitable for plotting
pipelines.  Exit codes: 0 success, 2 validation failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import bath as bath_mod
from . import memkernel, multitime, oracle, positivity, spectral, tcl2
from .core import apply_superop, herm_defect, herm_part, min_choi_eigenvalue, choi_rearrange

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class ValidationError(Exception):
    pass


class NumericalError(Exception):
    pass


# ---------------------------------------------------------------------------
# model-file ingestion
# ---------------------------------------------------------------------------

def _parse_complex_matrix(node, name):
    try:
        arr = np.asarray(node, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: not a numeric array of [re, im] pairs: {exc}")
    if arr.ndim != 3 or arr.shape[-1] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"{name}: expected square matrix of [re, im] pairs, got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def _require_hermitian(x, name):
    defect = herm_defect(x)
    scale = max(float(np.max(np.abs(x))), 1.0)
    if defect > 1e-10 * scale:
        raise ValidationError(f"{name}: not Hermitian, max|X - X^dag| = {defect:.6e}")
    return x


def _build_bath(node, model_dir):
    if not isinstance(node, dict) or "variant" not in node:
        raise ValidationError("bath: expected an object with a 'variant' tag")
    variant = node["variant"]
    try:
        if variant == "thermal_lorentz":
            return bath_mod.ThermalLorentz(
                gamma0=node["gamma0"],
                cutoff=node["cutoff"],
                temperature=node["temperature"],
            )
        if variant == "ou":
            return bath_mod.ExponentialOU(c=node["c"], lam=node["lam"])
        if variant == "white":
            return bath_mod.WhiteNoise(c=node["c"])
        if variant == "tabulated":
            path = node["path"]
            if not os.path.isabs(path):
                path = os.path.join(model_dir, path)
            return bath_mod.Tabulated.from_csv(path)
    except ValidationError:
        raise
    except KeyError as exc:
        raise ValidationError(f"bath: missing parameter {exc} for variant {variant!r}")
    except (ValueError, OSError) as exc:
        raise ValidationError(f"bath: {exc}")
    raise ValidationError(f"bath: unknown variant {variant!r}")


def load_model(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read model file: {exc}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file is not valid JSON (line {exc.lineno}): {exc.msg}")
    if "compose" in doc or "compose" in doc.get("run", {}):
        raise ValidationError(
            "refusing to compose Liouvillians from separate models: summing "
            "generators derived for different environments is not a valid "
            "master equation; supply a single microscopic model with all "
            "couplings instead"
        )
    if "system" not in doc or "bath" not in doc:
        raise ValidationError("model file must contain 'system' and 'bath' sections")
    sysnode = doc["system"]
    h = _require_hermitian(
        _parse_complex_matrix(sysnode.get("hamiltonian"), "system.hamiltonian"),
        "system.hamiltonian",
    )
    couplings = []
    for k, lnode in enumerate(sysnode.get("couplings", [])):
        name = f"system.couplings[{k}]"
        l = _require_hermitian(_parse_complex_matrix(lnode, name), name)
        if l.shape != h.shape:
            raise ValidationError(f"{name}: shape {l.shape} does not match Hamiltonian")
        couplings.append(l)
    bath = _build_bath(doc["bath"], os.path.dirname(os.path.abspath(path)))
    try:
        model = tcl2.SystemModel(h=h, couplings=couplings, bath=bath)
    except ValueError as exc:
        raise ValidationError(str(exc))
    return model, doc.get("run", {})


def _parse_state(node, dim, name="run.rho0"):
    if node is None:
        return np.eye(dim, dtype=complex) / dim
    rho = _parse_complex_matrix(node, name)
    _require_hermitian(rho, name)
    if abs(np.trace(rho) - 1.0) > 1e-8:
        raise ValidationError(f"{name}: trace = {np.trace(rho).real!r}, expected 1")
    return rho


def _grid(run, default_tmax=10.0, default_n=101):
    tmax = float(run.get("t_max", default_tmax))
    n = int(run.get("n_points", default_n))
    if tmax <= 0 or n < 2:
        raise ValidationError("run: need t_max > 0 and n_points >= 2")
    return np.linspace(0.0, tmax, n)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _cmat(m):
    m = np.asarray(m, dtype=complex)
    return [[_c(z) for z in row] for row in m]


def _emit(out_path, text):
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".oqsolve-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _emit_json(out_path, report):
    _emit(out_path, json.dumps(report, indent=2) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(model, run, args):
    grid = _grid(run)
    rho0 = _parse_state(run.get("rho0"), model.dim)
    mode = run.get("mode", "stationary")
    try:
        traj = tcl2.propagate(model, rho0, grid, mode=mode)
    except ValueError as exc:
        raise ValidationError(str(exc))
    d = model.dim
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = ["t"]
    for i in range(d):
        for j in range(d):
            header += [f"re_rho_{i}_{j}", f"im_rho_{i}_{j}"]
    header += ["trace", "min_eig"]
    writer.writerow(header)
    for t, rho in zip(traj.times, traj.states):
        row = [repr(float(t))]
        for i in range(d):
            for j in range(d):
                row += [repr(float(rho[i, j].real)), repr(float(rho[i, j].imag))]
        row += [
            repr(float(np.trace(rho).real)),
            repr(float(np.linalg.eigvalsh(herm_part(rho))[0])),
        ]
        writer.writerow(row)
    _emit(args.out, buf.getvalue())


def cmd_spectrum(model, run, args):
    tol = args.tol if args.tol is not None else 1e-8
    spec = spectral.perturbative_spectrum(model)
    ortho = spectral.damping_basis_orthogonality(spec)
    report = {
        "command": "spectrum",
        "tolerance": tol,
        "energies": [float(x) for x in model.basis.energies],
        "pairs": [list(p) for p in spec.pairs],
        "eigenvalues": {f"{i},{j}": _c(spec.f[(i, j)]) for (i, j) in spec.pairs},
        "degenerate_groups": [[list(p) for p in g] for g in spec.degenerate_groups],
        "orthogonality_residual": ortho,
        "pauli_eigenvalues": [_c(z) for z in np.sort_complex(spec.pauli.eigenvalues)],
        "checks": {"orthogonality": "pass" if ortho < max(tol, 1e-2) else "fail"},
    }
    _emit_json(args.out, report)


def cmd_pauli(model, run, args):
    tol = args.tol if args.tol is not None else 1e-8
    ps = spectral.pauli_system(model)
    colsum = float(np.max(np.abs(ps.W.sum(axis=0))))
    checks = {"column_sums": "pass" if colsum < 1e-12 * max(1.0, np.max(np.abs(ps.W))) else "fail"}
    report = {
        "command": "pauli",
        "tolerance": tol,
        "W": [[float(x) for x in row] for row in ps.W],
        "stationary": [float(x) for x in ps.stationary],
        "eigenvalues": [_c(z) for z in np.sort_complex(ps.eigenvalues)],
        "multiple_stationary": bool(ps.multiple_stationary),
    }
    if model.bath.is_thermal():
        temp = float(np.max(model.bath.temperature))
        w = model.basis.energies
        if temp > 0:
            p = np.exp(-(w - w[0]) / temp)
            gibbs = p / p.sum()
            gerr = float(np.max(np.abs(gibbs - ps.stationary)))
            report["gibbs"] = [float(x) for x in gibbs]
            report["gibbs_residual"] = gerr
            checks["gibbs"] = "pass" if gerr < tol else "fail"
        balance = spectral.detailed_balance_residual(model)
        report["detailed_balance_residual"] = balance
        checks["detailed_balance"] = "pass" if balance < max(tol, 1e-10) else "fail"
    report["checks"] = checks
    _emit_json(args.out, report)


def cmd_coefficients(model, run, args):
    tol = args.tol if args.tol is not None else 1e-9
    b = model.bath
    tgrid = _grid(run, default_tmax=float(run.get("t_max", 10.0)), default_n=21)
    wgrid = np.asarray(
        run.get("frequencies", [float(g) for g in model.unique_gaps]), dtype=float
    )
    table = {}
    for w in wgrid:
        entry = {"stationary": _cmat(b.coefficient_stationary(float(w)))}
        try:
            entry["full_time"] = {
                repr(float(t)): _cmat(b.coefficient_full(float(t), float(w)))
                for t in tgrid
            }
        except ValueError as exc:
            raise NumericalError(f"coefficient evaluation failed at w={w}: {exc}")
        table[repr(float(w))] = entry
    kgrid = np.asarray(run.get("kernel_frequencies", np.linspace(-5, 5, 21)), dtype=float)
    kern = bath_mod.kernels(b, kgrid)
    checks = {}
    if b.is_thermal():
        kms = bath_mod.kms_residual(b, kgrid)
        checks["kms"] = "pass" if kms < max(tol, 1e-9) else "fail"
    fdi = bath_mod.fdi_check(b, kgrid)
    checks["fdi"] = "pass" if fdi > -1e-12 else "fail"
    report = {
        "command": "coefficients",
        "tolerance": tol,
        "coefficients": table,
        "kernels": {
            "frequencies": [float(w) for w in kgrid],
            "nu": [_cmat(x) for x in kern.nu],
            "mu": [_cmat(x) for x in kern.mu],
            "gamma": [_cmat(x) for x in kern.gamma],
        },
        "fdi_min_eigenvalue": fdi,
        "checks": checks,
    }
    _emit_json(args.out, report)


def cmd_cp_audit(model, run, args):
    tol = args.tol if args.tol is not None else 1e-10
    if "superop_csv" in run:
        tgrid, samples = positivity.load_superop_samples(run["superop_csv"])
        weak = positivity.weak_cp_test(samples, tgrid)
        report = {
            "command": "cp-audit",
            "tolerance": tol,
            "source": "external-samples",
            "weak_test_min_eigenvalue": weak,
            "checks": {"weak_test": "pass" if weak >= -1e-8 else "fail"},
        }
        _emit_json(args.out, report)
        return
    tgrid = _grid(run, default_tmax=8.0, default_n=9)[1:]
    choi_mins, delta_mins = [], []
    for t in tgrid:
        gen = positivity.magnus_phi2(model, float(t))
        delta_mins.append(float(np.linalg.eigvalsh(gen.delta)[0]))
        g = positivity.magnus_propagator(model, float(t))
        choi_mins.append(min_choi_eigenvalue(choi_rearrange(g)))
    dense = np.linspace(0.0, float(tgrid[-1]), int(run.get("weak_points", 2001)))
    weak = positivity.weak_cp_test(
        positivity.interaction_dissipator_samples(model, dense), dense
    )
    report = {
        "command": "cp-audit",
        "tolerance": tol,
        "times": [float(t) for t in tgrid],
        "magnus_choi_min": min(choi_mins),
        "magnus_choi_min_per_time": choi_mins,
        "delta_min_eigenvalue": min(delta_mins),
        "weak_test_min_eigenvalue": weak,
        "checks": {
            "magnus_cp": "pass" if min(choi_mins) >= -1e-10 else "fail",
            "delta_psd": "pass" if min(delta_mins) >= -1e-10 else "fail",
            "weak_test": "pass" if weak >= -1e-8 else "fail",
        },
    }
    _emit_json(args.out, report)


def cmd_nonlocal(model, run, args):
    tol = args.tol if args.tol is not None else 1e-8
    try:
        spec = spectral.perturbative_spectrum(model)
        poles = memkernel.nonlocal_poles(model)
        residual = max(
            (abs(poles[p] - spec.f[p]) for p in spec.pairs), default=0.0
        )
        report = {
            "command": "nonlocal",
            "tolerance": tol,
            "poles": {f"{i},{j}": _c(v) for (i, j), v in sorted(poles.items())},
            "pole_match_max_residual": float(residual),
            "checks": {"pole_match": "pass" if residual < tol else "fail"},
        }
        rho0 = _parse_state(run.get("rho0"), model.dim)
        try:
            rho_inf = memkernel.asymptotic_state(model, rho0)
            report["asymptotic_state"] = _cmat(rho_inf)
        except ValueError as exc:
            report["asymptotic_state_error"] = str(exc)
        if run.get("invert"):
            grid = _grid(run, default_tmax=10.0, default_n=6)
            states = memkernel.laplace_trajectory(model, rho0, grid)
            report["talbot_trajectory"] = {
                repr(float(t)): _cmat(s) for t, s in zip(grid, states)
            }
    except ValueError as exc:
        raise NumericalError(str(exc))
    _emit_json(args.out, report)


def cmd_qrt(model, run, args):
    qrun = run.get("qrt", {})
    for key in ("x1", "x2", "t1", "t2"):
        if key not in qrun:
            raise ValidationError(f"run.qrt.{key} is required")
    x1 = _parse_complex_matrix(qrun["x1"], "run.qrt.x1")
    x2 = _parse_complex_matrix(qrun["x2"], "run.qrt.x2")
    rho0 = _parse_state(qrun.get("rho0"), model.dim, "run.qrt.rho0")
    req = multitime.TwoTimeRequest(
        x1=x1, x2=x2, t1=float(qrun["t1"]), t2=float(qrun["t2"]), rho0=rho0
    )
    mode = qrun.get("mode", "stationary")
    try:
        bare = multitime.qrt_correlation(model, req, mode=mode, include_correction=False)
        corrected = multitime.qrt_correlation(model, req, mode=mode, include_correction=True)
        product = (
            multitime.nm_correction(model, req)
            if req.t1 >= req.t2
            else np.conj(multitime.nm_correction(
                model,
                multitime.TwoTimeRequest(x1=x2, x2=x1, t1=req.t2, t2=req.t1, rho0=rho0),
            ))
        )
    except ValueError as exc:
        raise ValidationError(str(exc))
    report = {
        "command": "qrt",
        "t1": req.t1,
        "t2": req.t2,
        "mode": mode,
        "regression": _c(bare),
        "correction": _c(corrected - bare),
        "correction_single_time": _c(product),
        "corrected": _c(corrected),
    }
    _emit_json(args.out, report)


def cmd_oracle_compare(model, run, args):
    orun = run.get("oracle", {})
    seed = args.seed if args.seed is not None else int(orun.get("seed", 0))
    g = float(orun.get("g", 0.1))
    horizon = float(orun.get("horizon", 6.0))
    comp = oracle.random_composite(seed=seed, g=g)
    rho0 = _parse_state(orun.get("rho0"), comp.dim, "run.oracle.rho0")
    errs = oracle.convergence_errors(comp, rho0, horizon, npoints=int(orun.get("n_points", 13)))
    ratio = errs[0] / errs[1] if errs[1] > 0 else float("inf")
    report = {
        "command": "oracle-compare",
        "seed": seed,
        "g": g,
        "horizon": horizon,
        "error_full_coupling": errs[0],
        "error_half_coupling": errs[1],
        "ratio": ratio,
        "checks": {"convergence_order": "pass" if ratio >= 10.0 else "fail"},
    }
    _emit_json(args.out, report)


_COMMANDS = {
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "pauli": cmd_pauli,
    "coefficients": cmd_coefficients,
    "cp-audit": cmd_cp_audit,
    "nonlocal": cmd_nonlocal,
    "qrt": cmd_qrt,
    "oracle-compare": cmd_oracle_compare,
}


def main(argv=None) -> int:
    threads = os.environ.get("OQS_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    parser = argparse.ArgumentParser(
        prog="oqsolve",
        description="Second-order non-Markovian master equations: batch solver and audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--model", required=True, help="JSON model file")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--tol", type=float, default=None, help="check tolerance override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
    args = parser.parse_args(argv)

    try:
        model, run = load_model(args.model)
        _COMMANDS[args.command](model, run, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(json.dumps({"error": "numerical-failure", "detail": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
