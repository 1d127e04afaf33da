"""Zero-noise extrapolation by local folding of two-qubit gates."""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from ..circuit import Circuit
from ..gates import Gate
from .config import MitigatedEstimate

FOLDED_KINDS = ("cx", "cz")


def fold_gate(g: Gate, factor: int) -> Gate:
    if g.kind == "seq":
        ops: list[Gate] = []
        for op in g.ops:
            f = fold_gate(op, factor)
            ops.extend(f.ops if f.kind == "seq" and op.kind != "seq" else (f,))
        return Gate("seq", g.qubits, ops=tuple(ops))
    if g.kind in FOLDED_KINDS and factor > 1:
        return Gate.sequence([g] * factor)
    return g


def zne_fold(circuit: Circuit, factor: int) -> Circuit:
    """Replace each CX/CZ by ``factor`` copies (G (G G)^k) in its slot.

    Layers that contain a folded gate last ``factor`` times longer, so idle
    qubits alongside them accrue proportionally more idle error.
    """
    if factor < 1 or factor % 2 == 0:
        raise ValueError(f"fold factor must be an odd positive integer, got {factor}")
    if factor == 1:
        return circuit
    layers = []
    durations = []
    for layer, d in zip(circuit.layers, circuit.durations):
        has_2q = any(g.count(FOLDED_KINDS) for g in layer)
        layers.append([fold_gate(g, factor) for g in layer])
        durations.append(d * factor if has_2q else d)
    return circuit.with_layers(layers, durations, fold_factor=factor)


def _check_points(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(points) < 2:
        raise ValueError("extrapolation needs at least two points")
    arr = np.array([(float(p[0]), float(p[1]), float(p[2]) if len(p) > 2 else 0.0) for p in points])
    x, y, s = arr.T
    if len(set(x.tolist())) != len(x):
        raise ValueError("duplicate fold factors")
    return x, y, s


def _linear(x, y, s) -> tuple[float, float, np.ndarray]:
    a = np.stack([np.ones_like(x), x], axis=1)
    if np.all(s > 0):
        w = 1.0 / s**2
        cov = np.linalg.inv(a.T @ (a * w[:, None]))
        beta = cov @ (a.T @ (w * y))
    else:
        cov0 = np.linalg.inv(a.T @ a)
        beta = cov0 @ (a.T @ y)
        dof = len(x) - 2
        resid = y - a @ beta
        sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = cov0 * sigma2
    return float(beta[0]), float(np.sqrt(max(cov[0, 0], 0.0))), beta


def _exponential(x, y, s) -> tuple[float, float, np.ndarray]:
    sign = np.sign(y[0])
    ya = y * sign
    b0, loga = np.polyfit(x, np.log(ya), 1)
    p0 = (float(np.exp(loga)), max(float(-b0), 0.0))
    sigma = s if np.all(s > 0) else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", OptimizeWarning)
        popt, pcov = curve_fit(
            lambda t, amp, b: amp * np.exp(-b * t),
            x,
            ya,
            p0=p0,
            sigma=sigma,
            absolute_sigma=sigma is not None,
            bounds=([-np.inf, 0.0], [np.inf, np.inf]),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            maxfev=20000,
        )
    if not np.all(np.isfinite(popt)):
        raise RuntimeError("non-finite fit")
    err = float(np.sqrt(pcov[0, 0])) if np.isfinite(pcov[0, 0]) else 0.0
    return float(sign * popt[0]), err, popt


def zne_extrapolate(
    points: Sequence[tuple[float, float] | tuple[float, float, float]], fit: str = "linear"
) -> MitigatedEstimate:
    """Extrapolate ``(factor, value[, std_error])`` points to factor 0.

    Both fit families are attempted and their zero-noise values reported
    side by side under ``method_breakdown["fits"]``; ``fit`` selects the
    one used, with a linear fallback when the exponential fit is invalid.
    """
    fit = fit.lower()
    if fit not in ("linear", "exponential"):
        raise ValueError(f"unknown fit {fit!r}")
    x, y, s = _check_points(points)
    order = np.argsort(x)
    x, y, s = x[order], y[order], s[order]
    raw = float(y[0])
    flags: list[str] = []
    lin = _linear(x, y, s)
    exp, exp_issue = None, None
    if np.all(y > 0) or np.all(y < 0):
        try:
            exp = _exponential(x, y, s)
        except (RuntimeError, ValueError, OptimizeWarning):
            exp_issue = "exponential fit failed; linear fallback"
    else:
        exp_issue = "sign change; linear fallback"
    breakdown: dict = {
        "zne_points": [(float(a), float(b), float(c)) for a, b, c in zip(x, y, s)],
        "fits": {
            "linear": [lin[0], lin[1]],
            "exponential": None if exp is None else [exp[0], exp[1]],
        },
    }
    if fit == "exponential" and exp is not None:
        chosen, name = exp, "exponential"
    else:
        if fit == "exponential":
            flags.append(exp_issue)
        chosen, name = lin, "linear"
    value, err, params = chosen
    breakdown.update(fit=name, params=[float(v) for v in params])
    return MitigatedEstimate(raw, value, err, breakdown, flags)
