"""Inner convex approximations anchored at the previous iterate.

Every builder returns a ``Surrogate`` whose ``evaluate`` is tight at the anchor
and bounds the exact term from the side given by ``upper``. Logarithms are
natural; callers fold ``ln 2`` into the right-hand sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping

import numpy as np

ANCHOR_FLOOR = 1e-12


def clamp_anchor(value: Any) -> Any:
    """Floor anchor values so coefficients never divide by zero."""

    if np.ndim(value):
        return np.maximum(np.asarray(value, dtype=float), ANCHOR_FLOOR)
    return max(float(value), ANCHOR_FLOOR)


def _positive(**anchors: Any) -> None:
    for name, value in anchors.items():
        array = np.asarray(value, dtype=float)
        if not (np.all(array > 0) and np.all(np.isfinite(array))):
            raise ValueError(f"Surrogate anchor {name} must be positive and finite, got {value!r}")


@dataclass(frozen=True, slots=True)
class Surrogate:
    """Coefficients of one approximation plus evaluators for it and its exact term."""

    kind: str
    upper: bool
    anchor: Mapping[str, Any]
    coeffs: Mapping[str, float]
    _evaluate: Callable[..., Any] = field(repr=False)
    _exact: Callable[..., Any] = field(repr=False)

    def evaluate(self, **point: Any) -> Any:
        return self._evaluate(**point)

    def exact(self, **point: Any) -> Any:
        return self._exact(**point)

    def at_anchor(self) -> Any:
        return self._evaluate(**self.anchor)


def sqrt_product_upper(x_bar: float, y_bar: float) -> Surrogate:
    """``sqrt(x y) <= (sqrt(y_bar/x_bar) x + sqrt(x_bar/y_bar) y) / 2``."""

    _positive(x_bar=x_bar, y_bar=y_bar)
    cx = 0.5 * math.sqrt(y_bar / x_bar)
    cy = 0.5 * math.sqrt(x_bar / y_bar)
    return Surrogate(
        kind="sqrt-product-upper",
        upper=True,
        anchor={"x": x_bar, "y": y_bar},
        coeffs={"cx": cx, "cy": cy},
        _evaluate=lambda x, y: cx * x + cy * y,
        _exact=lambda x, y: np.sqrt(np.multiply(x, y)),
    )


def bilinear_upper(t_bar: float, z_bar: float, *, squared: bool = False) -> Surrogate:
    """Convex upper bound of ``t z`` (or ``t z**2`` when ``squared``)."""

    _positive(t_bar=t_bar, z_bar=z_bar)
    if squared:
        ct = 0.5 * z_bar**2 / t_bar
        cz = 0.5 * t_bar / z_bar**2
        return Surrogate(
            kind="bilinear-square-upper",
            upper=True,
            anchor={"t": t_bar, "z": z_bar},
            coeffs={"ct": ct, "cz": cz},
            _evaluate=lambda t, z: ct * np.square(t) + cz * np.power(z, 4),
            _exact=lambda t, z: np.multiply(t, np.square(z)),
        )
    ct = 0.5 * z_bar / t_bar
    cz = 0.5 * t_bar / z_bar
    return Surrogate(
        kind="bilinear-upper",
        upper=True,
        anchor={"t": t_bar, "z": z_bar},
        coeffs={"ct": ct, "cz": cz},
        _evaluate=lambda t, z: ct * np.square(t) + cz * np.square(z),
        _exact=lambda t, z: np.multiply(t, z),
    )


def bilinear_lower(t_bar: float, z_bar: float) -> Surrogate:
    """Concave lower bound ``2 z_bar sqrt(t_bar) sqrt(t) - t_bar z_bar**2 / z`` of ``t z``."""

    _positive(t_bar=t_bar, z_bar=z_bar)
    ct = 2.0 * z_bar * math.sqrt(t_bar)
    cz = t_bar * z_bar**2

    def evaluate(t: Any, z: Any) -> Any:
        if np.any(np.asarray(z) <= 0):
            raise ValueError("bilinear_lower is only defined for z > 0")
        return ct * np.sqrt(t) - cz / np.asarray(z, dtype=float)

    return Surrogate(
        kind="bilinear-lower",
        upper=False,
        anchor={"t": t_bar, "z": z_bar},
        coeffs={"ct": ct, "cz": cz},
        _evaluate=evaluate,
        _exact=lambda t, z: np.multiply(t, z),
    )


def ratio_upper(numerator_anchor: float, denominator_anchor: float, *, scale: float = 1.0) -> Surrogate:
    """``scale * u / v <= scale * (u_bar / (4 v_bar)) * (u/u_bar + v_bar/v)**2`` for ``v > 0``."""

    _positive(numerator_anchor=numerator_anchor, denominator_anchor=denominator_anchor)
    if scale < 0:
        raise ValueError(f"ratio_upper scale must be nonnegative, got {scale}")
    u_bar, v_bar = float(numerator_anchor), float(denominator_anchor)
    c = scale * u_bar / (4.0 * v_bar)

    def evaluate(u: Any, v: Any) -> Any:
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0):
            raise ValueError("ratio_upper denominator must stay positive")
        return c * np.square(np.asarray(u, dtype=float) / u_bar + v_bar / v)

    return Surrogate(
        kind="ratio-upper",
        upper=True,
        anchor={"u": u_bar, "v": v_bar},
        coeffs={"c": c, "u_bar": u_bar, "v_bar": v_bar, "scale": scale},
        _evaluate=evaluate,
        _exact=lambda u, v: scale * np.divide(u, v),
    )


def accuracy_ratio_upper(tau_l_bar: float, eta_bar: float, a: float) -> Surrogate:
    """``a * tau_l / (1 - eta)`` bounded through ``ratio_upper`` with ``v = 1 - eta``."""

    if not eta_bar < 1.0:
        raise ValueError(f"eta anchor must be below 1, got {eta_bar}")
    base = ratio_upper(tau_l_bar, 1.0 - eta_bar, scale=a)

    def evaluate(tau_l: Any, eta: Any) -> Any:
        eta = np.asarray(eta, dtype=float)
        if np.any(eta >= 1.0):
            raise ValueError("eta must stay below 1")
        return base.evaluate(u=tau_l, v=1.0 - eta)

    return Surrogate(
        kind="ratio-upper",
        upper=True,
        anchor={"tau_l": tau_l_bar, "eta": eta_bar},
        coeffs=dict(base.coeffs),
        _evaluate=evaluate,
        _exact=lambda tau_l, eta: a * np.divide(tau_l, 1.0 - np.asarray(eta, dtype=float)),
    )


def fdma_rate_lower(b_bar: float, p_bar: float, h: float, n0: float) -> Surrogate:
    """Concave lower bound of ``b ln(1 + p h / (b n0))`` in ``(b, p)``."""

    _positive(b_bar=b_bar, p_bar=p_bar, h=h, n0=n0)
    snr = p_bar * h / (b_bar * n0)
    log_term = math.log1p(snr)
    lam = 2.0 * b_bar * log_term
    mu = b_bar / (1.0 + 1.0 / snr)
    upsilon = b_bar**2 * log_term

    def evaluate(b: Any, p: Any) -> Any:
        b = np.asarray(b, dtype=float)
        p = np.asarray(p, dtype=float)
        return lam + mu * (2.0 - p_bar / p - b / b_bar) - upsilon / b

    def exact(b: Any, p: Any) -> Any:
        b = np.asarray(b, dtype=float)
        return b * np.log1p(np.asarray(p, dtype=float) * h / (b * n0))

    return Surrogate(
        kind="fdma-rate-lower",
        upper=False,
        anchor={"b": b_bar, "p": p_bar},
        coeffs={"lambda": lam, "mu": mu, "upsilon": upsilon, "b_bar": b_bar, "p_bar": p_bar},
        _evaluate=evaluate,
        _exact=exact,
    )


def noma_rate_lower(
    p_bar: np.ndarray,
    tau_c_bar: float,
    n: int,
    h: np.ndarray,
    n0: float,
    B: float,
) -> Surrogate:
    """Concave lower bound of ``tau_c ln(1 + h_n p_n / I_n(p))`` in ``(p, tau_c)``.

    ``I_n(p) = n0 B + sum_{k > n} p_k h_k`` counts the devices decoded after ``n``.
    """

    p_bar = np.asarray(p_bar, dtype=float)
    h = np.asarray(h, dtype=float)
    _positive(p_bar=p_bar, tau_c_bar=tau_c_bar, h=h, n0=n0, B=B)
    if not 0 <= n < p_bar.shape[0]:
        raise IndexError(f"device index {n} out of range")
    noise = n0 * B
    later = h[n + 1 :]
    interference_bar = noise + float(p_bar[n + 1 :] @ later)
    sinr = h[n] * p_bar[n] / interference_bar
    log_term = math.log1p(sinr)
    lam = 2.0 * tau_c_bar * log_term
    mu = tau_c_bar / (1.0 + 1.0 / sinr)
    upsilon = tau_c_bar**2 * log_term
    pn_bar = float(p_bar[n])

    def interference(p: np.ndarray) -> np.ndarray:
        return noise + np.asarray(p, dtype=float)[..., n + 1 :] @ later

    def evaluate(p: Any, tau_c: Any) -> Any:
        p = np.asarray(p, dtype=float)
        return lam + mu * (2.0 - pn_bar / p[..., n] - interference(p) / interference_bar) - upsilon / np.asarray(
            tau_c, dtype=float
        )

    def exact(p: Any, tau_c: Any) -> Any:
        p = np.asarray(p, dtype=float)
        return np.asarray(tau_c, dtype=float) * np.log1p(h[n] * p[..., n] / interference(p))

    return Surrogate(
        kind="noma-rate-lower",
        upper=False,
        anchor={"p": p_bar, "tau_c": tau_c_bar},
        coeffs={
            "lambda": lam,
            "mu": mu,
            "upsilon": upsilon,
            "p_bar": pn_bar,
            "interference_bar": interference_bar,
        },
        _evaluate=evaluate,
        _exact=exact,
    )


def coefficient_table(surrogate: Surrogate) -> Dict[str, float]:
    """Plain dict of coefficients for traces and dumps."""

    return {name: float(value) for name, value in surrogate.coeffs.items()}
