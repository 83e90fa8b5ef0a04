"""Norms and function-space diagnostics for periodic fields.

L2-based quantities are computed spectrally (Parseval with exact mode
weights); other Lebesgue exponents use collocation quadrature on a 2N-padded
grid to reduce aliasing in integrals of |u|^p.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import Field, gradient_data, physical_padded, spectral_field
from .grid import TorusGrid

DEFAULT_SIGMA = 4.0

#: fixed CSV column order for NormReport serialization
NORM_REPORT_COLUMNS = ("time_stamp", "l2_sq", "h1_sq", "h2_sq", "grad_l2_sq",
                       "grad_l3_sq", "l6_sq", "sigma", "w1_sigma")


def _parseval_sum(grid: TorusGrid, spec: np.ndarray, weight=1.0) -> float:
    """volume * sum over the full lattice of weight(k) * |spec|^2."""
    mag = np.sum(np.abs(spec) ** 2, axis=0)
    return float(grid.volume * np.sum(grid.hermitian_weight * weight * mag))


def l2_norm_sq(field: Field) -> float:
    return _parseval_sum(field.grid, field.spectral())


def grad_l2_norm_sq(field: Field) -> float:
    return _parseval_sum(field.grid, field.spectral(), field.grid.k_sq)


def sobolev_norm_sq(field: Field, s: int) -> float:
    """Squared H^s norm: sum_{|alpha| <= s} ||D^alpha u||_L2^2.

    Derivative tuples are counted with order, so the modewise weight is
    1 + |k|^2 + ... + |k|^(2s).
    """
    if s not in (0, 1, 2):
        raise ValueError(f"s must be 0, 1 or 2, got {s}")
    grid = field.grid
    weight = sum(grid.k_sq**j for j in range(s + 1))
    return _parseval_sum(grid, field.spectral(), weight)


def lp_norm(field: Field, p: float, pad_factor: int = 2) -> float:
    """L_p norm of the pointwise Euclidean magnitude |u(x)|."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 2:
        return float(np.sqrt(l2_norm_sq(field)))
    grid = field.grid
    vals = physical_padded(field, pad_factor)
    mag = np.sqrt(np.sum(vals**2, axis=0))
    M = pad_factor * grid.N
    cell = (grid.L / M) ** grid.dim
    if np.isinf(p):
        return float(mag.max())
    return float((cell * np.sum(mag**p)) ** (1.0 / p))


def gradient_field(field: Field) -> Field:
    """All first derivatives stacked as one (ncomp*dim)-component field."""
    return spectral_field(field.grid, gradient_data(field.grid, field.spectral()),
                          time_stamp=field.time_stamp)


def second_derivative_field(field: Field) -> Field:
    """All second derivatives (ordered pairs) stacked into one field."""
    g = gradient_field(field)
    return gradient_field(g)


def grad_lp_norm(field: Field, p: float) -> float:
    """L_p norm of |grad u| (Frobenius magnitude of the Jacobian)."""
    return lp_norm(gradient_field(field), p)


def w1_sigma_norm(field: Field, sigma: float = DEFAULT_SIGMA) -> float:
    """W^1_sigma norm: ||u||_{L_sigma} + ||grad u||_{L_sigma}."""
    if sigma <= 3:
        raise ValueError(f"sigma must exceed 3, got {sigma}")
    return lp_norm(field, sigma) + grad_lp_norm(field, sigma)


@dataclass
class NormReport:
    """One row of scalar diagnostics for a field at a time instant."""

    time_stamp: float
    l2_sq: float
    h1_sq: float
    h2_sq: float
    grad_l2_sq: float
    grad_l3_sq: float
    l6_sq: float
    sigma: float
    w1_sigma: float

    def to_csv_row(self) -> str:
        return ",".join(f"{getattr(self, c):.17e}" for c in NORM_REPORT_COLUMNS)

    @staticmethod
    def csv_header() -> str:
        return ",".join(NORM_REPORT_COLUMNS)


def compute_norm_report(field: Field, sigma: float = DEFAULT_SIGMA) -> NormReport:
    return NormReport(
        time_stamp=field.time_stamp,
        l2_sq=l2_norm_sq(field),
        h1_sq=sobolev_norm_sq(field, 1),
        h2_sq=sobolev_norm_sq(field, 2),
        grad_l2_sq=grad_l2_norm_sq(field),
        grad_l3_sq=grad_lp_norm(field, 3) ** 2,
        l6_sq=lp_norm(field, 6) ** 2,
        sigma=sigma,
        w1_sigma=w1_sigma_norm(field, sigma),
    )


@dataclass
class TrajectoryNorms:
    """Time-ordered NormReport sequence over an interval."""

    reports: list
    interval: tuple
    quadrature: str = "trapezoid"

    def __post_init__(self):
        times = self.times
        if np.any(np.diff(times) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        t0, t1 = self.interval
        if len(times) and (times[0] < t0 - 1e-12 or times[-1] > t1 + 1e-12):
            raise ValueError("interval does not bracket the time stamps")

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time_stamp for r in self.reports])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports])


def _select_interval(times, interval):
    t0, t1 = interval
    if t0 < times[0] - 1e-9 or t1 > times[-1] + 1e-9:
        raise ValueError(f"interval {interval} outside trajectory span "
                         f"({times[0]}, {times[-1]})")
    sel = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
    idx = np.nonzero(sel)[0]
    if idx.size < 2:
        raise ValueError("need at least two samples inside the interval")
    return idx


def mixed_norm(snapshots, p1: float, p2: float, interval) -> float:
    """L_{p2}(interval; L_{p1}(Omega)) norm of a snapshot sequence.

    snapshots: time-ordered Fields covering the interval.
    """
    times = np.array([f.time_stamp for f in snapshots])
    idx = _select_interval(times, interval)
    spatial = np.array([lp_norm(snapshots[i], p1) for i in idx])
    return float(np.trapezoid(spatial**p2, times[idx]) ** (1.0 / p2))


def _dt_series(stack: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Second-order finite differences in time of a snapshot stack."""
    out = np.empty_like(stack)
    out[1:-1] = (stack[2:] - stack[:-2]) / (times[2:] - times[:-2]).reshape(
        (-1,) + (1,) * (stack.ndim - 1))
    h0 = times[1] - times[0]
    out[0] = (-3 * stack[0] + 4 * stack[1] - stack[2]) / (2 * h0)
    h1 = times[-1] - times[-2]
    out[-1] = (3 * stack[-1] - 4 * stack[-2] + stack[-3]) / (2 * h1)
    return out


def w21_norm(snapshots, p1: float, p2: float, interval) -> float:
    """W^{2,1}_{p1,p2} norm: mixed norms of D^2_x u, d_t u and u summed.

    d_t u uses second-order finite differences of the stored snapshots,
    which needs at least three of them inside the interval.
    """
    times = np.array([f.time_stamp for f in snapshots])
    idx = _select_interval(times, interval)
    if idx.size < 3:
        raise ValueError("w21_norm needs at least 3 snapshots in the interval")
    sel = [snapshots[i] for i in idx]
    tsel = times[idx]

    u_part = mixed_norm(sel, p1, p2, (tsel[0], tsel[-1]))

    d2 = [second_derivative_field(f) for f in sel]
    d2_part = mixed_norm(d2, p1, p2, (tsel[0], tsel[-1]))

    stack = np.array([f.spectral() for f in sel])
    dt_stack = _dt_series(stack, tsel)
    dt_fields = [
        spectral_field(sel[0].grid, dt_stack[i], time_stamp=tsel[i])
        for i in range(len(sel))
    ]
    dt_part = mixed_norm(dt_fields, p1, p2, (tsel[0], tsel[-1]))
    return d2_part + dt_part + u_part


def poincare_ratio(field: Field, relative_to: str = "h1") -> float:
    """Sharpness probe for the torus Poincare inequality on mean-free fields.

    relative_to="h1": ||grad u||^2 / ||u||_H1^2   (>= kappa^2/(1+kappa^2))
    relative_to="l2": ||grad u||^2 / ||u||_L2^2   (>= kappa^2)
    """
    from .field import mean

    l2 = l2_norm_sq(field)
    if l2 == 0.0:
        raise ValueError("poincare_ratio of a zero field")
    m = mean(field)
    if np.max(np.abs(m)) > 1e-10 * np.sqrt(l2 / field.grid.volume):
        raise ValueError("poincare_ratio needs a mean-free field")
    grad = grad_l2_norm_sq(field)
    if relative_to == "h1":
        return grad / (l2 + grad)
    if relative_to == "l2":
        return grad / l2
    raise ValueError(f"unknown relative_to {relative_to!r}")


def embedding_ratio_l6_h1(field: Field) -> float:
    """||u||_L6^2 / ||u||_H1^2 for mean-free fields; probes the L6 embedding."""
    h1 = sobolev_norm_sq(field, 1)
    if h1 == 0.0:
        raise ValueError("embedding ratio of a zero field")
    return lp_norm(field, 6) ** 2 / h1


def extruded_lp_norm(field2d: Field, p: float) -> float:
    """L_p norm over the 3D box of a 2D field extended x3-invariantly.

    The extrusion multiplies the integral of |u|^p by L, i.e. the norm by
    L^(1/p).
    """
    if field2d.grid.dim != 2:
        raise ValueError("extruded_lp_norm expects a 2D field")
    return field2d.grid.L ** (1.0 / p) * lp_norm(field2d, p)


def sharp_poincare_h1(grid: TorusGrid) -> float:
    """Sharp discrete constant c with c*||u||_H1^2 <= ||grad u||_L2^2."""
    k2 = grid.kappa**2
    return k2 / (1.0 + k2)


def sharp_poincare_h2(grid: TorusGrid) -> float:
    """Sharp discrete constant c with c*||u||_H2^2 <= ||Delta u||_L2^2."""
    k2 = grid.kappa**2
    return k2**2 / (1.0 + k2 + k2**2)


def sharp_dissipation_h2(grid: TorusGrid) -> float:
    """Sharp c with c*||u||_H2^2 <= ||grad u||^2 + ||grad^2 u||^2 (mean-free)."""
    k2 = grid.kappa**2
    return (k2 + k2**2) / (1.0 + k2 + k2**2)
