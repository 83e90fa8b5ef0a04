"""Periodic vector/scalar fields with physical and spectral representations.

Spectral data uses real-to-complex (rfftn) Hermitian storage and is
normalized so that the k=0 coefficient equals the spatial mean.  A field
carries one leading component axis: velocity fields have grid.dim
components, scalars one.
"""

import json

import numpy as np

from .grid import TorusGrid

PHYSICAL = "physical"
SPECTRAL = "spectral"

SNAPSHOT_FORMAT_VERSION = 1


class Field:
    """A field on a TorusGrid.

    Attributes:
        grid: the underlying TorusGrid
        data: ndarray of shape (ncomp,) + grid.shape_phys (physical, real)
              or (ncomp,) + grid.shape_spec (spectral, complex)
        representation: "physical" or "spectral"
        divergence_free: claim that i k . v_hat = 0 for every mode
        time_stamp: simulation time in seconds
    """

    __slots__ = ("grid", "data", "representation", "divergence_free", "time_stamp")

    def __init__(self, grid: TorusGrid, data: np.ndarray, representation: str,
                 divergence_free: bool = False, time_stamp: float = 0.0):
        if representation not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {representation!r}")
        data = np.asarray(data)
        if data.ndim == grid.dim:
            data = data[np.newaxis]
        expected = grid.shape_phys if representation == PHYSICAL else grid.shape_spec
        if data.shape[1:] != expected:
            raise ValueError(
                f"data shape {data.shape} does not match {representation} "
                f"shape (ncomp,)+{expected}")
        self.grid = grid
        self.data = data
        self.representation = representation
        self.divergence_free = divergence_free
        self.time_stamp = float(time_stamp)

    @property
    def ncomp(self) -> int:
        return self.data.shape[0]

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy(), self.representation,
                     self.divergence_free, self.time_stamp)

    def spectral(self) -> np.ndarray:
        """Spectral coefficients (converting if needed)."""
        if self.representation == SPECTRAL:
            return self.data
        return spectral_data(self.grid, self.data)

    def physical(self) -> np.ndarray:
        """Physical collocation values (converting if needed)."""
        if self.representation == PHYSICAL:
            return self.data
        return physical_data(self.grid, self.data)

    def __repr__(self):
        return (f"Field(grid=N{self.grid.N}^{self.grid.dim}, ncomp={self.ncomp}, "
                f"{self.representation}, t={self.time_stamp:g})")


def spectral_data(grid: TorusGrid, phys: np.ndarray) -> np.ndarray:
    axes = tuple(range(1, grid.dim + 1))
    return np.fft.rfftn(phys, axes=axes) / grid.N**grid.dim


def physical_data(grid: TorusGrid, spec: np.ndarray) -> np.ndarray:
    axes = tuple(range(1, grid.dim + 1))
    return np.fft.irfftn(spec * grid.N**grid.dim, s=grid.shape_phys, axes=axes)


def transform(field: Field, target: str) -> Field:
    """Change representation; round trips preserve values to ~1e-15."""
    if target not in (PHYSICAL, SPECTRAL):
        raise ValueError(f"unknown representation {target!r}")
    if field.representation == target:
        return field
    data = field.spectral() if target == SPECTRAL else field.physical()
    return Field(field.grid, data, target, field.divergence_free, field.time_stamp)


def spectral_field(grid: TorusGrid, spec: np.ndarray, divergence_free=False,
                   time_stamp=0.0) -> Field:
    return Field(grid, spec, SPECTRAL, divergence_free, time_stamp)


def physical_field(grid: TorusGrid, phys: np.ndarray, divergence_free=False,
                   time_stamp=0.0) -> Field:
    return Field(grid, phys, PHYSICAL, divergence_free, time_stamp)


def _nyquist_selector(grid: TorusGrid, axis: int):
    """Index selecting the Nyquist plane of `axis` in spectral storage."""
    idx = [slice(None)] * grid.dim
    if axis == grid.dim - 1:
        idx[axis] = grid.N // 2
    else:
        idx[axis] = -(grid.N // 2) % grid.N
    return tuple([slice(None)] + idx)


def derivative_data(grid: TorusGrid, spec: np.ndarray, axis: int,
                    order: int = 1) -> np.ndarray:
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} invalid for dim {grid.dim}")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    out = spec * (1j * grid.k[axis]) ** order
    if order % 2 == 1:
        # odd derivatives of the Nyquist mode are not representable on the
        # collocation grid; zero them to keep fields real
        out[_nyquist_selector(grid, axis)] = 0.0
    return out


def spectral_derivative(field: Field, direction: int, order: int = 1) -> Field:
    """Differentiate along `direction` by modewise (i k)^order."""
    out = derivative_data(field.grid, field.spectral(), direction, order)
    return Field(field.grid, out, SPECTRAL, False, field.time_stamp)


def gradient_data(grid: TorusGrid, spec_scalar: np.ndarray) -> np.ndarray:
    """Stack of first derivatives of each component along every axis.

    Shape (ncomp * dim,) + spectral shape, ordered component-major.
    """
    parts = [derivative_data(grid, spec_scalar[c:c + 1], ax, 1)
             for c in range(spec_scalar.shape[0]) for ax in range(grid.dim)]
    return np.concatenate(parts, axis=0)


def laplacian_data(grid: TorusGrid, spec: np.ndarray) -> np.ndarray:
    return -grid.k_sq * spec


def divergence_data(grid: TorusGrid, spec: np.ndarray) -> np.ndarray:
    if spec.shape[0] != grid.dim:
        raise ValueError("divergence needs one component per grid axis")
    out = np.zeros(grid.shape_spec, dtype=complex)
    for ax in range(grid.dim):
        out += derivative_data(grid, spec[ax:ax + 1], ax, 1)[0]
    return out


def divergence_linf(field: Field) -> float:
    """Max modewise |i k . v_hat|, normalized by the largest coefficient."""
    spec = field.spectral()
    div = divergence_data(field.grid, spec)
    scale = np.abs(spec).max() * np.sqrt(field.grid.k_sq.max())
    if scale == 0.0:
        return 0.0
    return float(np.abs(div).max() / scale)


def leray_data(grid: TorusGrid, spec: np.ndarray) -> np.ndarray:
    # uses the discrete-derivative wavenumbers so the projection annihilates
    # exactly the divergence the derivative operator measures; k=0 and
    # pure-Nyquist modes pass through untouched
    k_sq = np.where(grid.k_sq_deriv > 0, grid.k_sq_deriv, 1.0)
    kdotv = np.zeros(grid.shape_spec, dtype=complex)
    for ax in range(grid.dim):
        kdotv += grid.k_deriv[ax] * spec[ax]
    out = np.empty_like(spec)
    for ax in range(grid.dim):
        out[ax] = spec[ax] - grid.k_deriv[ax] * kdotv / k_sq
    return out


def leray_project(field: Field) -> Field:
    """Project onto divergence-free fields: v_hat -= k (k.v_hat)/|k|^2."""
    if field.ncomp != field.grid.dim:
        raise ValueError("Leray projection needs one component per grid axis")
    out = leray_data(field.grid, field.spectral())
    return Field(field.grid, out, SPECTRAL, True, field.time_stamp)


def dealias(field: Field) -> Field:
    """2/3-rule truncation: zero every mode with any |m| > N/3."""
    out = field.spectral() * field.grid.dealias_mask
    return Field(field.grid, out, SPECTRAL, field.divergence_free,
                 field.time_stamp)


def mean(field: Field) -> np.ndarray:
    """Spatial mean vector (the k=0 spectral coefficient)."""
    zero = (slice(None),) + (0,) * field.grid.dim
    return np.real(field.spectral()[zero]).copy()


def mean_free(field: Field) -> Field:
    """Subtract the spatial mean (zero the k=0 coefficient)."""
    out = field.spectral().copy()
    zero = (slice(None),) + (0,) * field.grid.dim
    out[zero] = 0.0
    return Field(field.grid, out, SPECTRAL, field.divergence_free,
                 field.time_stamp)


def random_divfree_field(grid: TorusGrid, seed: int, spectrum_decay: float = 2.0,
                         target_h1: float | None = None,
                         ncomp: int | None = None) -> Field:
    """Reproducible random mean-free divergence-free field.

    Coefficients are Gaussian with amplitude |k|^(-spectrum_decay), dealiased,
    Leray-projected.  With target_h1 set, the field is rescaled to that H^1
    norm.
    """
    if spectrum_decay <= 0:
        raise ValueError("spectrum_decay must be positive")
    if ncomp is None:
        ncomp = grid.dim
    rng = np.random.default_rng(seed)
    phys = rng.standard_normal((ncomp,) + grid.shape_phys)
    spec = spectral_data(grid, phys)
    amp = np.where(grid.k_sq > 0, grid.k_sq, 1.0) ** (-spectrum_decay / 2.0)
    spec *= amp * grid.dealias_mask
    zero = (slice(None),) + (0,) * grid.dim
    spec[zero] = 0.0
    if ncomp == grid.dim:
        spec = leray_data(grid, spec)
    out = Field(grid, spec, SPECTRAL, ncomp == grid.dim, 0.0)
    if target_h1 is not None:
        from .norms import sobolev_norm_sq
        h1 = np.sqrt(sobolev_norm_sq(out, 1))
        if h1 == 0.0:
            raise ValueError("cannot normalize a zero field")
        out.data *= target_h1 / h1
    return out


def extrude_field(field2d: Field, grid3: TorusGrid) -> Field:
    """Lift a 2D velocity field to the 3D box, invariant along x3 with a
    zero third component."""
    g2 = field2d.grid
    if g2.dim != 2 or grid3.dim != 3:
        raise ValueError("extrude_field lifts 2D fields onto a 3D grid")
    if g2.N != grid3.N or g2.L != grid3.L:
        raise ValueError("grids are incompatible")
    phys2 = field2d.physical()
    phys = np.zeros((3,) + grid3.shape_phys)
    phys[:2] = phys2[..., np.newaxis]
    return Field(grid3, phys, PHYSICAL, field2d.divergence_free,
                 field2d.time_stamp)


def physical_padded(field: Field, factor: int = 2) -> np.ndarray:
    """Collocation values on a refined (factor*N) grid via Fourier upsampling.

    Exact trigonometric interpolation for band-limited (e.g. dealiased)
    fields; used for aliasing-reduced quadrature of |u|^p integrals.
    """
    from scipy.signal import resample

    grid = field.grid
    M = factor * grid.N
    vals = field.physical()
    for ax in range(1, grid.dim + 1):
        vals = resample(vals, M, axis=ax)
    return vals


def save_field(path, field: Field) -> None:
    """Write a field snapshot.

    Layout (stable, version 1): a .npz archive with
      meta: JSON string {"version", "L", "N", "dim", "ncomp",
                         "representation", "divergence_free", "time_stamp"}
      data: the component array, shape (ncomp,)+grid shape
    """
    meta = {
        "version": SNAPSHOT_FORMAT_VERSION,
        "L": field.grid.L,
        "N": field.grid.N,
        "dim": field.grid.dim,
        "ncomp": field.ncomp,
        "representation": field.representation,
        "divergence_free": bool(field.divergence_free),
        "time_stamp": field.time_stamp,
    }
    np.savez(path, meta=np.array(json.dumps(meta)), data=field.data)


def load_field(path) -> Field:
    """Read a field snapshot written by save_field."""
    with np.load(path, allow_pickle=False) as npz:
        meta = json.loads(str(npz["meta"]))
        data = npz["data"]
    if meta.get("version") != SNAPSHOT_FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot version {meta.get('version')}")
    grid = TorusGrid(L=meta["L"], N=meta["N"], dim=meta["dim"])
    return Field(grid, data, meta["representation"],
                 meta["divergence_free"], meta["time_stamp"])
