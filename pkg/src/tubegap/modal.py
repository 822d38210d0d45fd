"""Duct eigenmodes and interface radiation-coupling coefficients.

A rigid circular duct carries axisymmetric modes J0(k_n r) whose radial
wavenumbers k_n satisfy a zero-slope wall condition, i.e. k_n = x_n / r2
with x_n the roots of J1 (x_0 = 0 is the plane wave).  When a sample disk
and its surrounding air gap terminate on a duct cross-section, the
pressure each patch feels from the duct side is a modal sum over these
eigenmodes.  Averaging that sum over the two patches produces eight
coupling coefficients: a 2x2 matrix for the upstream face and a 2x2
matrix for the downstream face, relating patch-averaged pressures to
patch volume velocities.

Sign and branch conventions (fixed package-wide):

* time dependence exp(+i w t); a plane wave travelling toward +x is
  exp(-i k0 x), so transmission through an air layer of thickness t is
  exp(-i k0 t);
* propagating modes (k_n < k0) have real positive axial wavenumber
  beta_n = sqrt(k0^2 - k_n^2);
* evanescent modes (k_n > k0) take beta_n = -i sqrt(k_n^2 - k0^2), the
  branch on which an outgoing mode decays away from the interface and the
  reactive part of the radiation loading is mass-like (positive).  The
  finite-difference oracle in tubegap.fdfd independently confirms this
  choice via the round-trip tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tubegap.errors import ConvergenceError, DomainError
from tubegap.specfun import bessel_j0, bessel_j1, j1_roots
from tubegap.types import DuctGeometry, MediumProperties

DEFAULT_MODE_COUNT = 64
DEFAULT_SUM_TOLERANCE = 1e-3


@dataclass(frozen=True)
class ModalBasis:
    """Radial eigenmode set of a rigid duct, truncated to ``n_modes``.

    Attributes:
        geometry: the duct the basis belongs to
        k: radial wavenumbers k_n = x_n / r2 (1/m), k[0] == 0
        wall_values: J0(k_n r2), the eigenmode normalization at the wall
    """

    geometry: DuctGeometry
    k: np.ndarray
    wall_values: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.k)

    def axial_wavenumbers(self, f: float, medium: MediumProperties) -> np.ndarray:
        """Per-mode axial wavenumbers beta_n at frequency f.

        Real positive for propagating modes, -i*positive for evanescent
        ones (see module docstring for the branch rule).
        """
        k0 = 2.0 * math.pi * f / medium.c0
        beta = np.empty(self.n_modes, dtype=complex)
        for n, kn in enumerate(self.k):
            diff = (k0 - kn) * (k0 + kn)
            if abs(diff) < 1e-24 * k0 * k0:
                raise DomainError(
                    f"frequency {f} Hz sits exactly on the cutoff of duct mode {n}"
                )
            if diff > 0:
                beta[n] = math.sqrt(diff)
            else:
                beta[n] = -1j * math.sqrt(-diff)
        return beta


def duct_wavenumbers(geometry: DuctGeometry, n_modes: int) -> ModalBasis:
    """Build the radial eigenmode basis with ``n_modes`` modes.

    Mode 0 is the plane wave (k = 0); mode n has k_n = x_n / r2 with x_n
    the n-th positive root of J1.
    """
    if not isinstance(n_modes, int) or isinstance(n_modes, bool) or n_modes < 1:
        raise DomainError(f"mode count must be a positive integer, got {n_modes!r}")
    table = j1_roots(n_modes)
    k = np.asarray(table.roots) / geometry.r2
    wall = np.array([bessel_j0(kn * geometry.r2) for kn in k])
    return ModalBasis(geometry=geometry, k=k, wall_values=wall)


def first_cutoff_frequency(geometry: DuctGeometry, medium: MediumProperties) -> float:
    """Cutoff of the first non-planar axisymmetric mode (Hz)."""
    x1 = j1_roots(2).roots[1]
    return x1 * medium.c0 / (2.0 * math.pi * geometry.r2)


def eigenmode(n: int, r: float, basis: ModalBasis) -> float:
    """Radial eigenmode profile, normalized to 1 at the duct wall."""
    if not 0 <= n < basis.n_modes:
        raise DomainError(f"mode index {n} outside basis of {basis.n_modes} modes")
    if not 0.0 <= r <= basis.geometry.r2:
        raise DomainError(f"radius {r} outside duct of radius {basis.geometry.r2}")
    return bessel_j0(basis.k[n] * r) / basis.wall_values[n]


def radial_integral(k: float, a: float, b: float) -> float:
    """Integral of J0(k r) * r dr from a to b.

    Closed form (r J1(k r) / k evaluated at the endpoints) for k > 0; the
    k = 0 case is handled analytically as (b^2 - a^2)/2 rather than as a
    numerical limit.
    """
    if not 0.0 <= a < b:
        raise DomainError(f"need 0 <= a < b, got a={a}, b={b}")
    if k == 0.0:
        return 0.5 * (b * b - a * a)
    return (b * bessel_j1(k * b) - a * bessel_j1(k * a)) / k


@dataclass(frozen=True)
class CouplingCoefficients:
    """Radiation coupling of the (sample, gap) patches to the duct sides.

    ``upstream[i, j]`` is the averaged pressure on patch i at the upstream
    face produced per unit volume velocity of patch j, signed so that the
    interface balance reads  p_avg = p_blocked + upstream @ u  with all
    volume velocities measured toward +x.  ``downstream`` plays the same
    role at the exit face (where p_avg = downstream @ u, no incident
    drive).  Patch 0 is the sample disk, patch 1 the annular gap.

    With a single plane-wave mode these reduce to -+ rho0 c0 / S2 on every
    entry.  ``rel_change`` records the largest relative movement of any
    entry when the modal truncation is doubled from n_modes/2 to n_modes.
    """

    frequency: float
    upstream: np.ndarray
    downstream: np.ndarray
    n_modes: int
    rel_change: float
    above_cutoff: bool


def coupling_coefficients(
    geometry: DuctGeometry,
    medium: MediumProperties,
    f: float,
    n_modes: int = DEFAULT_MODE_COUNT,
    sum_tolerance: float = DEFAULT_SUM_TOLERANCE,
) -> CouplingCoefficients:
    """Compute the eight patch-coupling coefficients at one frequency.

    Each coefficient is a modal sum of (prefactor) * (source-patch radial
    integral) * (receiver-patch radial integral) / (-i pi r2^2 beta_n);
    the radial integrals use the closed form from ``radial_integral``.

    Raises ConvergenceError if doubling the truncation from n_modes/2 to
    n_modes still moves any coefficient by more than ``sum_tolerance``
    (relative).  The modal tail decays like n^-3, so the partial sums
    converge quadratically in the truncation; the default tolerance is
    chosen accordingly.
    """
    if not (f > 0 and math.isfinite(f)):
        raise DomainError(f"frequency must be positive, got {f}")
    basis = duct_wavenumbers(geometry, n_modes)
    r1, r2 = geometry.r1, geometry.r2
    omega = 2.0 * math.pi * f
    beta = basis.axial_wavenumbers(f, medium)

    # per-mode patch integrals of the normalized eigenmode
    disk = np.array(
        [radial_integral(kn, 0.0, r1) for kn in basis.k]
    ) / basis.wall_values
    ring = np.array(
        [radial_integral(kn, r1, r2) for kn in basis.k]
    ) / basis.wall_values
    green = 1.0 / (-1j * math.pi * r2 * r2 * beta)

    ring_sq = r2 * r2 - r1 * r1
    scale = 4j * medium.rho0 * omega
    pre = {
        "aa": scale / r1 ** 4,
        "ab": scale / (r1 * r1 * ring_sq),
        "ba": scale / (r1 * r1 * ring_sq),
        "bb": scale / ring_sq ** 2,
    }
    pair = {
        "aa": disk * disk,
        "ab": disk * ring,
        "ba": ring * disk,
        "bb": ring * ring,
    }

    half = n_modes // 2 if n_modes > 1 else 1
    full_vals = {}
    half_vals = {}
    for key in ("aa", "ab", "ba", "bb"):
        terms = pre[key] * pair[key] * green
        running = np.cumsum(terms)
        full_vals[key] = complex(running[-1])
        half_vals[key] = complex(running[half - 1])

    upstream = np.array(
        [[full_vals["aa"], full_vals["ab"]], [full_vals["ba"], full_vals["bb"]]]
    )
    upstream_half = np.array(
        [[half_vals["aa"], half_vals["ab"]], [half_vals["ba"], half_vals["bb"]]]
    )
    downstream = -upstream
    rel_change = float(
        np.max(np.abs(upstream - upstream_half) / np.abs(upstream))
    )
    if n_modes > 1 and rel_change > sum_tolerance:
        raise ConvergenceError(
            f"modal sum moved by {rel_change:.3e} (> {sum_tolerance:.1e}) when "
            f"doubling the truncation to {n_modes} modes at {f} Hz"
        )
    above = f > first_cutoff_frequency(geometry, medium)
    return CouplingCoefficients(
        frequency=f,
        upstream=upstream,
        downstream=downstream,
        n_modes=n_modes,
        rel_change=rel_change,
        above_cutoff=above,
    )
