"""Fourier lattice on the torus [0, 2 pi)^d and kinetic fields on it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .velocity_space import HermiteBasis


@dataclass(frozen=True, eq=False)
class Lattice:
    """n^d grid on [0, 2 pi)^d; Fourier modes k in Z^d with |k_j| <= n/2.

    Coefficients follow f(x) = sum_k fhat_k exp(i k.x), so fhat = fftn(f) / n^d.
    """

    d: int
    n: int
    k: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)
    dealias: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d not in (2, 3) or self.n < 4 or self.n % 2:
            raise ValueError(f"bad lattice d={self.d} n={self.n}")
        k1 = np.fft.fftfreq(self.n, 1.0 / self.n)
        k = np.array(np.meshgrid(*([k1] * self.d), indexing="ij"))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "k2", np.sum(k**2, axis=0))
        mask = np.all(np.abs(k) < self.n / 3.0, axis=0)
        object.__setattr__(self, "dealias", mask)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    def grid(self) -> np.ndarray:
        x = 2 * np.pi * np.arange(self.n) / self.n
        return np.array(np.meshgrid(*([x] * self.d), indexing="ij"))

    def to_fourier(self, f: np.ndarray) -> np.ndarray:
        """Transform over the trailing d axes."""
        return np.fft.fftn(f, axes=self.axes) / self.n**self.d

    def to_physical(self, fhat: np.ndarray) -> np.ndarray:
        return np.real(np.fft.ifftn(fhat, axes=self.axes)) * self.n**self.d

    def bracket(self, s: float) -> np.ndarray:
        """<k>^{2s} = (1 + |k|^2)^s."""
        return (1.0 + self.k2) ** s

    def modes(self) -> np.ndarray:
        """All lattice wave vectors, shape (n^d, d), in C order of the arrays."""
        return self.k.reshape(self.d, -1).T


@dataclass
class KineticField:
    """Velocity coefficients per lattice mode, array shape (n,)*d + (basis size,)."""

    lattice: Lattice
    basis: HermiteBasis
    coeffs: np.ndarray
    eps: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        want = self.lattice.shape + (self.basis.size,)
        if self.coeffs.shape != want:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != {want}")

    def norm(self, s: float = 2.0) -> float:
        return hs_norm(self.lattice, self.coeffs, s)

    def reality_defect(self) -> float:
        """max |fhat(-k) - conj fhat(k)|."""
        c = self.coeffs
        flip = c
        for ax in range(self.lattice.d):
            flip = np.roll(np.flip(flip, axis=ax), 1, axis=ax)
        return float(np.abs(flip - np.conj(c)).max())


def hs_norm(lattice: Lattice, fhat: np.ndarray, s: float = 2.0) -> float:
    """sqrt(sum_k <k>^{2s} |fhat_k|^2) with velocity components trailing."""
    w = lattice.bracket(s)
    sq = np.abs(fhat) ** 2
    if sq.ndim > lattice.d:
        sq = sq.reshape(lattice.shape + (-1,)).sum(axis=-1)
    return float(np.sqrt(np.sum(w * sq)))
