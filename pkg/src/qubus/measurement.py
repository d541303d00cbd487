"""Bus detectors and the back-action they impose on the qubits.

Quadrature convention: X(angle) = a^dag e^{i angle} + a e^{-i angle}, so a coherent
state |z> has <X(angle)> = 2 Re(z e^{-i angle}) and unit variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import erfc, gammaln

from .core import Branch, HybridState, QubusError, coherent_overlap, index_label

DENSITY_FLOOR = 1e-300


class MeasurementError(QubusError):
    pass


@dataclass(frozen=True)
class Homodyne:
    angle: float = 0.0
    excess_noise: float = 0.0

    def __post_init__(self):
        if self.excess_noise < 0:
            raise ValueError("excess_noise must be non-negative")


@dataclass(frozen=True)
class PhotonNumber:
    pass


@dataclass(frozen=True)
class Bucket:
    worst_case: bool = False


MeasurementModel = Union[Homodyne, PhotonNumber, Bucket]


@dataclass(frozen=True)
class MixedOutcome:
    """Probability-weighted ensemble of pure states."""

    components: tuple[tuple[float, HybridState], ...]

    def __post_init__(self):
        weights = [w for w, _ in self.components]
        if any(w < 0 for w in weights):
            raise ValueError("mixture weights must be non-negative")
        if abs(sum(weights) - 1) > 1e-10:
            raise ValueError(f"mixture weights sum to {sum(weights)!r}, not 1")

    @classmethod
    def pure(cls, state: HybridState) -> MixedOutcome:
        return cls(((1.0, state),))

    def density(self) -> np.ndarray:
        from .core import reduced_qubit_density

        return sum(w * reduced_qubit_density(s) for w, s in self.components)


@dataclass(frozen=True)
class MeasurementRecord:
    outcome: float | int | bool
    probability: float
    posterior: HybridState | MixedOutcome
    model: MeasurementModel
    info: dict = field(default_factory=dict)


def _consumed(s: HybridState, amps: np.ndarray) -> HybridState:
    """Qubit-only state (bus projected) from a 2^n amplitude vector."""
    branches = [Branch(index_label(i, s.n_qubits), complex(c), 0j) for i, c in enumerate(amps) if c != 0]
    return HybridState(s.n_qubits, tuple(branches), s.merge_tol, True, s.cap)


def _require_bus(s: HybridState):
    if s.bus_consumed:
        raise MeasurementError("bus already consumed by an earlier measurement")


# -- homodyne ------------------------------------------------------------------------


def quadrature_kernel(x, alpha: complex, angle: float = 0.0) -> np.ndarray:
    """<x|alpha> for the X(angle) eigenbasis: (2 pi)^{-1/4} exp(-(x-2a)^2/4 + i b x - i a b)."""
    z = np.asarray(alpha, dtype=complex) * np.exp(-1j * angle)
    a, b = z.real, z.imag
    x = np.asarray(x, dtype=float)
    return (2 * np.pi) ** -0.25 * np.exp(-((x - 2 * a) ** 2) / 4 + 1j * b * x - 1j * a * b)


class HomodynePdf:
    """Density of the reported quadrature outcome, including interference between branches.

    Every same-label branch pair contributes a complex Gaussian; convolving with the
    readout noise N(0, excess_noise) stays closed form.
    """

    def __init__(self, s: HybridState, model: Homodyne):
        idx, c, z = s.arrays()
        z = z * np.exp(-1j * model.angle)
        self.variance = 1.0 + model.excess_noise
        self.means = 2 * z.real
        i, j = np.nonzero(idx[:, None] == idx[None, :])
        ai, bi, aj, bj = z.real[i], z.imag[i], z.real[j], z.imag[j]
        k = bi - bj
        self._mu = ai + aj
        self._k = k
        self._w = (
            c[i]
            * c[j].conj()
            * np.exp(-((ai - aj) ** 2) / 2 - 1j * (ai * bi - aj * bj) + 1j * k * self._mu - k**2 / 2)
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = self.variance
        shifted = x[..., None] - self._mu - 1j * self._k
        terms = self._w * np.exp(-(shifted**2) / (2 * v)) / math.sqrt(2 * math.pi * v)
        return np.sum(terms, axis=-1).real


def homodyne_pdf(s: HybridState, model: Homodyne) -> HomodynePdf:
    _require_bus(s)
    return HomodynePdf(s, model)


class HomodyneSampler:
    """Draws (latent, reported) quadrature values for a fixed state and detector.

    Rejection sampling with envelope K * sum_i |c_i|^2 N(x; 2 Re z_i, 1), where K is the
    largest number of branches sharing a label.
    """

    def __init__(self, s: HybridState, model: Homodyne):
        _require_bus(s)
        idx, c, z = s.arrays()
        z = z * np.exp(-1j * model.angle)
        w = np.abs(c) ** 2
        self.model = model
        self._p = w / w.sum()
        self._w = w
        self._k = np.max(np.bincount(idx))
        self._means = 2 * z.real
        self._pdf = HomodynePdf(s, Homodyne(model.angle))

    def latent(self, rng: np.random.Generator) -> float:
        means, w = self._means, self._w
        for _ in range(100000):
            x = means[rng.choice(len(means), p=self._p)] + rng.standard_normal()
            env = self._k * np.sum(w * np.exp(-((x - means) ** 2) / 2)) / math.sqrt(2 * math.pi)
            if rng.random() * env <= self._pdf(x):
                return float(x)
        raise MeasurementError("homodyne rejection sampler failed to accept")

    def __call__(self, rng: np.random.Generator) -> tuple[float, float]:
        x = self.latent(rng)
        if self.model.excess_noise > 0:
            return x, x + math.sqrt(self.model.excess_noise) * rng.standard_normal()
        return x, x


def condition_on_quadrature(s: HybridState, x: float, angle: float = 0.0) -> tuple[HybridState, float]:
    """Project the bus onto |x_angle>; returns (normalised qubit-only posterior, density at x)."""
    _require_bus(s)
    idx, c, z = s.arrays()
    amps = np.zeros(2**s.n_qubits, dtype=complex)
    np.add.at(amps, idx, c * quadrature_kernel(x, z, angle))
    density = float(np.sum(np.abs(amps) ** 2))
    if density < DENSITY_FLOOR:
        raise MeasurementError(f"quadrature outcome {x!r} has zero probability density")
    return _consumed(s, amps / math.sqrt(density)), density


def homodyne_measure(
    s: HybridState,
    model: Homodyne,
    rng: np.random.Generator | None = None,
    x: float | None = None,
) -> MeasurementRecord:
    """Sample (or force) a homodyne outcome.

    The bus is conditioned on the latent ideal value; with ``excess_noise`` the
    reported outcome carries additional classical Gaussian noise, so posteriors stay pure.
    A forced ``x`` is taken as the latent value.
    """
    _require_bus(s)
    if (rng is None) == (x is None):
        raise ValueError("give exactly one of rng or a forced outcome x")
    if x is not None:
        latent = reported = float(x)
    else:
        latent, reported = HomodyneSampler(s, model)(rng)
    posterior, _ = condition_on_quadrature(s, latent, model.angle)
    density = float(homodyne_pdf(s, model)(reported))
    return MeasurementRecord(reported, density, posterior, model, {"latent": latent})


# -- photon counting -------------------------------------------------------------------


def _number_cutoff(z: np.ndarray) -> int:
    m = float(np.max(np.abs(z) ** 2)) if len(z) else 0.0
    return int(math.ceil(m + 15 * math.sqrt(m) + 40))


def number_amplitudes(z: np.ndarray, n_max: int) -> np.ndarray:
    """<n|z_i> for each amplitude (rows) and n < n_max (columns)."""
    z = np.asarray(z, dtype=complex)
    n = np.arange(n_max)
    out = np.zeros((len(z), n_max), dtype=complex)
    for r, zi in enumerate(z):
        if zi == 0:
            out[r, 0] = 1.0
        else:
            out[r] = np.exp(-0.5 * abs(zi) ** 2 + n * np.log(zi) - 0.5 * gammaln(n + 1))
    return out


def _label_number_amplitudes(s: HybridState, n_max: int | None = None) -> np.ndarray:
    idx, c, z = s.arrays()
    n_max = n_max or _number_cutoff(z)
    per_branch = c[:, None] * number_amplitudes(z, n_max)
    amps = np.zeros((2**s.n_qubits, n_max), dtype=complex)
    np.add.at(amps, idx, per_branch)
    return amps


def photon_number_pmf(s: HybridState, n_max: int | None = None) -> np.ndarray:
    _require_bus(s)
    return np.sum(np.abs(_label_number_amplitudes(s, n_max)) ** 2, axis=0)


def photon_number_measure(
    s: HybridState, rng: np.random.Generator | None = None, n: int | None = None
) -> MeasurementRecord:
    """Ideal projection of the bus onto |n>; the bus is consumed."""
    _require_bus(s)
    if (rng is None) == (n is None):
        raise ValueError("give exactly one of rng or a forced outcome n")
    amps = _label_number_amplitudes(s)
    pmf = np.sum(np.abs(amps) ** 2, axis=0)
    total = pmf.sum()
    if abs(total - s.norm_squared()) > 1e-8:
        raise MeasurementError(f"photon-number distribution truncated (mass {total:.12f})")
    if n is None:
        n = int(np.searchsorted(np.cumsum(pmf / total), rng.random(), side="right"))
        n = min(n, len(pmf) - 1)
    if n >= len(pmf):
        amps = _label_number_amplitudes(s, n + 1)
        pmf = np.sum(np.abs(amps) ** 2, axis=0)
    p = float(pmf[n])
    if p < DENSITY_FLOOR:
        raise MeasurementError(f"photon number {n} has zero probability")
    posterior = _consumed(s, amps[:, n] / math.sqrt(p))
    return MeasurementRecord(int(n), p, posterior, PhotonNumber())


# -- bucket (vacuum / not vacuum) detection ----------------------------------------------


def _parity_density(s: HybridState) -> np.ndarray:
    """sum_ij c_i conj(c_j) <z_j|(-1)^{a^dag a}|z_i> arranged by label."""
    dim = 2**s.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for bi in s.branches:
        for bj in s.branches:
            out[int(bi.label, 2), int(bj.label, 2)] += (
                bi.coeff * bj.coeff.conjugate() * coherent_overlap(-bi.bus, bj.bus)
            )
    return out


def _as_mixture(s: HybridState, rho: np.ndarray, weight: float = 1.0) -> list[tuple[float, HybridState]]:
    vals, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    out = []
    for lam, v in zip(vals, vecs.T):
        if lam > 1e-15:
            out.append((weight * float(lam), _consumed(s, v)))
    return out


def _renormalize(comps: list[tuple[float, HybridState]]) -> MixedOutcome:
    total = sum(w for w, _ in comps)
    return MixedOutcome(tuple((w / total, st) for w, st in comps))


@dataclass(frozen=True)
class BucketStatistics:
    p_click: float
    even_weight: float  # A: share of the click mass carried by even photon numbers
    vacuum_amps: np.ndarray
    rho: np.ndarray
    rho_even_click: np.ndarray
    rho_odd: np.ndarray


def bucket_statistics(s: HybridState) -> BucketStatistics:
    from .core import reduced_qubit_density

    _require_bus(s)
    idx, c, z = s.arrays()
    v0 = np.zeros(2**s.n_qubits, dtype=complex)
    np.add.at(v0, idx, c * np.exp(-0.5 * np.abs(z) ** 2))
    rho = reduced_qubit_density(s)
    par = _parity_density(s)
    even = 0.5 * (rho + par) - np.outer(v0, v0.conj())
    odd = 0.5 * (rho - par)
    p_click = float(np.trace(rho).real - np.vdot(v0, v0).real)
    a = float(np.trace(even).real / p_click) if p_click > 0 else float("nan")
    return BucketStatistics(p_click, a, v0, rho, even, odd)


def bucket_measure(
    s: HybridState,
    rng: np.random.Generator | None = None,
    click: bool | None = None,
    worst_case: bool = False,
) -> MeasurementRecord:
    """POVM {|0><0|, 1 - |0><0|} on the bus.

    The no-click posterior is pure.  The click posterior is the ensemble over n >= 1;
    with ``worst_case`` the even-n and odd-n parts are forced to equal weight (A = 1/2),
    i.e. the click carries no parity information at all.
    """
    st = bucket_statistics(s)
    if (rng is None) == (click is None):
        raise ValueError("give exactly one of rng or a forced click")
    if click is None:
        click = bool(rng.random() < st.p_click)
    p = st.p_click if click else 1.0 - st.p_click
    if p < DENSITY_FLOOR:
        raise MeasurementError(f"bucket outcome click={click} has zero probability")
    model = Bucket(worst_case)
    if not click:
        post = MixedOutcome.pure(_consumed(s, st.vacuum_amps / math.sqrt(p)))
        return MeasurementRecord(False, p, post, model, {"A": st.even_weight})
    if worst_case:
        te, to = np.trace(st.rho_even_click).real, np.trace(st.rho_odd).real
        parts = [(m / t, 0.5) for m, t in ((st.rho_even_click, te), (st.rho_odd, to)) if t > 1e-300]
        comps = []
        for rho_part, w in parts:
            comps += _as_mixture(s, rho_part, w)
        post = _renormalize(comps)
        a = 0.5
    else:
        post = _renormalize(_as_mixture(s, (st.rho - np.outer(st.vacuum_amps, st.vacuum_amps.conj())) / p))
        a = st.even_weight
    return MeasurementRecord(True, p, post, model, {"A": a})


# -- discrimination errors ----------------------------------------------------------------


def discrimination_error(separation: float, variance: float = 1.0) -> float:
    """Wrong-side mass of two equal Gaussians split at their midpoint."""
    return float(0.5 * erfc(abs(separation) / (2 * math.sqrt(2 * variance))))


def quoted_qnd_error(beta: float, excess_noise: float = 0.0) -> float:
    """E(beta) = 1/2 erfc(|beta| / sqrt(2 (1 + excess_noise))), as quoted for the QND readout."""
    return float(0.5 * erfc(abs(beta) / math.sqrt(2 * (1 + excess_noise))))


def exact_qnd_error(beta: float, excess_noise: float = 0.0) -> float:
    """Midpoint error for peaks at 2(alpha +/- beta): separation 4|beta|, variance 1 + noise."""
    return discrimination_error(4 * abs(beta), 1 + excess_noise)
