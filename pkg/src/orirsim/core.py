"""Schrödinger dynamics on small Hilbert spaces.

Units throughout: hbar = 1, times in microseconds, frequencies as angular
frequencies in rad/us.  A drive quoted as ``nu`` MHz enters as ``2*pi*nu``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp


class IntegrationError(RuntimeError):
    """The ODE solver failed to reach the requested end time."""


class BasisMismatchError(ValueError):
    pass


def mhz(nu: float) -> float:
    """Angular frequency (rad/us) of an ordinary frequency given in MHz."""
    return 2.0 * math.pi * nu


@dataclass(frozen=True)
class LevelBasis:
    """Ordered, uniquely labelled set of levels.

    Product bases of several atoms use tuple labels, one entry per atom.
    """

    labels: tuple
    factors: tuple = ()
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise ValueError("a basis needs at least one level")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate level labels in {labels}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def product(cls, *bases: "LevelBasis") -> "LevelBasis":
        labels = tuple(itertools.product(*(b.labels for b in bases)))
        return cls(labels, factors=tuple(bases))

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown level {label!r}; basis levels are {self.labels}") from None

    def __contains__(self, label) -> bool:
        return label in self._index

    def ket(self, label: Hashable) -> "StateVector":
        amps = np.zeros(self.dimension, dtype=complex)
        amps[self.index(label)] = 1.0
        return StateVector(self, amps)


@dataclass(frozen=True)
class StateVector:
    basis: LevelBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.basis.dimension:
            raise ValueError(
                f"{amps.size} amplitudes for a basis of dimension {self.basis.dimension}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, basis: LevelBasis, amps: Mapping[Hashable, complex]) -> "StateVector":
        vec = np.zeros(basis.dimension, dtype=complex)
        for label, a in amps.items():
            vec[basis.index(label)] = a
        return cls(basis, vec)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.basis, self.amplitudes / self.norm())

    def amplitude(self, label: Hashable) -> complex:
        return complex(self.amplitudes[self.basis.index(label)])

    def population(self, labels) -> float:
        if isinstance(labels, (str, tuple)) and labels in self.basis:
            labels = [labels]
        return float(sum(abs(self.amplitudes[self.basis.index(l)]) ** 2 for l in labels))


@dataclass(frozen=True)
class Term:
    """``value(t) |ket><bra| + h.c.``, or a real diagonal entry when ket == bra.

    value(t) = amplitude * exp(i * frequency * t) * envelope(t)
    """

    ket: Hashable
    bra: Hashable
    amplitude: complex = 1.0
    frequency: float = 0.0
    envelope: Callable[[float], float] | None = None

    @property
    def diagonal(self) -> bool:
        return self.ket == self.bra

    def value(self, t: float) -> complex:
        a = self.amplitude * np.exp(1j * self.frequency * t)
        if self.envelope is not None:
            a = a * self.envelope(t)
        return a


class Hamiltonian:
    """A list of terms compiled against a basis; calling it returns H(t)."""

    def __init__(self, basis: LevelBasis, terms: Iterable[Term]):
        self.basis = basis
        self.terms = tuple(terms)
        rows, cols = [], []
        for term in self.terms:
            i, j = basis.index(term.ket), basis.index(term.bra)
            if term.diagonal and (term.frequency != 0.0 or np.imag(term.amplitude) != 0.0):
                raise ValueError(f"diagonal term on {term.ket!r} must be real and static")
            rows.append(i)
            cols.append(j)
        self._rows = np.array(rows, dtype=int)
        self._cols = np.array(cols, dtype=int)
        self._offdiag = np.array([not t.diagonal for t in self.terms], dtype=bool)
        self._amps = np.array([t.amplitude for t in self.terms], dtype=complex)
        self._freqs = np.array([t.frequency for t in self.terms], dtype=float)
        self._env = [(k, t.envelope) for k, t in enumerate(self.terms) if t.envelope is not None]

    def coefficients(self, t: float) -> np.ndarray:
        vals = self._amps * np.exp(1j * self._freqs * t)
        for k, env in self._env:
            vals[k] *= env(t)
        return vals

    def __call__(self, t: float) -> np.ndarray:
        d = self.basis.dimension
        H = np.zeros((d, d), dtype=complex)
        vals = self.coefficients(t)
        np.add.at(H, (self._rows, self._cols), vals)
        off = self._offdiag
        np.add.at(H, (self._cols[off], self._rows[off]), np.conj(vals[off]))
        return H


def assemble_hamiltonian(basis: LevelBasis, terms: Iterable[Term], t: float) -> np.ndarray:
    return Hamiltonian(basis, terms)(t)


@dataclass(frozen=True)
class FrameTransform:
    """Diagonal change of frame: amplitude of level k picks up exp(i*rate_k*(t - reference_time))."""

    rates: Mapping[Hashable, float]
    reference_time: float = 0.0

    def inverse(self) -> "FrameTransform":
        return FrameTransform({k: -v for k, v in self.rates.items()}, self.reference_time)

    def phases(self, basis: LevelBasis, t: float) -> np.ndarray:
        ph = np.zeros(basis.dimension)
        for label, rate in self.rates.items():
            if label not in basis:
                raise BasisMismatchError(f"frame level {label!r} is not in the basis {basis.labels}")
            ph[basis.index(label)] = rate * (t - self.reference_time)
        return ph


def apply_frame(state: StateVector, frame: FrameTransform, t: float) -> StateVector:
    return StateVector(state.basis, state.amplitudes * np.exp(1j * frame.phases(state.basis, t)))


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.basis != b.basis:
        raise BasisMismatchError("fidelity needs two states on the same basis")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-12
    atol: float = 1e-14
    max_step: float = np.inf
    sample_interval: float = 1e-3

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("integrator tolerances must be positive")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")

    def scaled(self, factor: float) -> "IntegratorConfig":
        return IntegratorConfig(self.rtol * factor, self.atol * factor, self.max_step, self.sample_interval)


@dataclass(frozen=True)
class Trajectory:
    basis: LevelBasis
    times: np.ndarray
    amplitudes: np.ndarray  # (n_times, dimension)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (times.size, self.basis.dimension):
            raise ValueError(f"amplitude array {amps.shape} does not match {times.size} times")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amplitudes", amps)

    def __len__(self) -> int:
        return self.times.size

    @property
    def final(self) -> StateVector:
        return StateVector(self.basis, self.amplitudes[-1])

    @property
    def initial(self) -> StateVector:
        return StateVector(self.basis, self.amplitudes[0])

    def state(self, i: int) -> StateVector:
        return StateVector(self.basis, self.amplitudes[i])

    def populations(self, labels=None) -> np.ndarray:
        """Population of each level (2D), or the summed population of ``labels`` (1D)."""
        pops = np.abs(self.amplitudes) ** 2
        if labels is None:
            return pops
        if isinstance(labels, (str, tuple)) and labels in self.basis:
            labels = [labels]
        idx = [self.basis.index(l) for l in labels]
        return pops[:, idx].sum(axis=1)

    def norm_deviation(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.amplitudes, axis=1) - 1.0)))

    def window(self, t_start: float, t_end: float) -> "Trajectory":
        mask = (self.times >= t_start - 1e-12) & (self.times <= t_end + 1e-12)
        return Trajectory(self.basis, self.times[mask], self.amplitudes[mask])

    def concatenate(self, other: "Trajectory") -> "Trajectory":
        if other.basis != self.basis:
            raise BasisMismatchError("cannot join trajectories on different bases")
        t, a = other.times, other.amplitudes
        if t.size and abs(t[0] - self.times[-1]) <= 1e-12 * max(1.0, abs(t[0])):
            t, a = t[1:], a[1:]
        return Trajectory(self.basis, np.concatenate([self.times, t]), np.vstack([self.amplitudes, a]))


def sample_times(t_start: float, t_end: float, interval: float) -> np.ndarray:
    n = max(1, math.ceil((t_end - t_start) / interval - 1e-9))
    return np.linspace(t_start, t_end, n + 1)


def evolve(
    state: StateVector,
    terms: Hamiltonian | Iterable[Term],
    t_start: float,
    t_end: float,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate i d/dt psi = H(t) psi with an adaptive 8th-order Runge-Kutta scheme.

    The trajectory is sampled on a uniform grid of spacing ``cfg.sample_interval``
    (both endpoints included) from the solver's dense output.
    """
    cfg = cfg or IntegratorConfig()
    if not t_end > t_start:
        raise ValueError(f"t_end ({t_end}) must exceed t_start ({t_start})")
    H = terms if isinstance(terms, Hamiltonian) else Hamiltonian(state.basis, terms)
    if H.basis != state.basis:
        raise BasisMismatchError("Hamiltonian and state live on different bases")

    def rhs(t, y):
        dy = -1j * (H(t) @ y)
        if not np.isfinite(dy).all():
            raise IntegrationError(f"non-finite Hamiltonian or state at t={t} us")
        return dy

    t_eval = sample_times(t_start, t_end, cfg.sample_interval)
    sol = solve_ivp(
        rhs,
        (t_start, t_end),
        state.amplitudes.copy(),
        method="DOP853",
        rtol=cfg.rtol,
        atol=cfg.atol,
        max_step=cfg.max_step,
        t_eval=t_eval,
    )
    if not sol.success or sol.t.size != t_eval.size:
        reached = sol.t[-1] if sol.t.size else t_start
        raise IntegrationError(
            f"integration over [{t_start}, {t_end}] us stopped near t={reached}: {sol.message}"
        )
    return Trajectory(state.basis, sol.t, sol.y.T)


@dataclass(frozen=True)
class Segment:
    """Time window with its own Hamiltonian; ``kick`` is a unitary applied at ``start``."""

    start: float
    end: float
    terms: tuple = ()
    kick: np.ndarray | None = None


def evolve_segments(
    state: StateVector, segments: Sequence[Segment], cfg: IntegratorConfig | None = None
) -> Trajectory:
    """Evolve through consecutive windows, never stepping across a window edge.

    An instantaneous kick replaces the boundary sample with the post-kick state.
    """
    cfg = cfg or IntegratorConfig()
    traj = None
    psi = state
    for seg in segments:
        if seg.kick is not None:
            psi = StateVector(psi.basis, seg.kick @ psi.amplitudes)
            if traj is not None:
                amps = traj.amplitudes.copy()
                amps[-1] = psi.amplitudes
                traj = Trajectory(traj.basis, traj.times, amps)
        if seg.end - seg.start <= 0:
            if traj is None:
                traj = Trajectory(psi.basis, [seg.start], psi.amplitudes[None, :])
            continue
        piece = evolve(psi, seg.terms, seg.start, seg.end, cfg)
        traj = piece if traj is None else traj.concatenate(piece)
        psi = piece.final
    if traj is None:
        raise ValueError("no segments to evolve")
    return traj


def fixed_step(norm_bound: float, duration: float, accuracy: float = 1e-10) -> float:
    """Largest RK4 step keeping the estimated global error below ``accuracy``.

    Global error of RK4 on a unitary problem ~ (T*|H|) * (h*|H|)^4 / 120.
    """
    if norm_bound <= 0:
        return duration
    x = duration * norm_bound
    h_scaled = (120.0 * accuracy / max(x, 1.0)) ** 0.25
    return min(duration, h_scaled / norm_bound)


def evolve_batch(
    hamiltonian: Callable[[float], np.ndarray],
    states: np.ndarray,
    t_start: float,
    t_end: float,
    max_step: float,
) -> np.ndarray:
    """Fixed-step classical RK4 for a stack of independent systems.

    ``hamiltonian(t)`` returns an array of shape (..., d, d) broadcastable
    against ``states`` of shape (..., d, m).  Propagators are obtained by
    passing identity columns.  Used for parameter grids where thousands of
    small systems share one time axis; accuracy is set by ``max_step``
    (see :func:`fixed_step`).
    """
    psi = np.array(states, dtype=complex)
    n = max(1, math.ceil((t_end - t_start) / max_step - 1e-9))
    h = (t_end - t_start) / n

    def f(t, y):
        return -1j * (hamiltonian(t) @ y)

    t = t_start
    for k in range(n):
        t = t_start + k * h
        k1 = f(t, psi)
        k2 = f(t + 0.5 * h, psi + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, psi + 0.5 * h * k2)
        k4 = f(t + h, psi + h * k3)
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return psi


def evolve_batch_two_level(
    coupling: Callable[[float], np.ndarray],
    diagonal: np.ndarray,
    states: np.ndarray,
    t_start: float,
    t_end: float,
    max_step: float,
) -> np.ndarray:
    """RK4 for a stack of two-level systems H = [[0, c*], [c, d]].

    ``coupling(t)`` returns c with shape (B,) (or broadcastable), ``diagonal``
    holds the static shift d of the upper level, ``states`` has shape (B, 2)
    or (B, 2, m).  Equivalent to :func:`evolve_batch` but written out on the
    components, and c is evaluated only at the step ends and midpoints.
    """
    psi = np.array(states, dtype=complex)
    a, b = psi[:, 0], psi[:, 1]
    extra = (slice(None),) + (None,) * (a.ndim - 1)
    d = np.asarray(diagonal, dtype=float)
    d = np.broadcast_to(d, (a.shape[0],))[extra] if d.ndim else d
    n = max(1, math.ceil((t_end - t_start) / max_step - 1e-9))
    h = (t_end - t_start) / n

    def c_at(t):
        c = np.asarray(coupling(t), dtype=complex)
        return np.broadcast_to(c, (a.shape[0],))[extra]

    def f(c, x, y):
        return -1j * (np.conj(c) * y), -1j * (c * x + d * y)

    c0 = c_at(t_start)
    for k in range(n):
        t = t_start + k * h
        cm = c_at(t + 0.5 * h)
        c1 = c_at(t + h)
        ka1, kb1 = f(c0, a, b)
        ka2, kb2 = f(cm, a + 0.5 * h * ka1, b + 0.5 * h * kb1)
        ka3, kb3 = f(cm, a + 0.5 * h * ka2, b + 0.5 * h * kb2)
        ka4, kb4 = f(c1, a + h * ka3, b + h * kb3)
        a = a + (h / 6.0) * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
        b = b + (h / 6.0) * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
        c0 = c1
    return np.stack([a, b], axis=1)
