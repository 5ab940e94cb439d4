"""Second step of the Rydberg blockade gate, traditional and ORIR.

With the control atom already in |r>, the target is driven on |1> <-> |r>:

* traditional: coupling W/2 for 2 pi / W,
* ORIR: two tones (W/4) e^{+iDt} and -(W/4) e^{-iDt}, i.e. coupling
  i W sin(Dt) / 2, for pi / D with W / D = pi.

Input |01> has no blockade and must come back as -|01>.  Input |11> starts
in |r1> and is blocked by V on |rr>; whatever leaks out of |r1> is the
blockade error.  Pulse edges and timing jitter of the four tone edges are
modelled on top of the ORIR tones.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .core import (
    IntegratorConfig,
    LevelBasis,
    Segment,
    Term,
    Trajectory,
    evolve_segments,
    evolve_batch_two_level,
    fixed_step,
    mhz,
)

SCHEMES = ("traditional", "orir")
SHAPES = ("rectangular", "cosine-squared", "linear")
INPUTS = {"01": LevelBasis(("01", "0r")), "11": LevelBasis(("r1", "rr"))}


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GateParams:
    """Step-2 parameters (rad/us, us).

    ``v`` is the actual blockade (defaults to ``v0``), ``duration`` overrides
    the nominal 2 pi / W (traditional) or pi / D (ORIR).
    """

    scheme: str
    omega: float
    v0: float
    v: float | None = None
    delta: float | None = None
    duration: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.v is None:
            object.__setattr__(self, "v", self.v0)
        if not (self.v0 > 0 and self.v > 0):
            raise ValueError("blockade shifts V and V0 must be positive")
        if self.scheme == "orir":
            if self.delta is None:
                object.__setattr__(self, "delta", self.omega / math.pi)
            if abs(self.omega / self.delta - math.pi) > 1e-9 * math.pi:
                raise ValueError(
                    f"ORIR step needs omega/delta = pi for the |01> 2pi condition, got {self.omega / self.delta}"
                )
        if self.duration is not None and not self.duration > 0:
            raise ValueError("duration must be positive")

    @property
    def nominal_duration(self) -> float:
        return 2 * math.pi / self.omega if self.scheme == "traditional" else math.pi / self.delta

    @property
    def step_duration(self) -> float:
        return self.nominal_duration if self.duration is None else self.duration

    def with_v(self, v: float) -> "GateParams":
        return replace(self, v=v)

    def with_duration(self, T: float | None) -> "GateParams":
        return replace(self, duration=T)

    @classmethod
    def ratio(cls, scheme: str, v0_over_omega: float, v_over_v0: float = 1.0, omega_mhz: float = 2.0):
        omega = mhz(omega_mhz)
        v0 = v0_over_omega * omega
        return cls(scheme, omega, v0, v_over_v0 * v0)


@dataclass(frozen=True)
class PulseEdge:
    rise_ns: float = 0.0
    fall_ns: float = 0.0
    shape: str = "cosine-squared"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"edge shape must be one of {SHAPES}, got {self.shape!r}")
        if self.rise_ns < 0 or self.fall_ns < 0:
            raise ValueError("ramp durations must be nonnegative")
        if self.shape == "rectangular" and (self.rise_ns or self.fall_ns):
            raise ValueError("rectangular edges have zero ramp durations")

    @classmethod
    def rectangular(cls):
        return cls(0.0, 0.0, "rectangular")

    @property
    def rise(self) -> float:
        return self.rise_ns * 1e-3

    @property
    def fall(self) -> float:
        return self.fall_ns * 1e-3

    def _ramp(self, x):
        if self.shape == "linear":
            return x
        return np.sin(0.5 * np.pi * x) ** 2

    def profile(self, t, start, end):
        """Envelope in [0, 1]: 0 outside [start, end], ramps at both ends, 1 on the plateau."""
        t = np.asarray(t, dtype=float)
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        if np.any(end - start < self.rise + self.fall - 1e-15):
            raise ValueError("pulse shorter than its rise plus fall time")
        out = ((t >= start) & (t <= end)).astype(float)
        if self.rise > 0:
            out = out * self._ramp(np.clip((t - start) / self.rise, 0.0, 1.0))
        if self.fall > 0:
            out = out * self._ramp(np.clip((end - t) / self.fall, 0.0, 1.0))
        return out

    def breakpoints(self, start: float, end: float) -> list:
        return [start, start + self.rise, end - self.fall, end]


@dataclass(frozen=True)
class TimingOffsets:
    """Shifts (ns) of the start and end of the +D and -D tones."""

    start_plus: float = 0.0
    start_minus: float = 0.0
    end_plus: float = 0.0
    end_minus: float = 0.0

    def windows(self, T: float) -> tuple:
        ns = 1e-3
        return ((self.start_plus * ns, T + self.end_plus * ns),
                (self.start_minus * ns, T + self.end_minus * ns))


@dataclass(frozen=True)
class TimingErrorModel:
    """Gaussian jitter sigma (ns) sampled on ``points`` offsets spanning +-``halfwidth`` sigma."""

    sigma_ns: float
    points: int = 11
    halfwidth: float = 5.0

    def __post_init__(self):
        if not self.sigma_ns > 0:
            raise ValueError("sigma must be positive")
        if self.points < 1 or self.points % 2 == 0:
            raise ValueError("the offset grid needs an odd number of points")

    def offsets_ns(self) -> np.ndarray:
        if self.points == 1:
            return np.zeros(1)
        return np.linspace(-self.halfwidth, self.halfwidth, self.points) * self.sigma_ns

    def weights(self) -> np.ndarray:
        g = self.offsets_ns()
        return np.exp(-(g**2) / (2 * self.sigma_ns**2))


@dataclass(frozen=True)
class GateErrorReport:
    scheme: str
    v_rel: np.ndarray
    leakage_r1: np.ndarray
    average: float
    leakage_01: float


def _tone_envelopes(params: GateParams, edges: PulseEdge, offsets: TimingOffsets):
    T = params.step_duration
    (sp, ep), (sm, em) = offsets.windows(T)
    return (lambda t: float(edges.profile(t, sp, ep)),
            lambda t: float(edges.profile(t, sm, em)),
            (sp, ep), (sm, em))


def step2_terms(params: GateParams, edges: PulseEdge | None = None, input: str = "11",
                offsets: TimingOffsets | None = None, route: str = "tones"):
    """Hamiltonian terms, basis and the integration breakpoints for one input state."""
    if input not in INPUTS:
        raise ValueError(f"input must be '01' or '11', got {input!r}")
    edges = edges or PulseEdge.rectangular()
    offsets = offsets or TimingOffsets()
    basis = INPUTS[input]
    ground, excited = basis.labels
    W, T = params.omega, params.step_duration
    terms = []
    if input == "11":
        terms.append(Term(excited, excited, params.v))
    if params.scheme == "traditional":
        (s, e), _ = offsets.windows(T)
        terms.append(Term(excited, ground, 0.5 * W, 0.0, lambda t: float(edges.profile(t, s, e))))
        cuts = edges.breakpoints(s, e)
    elif route == "tones":
        D = params.delta
        fp, fm, (sp, ep), (sm, em) = _tone_envelopes(params, edges, offsets)
        terms.append(Term(excited, ground, 0.25 * W, D, fp))
        terms.append(Term(excited, ground, -0.25 * W, -D, fm))
        cuts = edges.breakpoints(sp, ep) + edges.breakpoints(sm, em)
    elif route == "simplified":
        if offsets != TimingOffsets():
            raise ValueError("the simplified route has no separate tones to offset")
        D = params.delta
        terms.append(Term(excited, ground, 0.5j * W, 0.0,
                          lambda t: math.sin(D * t) * float(edges.profile(t, 0.0, T))))
        cuts = edges.breakpoints(0.0, T)
    else:
        raise ValueError("route must be 'tones' or 'simplified'")
    cuts = sorted(set(float(c) for c in cuts))
    return basis, terms, cuts


def _segments(terms, cuts):
    return [Segment(a, b, tuple(terms)) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def step2_evolve(params: GateParams, edges: PulseEdge | None = None, input: str = "11",
                 offsets: TimingOffsets | None = None, route: str = "tones",
                 cfg: IntegratorConfig | None = None) -> np.ndarray:
    """Final amplitudes (initial level, excited level) after step 2."""
    return step2_trajectory(params, edges, input, offsets, route, cfg).final.amplitudes.copy()


def step2_trajectory(params: GateParams, edges: PulseEdge | None = None, input: str = "11",
                     offsets: TimingOffsets | None = None, route: str = "tones",
                     cfg: IntegratorConfig | None = None) -> Trajectory:
    basis, terms, cuts = step2_terms(params, edges, input, offsets, route)
    cfg = cfg or IntegratorConfig()
    return evolve_segments(basis.ket(basis.labels[0]), _segments(terms, cuts), cfg)


def leakage_trajectory(params: GateParams, edges: PulseEdge | None = None,
                       cfg: IntegratorConfig | None = None) -> Trajectory:
    """Input |11> trajectory; the leakage is ``1 - traj.populations('r1')``."""
    return step2_trajectory(params, edges, "11", cfg=cfg)


def leakage(amplitudes) -> float:
    return float(1.0 - abs(amplitudes[0]) ** 2)


# ------------------------------------------------------------------ batched


def _coupling_batch(t, params: GateParams, edges: PulseEdge, win_plus, win_minus):
    W = params.omega
    if params.scheme == "traditional":
        return 0.5 * W * edges.profile(t, *win_plus)
    D = params.delta
    return 0.25 * W * (edges.profile(t, *win_plus) * np.exp(1j * D * t)
                       - edges.profile(t, *win_minus) * np.exp(-1j * D * t))


def _run_chunks(fn, n: int, threads: int):
    """Apply ``fn(slice)`` over contiguous chunks of range(n) and join in order."""
    threads = max(1, int(threads))
    if threads == 1 or n < 2 * threads:
        return fn(slice(0, n))
    bounds = np.linspace(0, n, threads + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, slices))
    return np.concatenate(parts, axis=0)


def batch_final_states(params: GateParams, v, edges: PulseEdge | None = None,
                       t_start: float = 0.0, t_end: float | None = None,
                       win_plus=None, win_minus=None, states=None,
                       accuracy: float = 1e-9, threads: int = 1) -> np.ndarray:
    """Fixed-step RK4 over a batch of blockades and/or tone windows.

    ``v`` and the window edges are scalars or length-B arrays.  ``states``
    has shape (B, 2) or (B, 2, m); by default every member starts in the
    undriven level.
    """
    edges = edges or PulseEdge.rectangular()
    T = params.step_duration
    t_end = T if t_end is None else t_end
    win_plus = (0.0, T) if win_plus is None else win_plus
    win_minus = (0.0, T) if win_minus is None else win_minus
    v = np.asarray(v, dtype=float)
    B = max(v.size, *(np.size(x) for x in (*win_plus, *win_minus)))
    if states is None:
        states = np.zeros((B, 2), dtype=complex)
        states[:, 0] = 1.0
    states = np.asarray(states, dtype=complex)
    if states.shape[0] != B:
        states = np.broadcast_to(states, (B,) + states.shape[1:])
    bound = float(np.max(np.abs(v))) + 0.5 * params.omega
    h = fixed_step(bound, t_end - t_start, accuracy)

    def take(x, sl):
        x = np.asarray(x, dtype=float)
        return x if x.size == 1 else x[sl]

    def work(sl):
        wp = (take(win_plus[0], sl), take(win_plus[1], sl))
        wm = (take(win_minus[0], sl), take(win_minus[1], sl))
        return evolve_batch_two_level(
            lambda t: _coupling_batch(t, params, edges, wp, wm),
            take(v, sl), states[sl], t_start, t_end, h)

    return _run_chunks(work, B, threads)


def blockade_sweep(params: GateParams, interval=(-0.25, 0.25), n_points: int = 201,
                   edges: PulseEdge | None = None, threads: int = 1,
                   accuracy: float = 1e-8) -> GateErrorReport:
    """|r1> leakage on a uniform grid of (V - V0)/V0 and its unweighted mean."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    lo, hi = interval
    if not hi > lo:
        raise ValueError("interval must be increasing")
    v_rel = np.linspace(lo, hi, n_points)
    v = params.v0 * (1.0 + v_rel)
    if np.any(v <= 0):
        raise ValueError("the interval reaches V <= 0")
    rect = edges is None or edges.shape == "rectangular"
    if params.scheme == "traditional" and rect:
        T = params.step_duration
        H = np.zeros((n_points, 2, 2), dtype=complex)
        H[:, 0, 1] = H[:, 1, 0] = 0.5 * params.omega
        H[:, 1, 1] = v
        final = expm(-1j * T * H)[:, :, 0]
    else:
        final = batch_final_states(params, v, edges, accuracy=accuracy, threads=threads)
    leak = 1.0 - np.abs(final[:, 0]) ** 2
    leak01 = leakage(step2_evolve(params, edges, "01"))
    return GateErrorReport(params.scheme, v_rel, leak, float(np.mean(leak)), leak01)


# ------------------------------------------------------------------ duration and timing


@dataclass(frozen=True)
class DurationOptimum:
    T: float
    leakage_01: float
    leakage_r1: float
    evaluations: int


def optimize_duration(params: GateParams, edges: PulseEdge, search_ns: tuple | None = None,
                      cfg: IntegratorConfig | None = None) -> DurationOptimum:
    """Step duration minimising the |01> leakage with ramped tone edges.

    The search runs a bounded Brent minimisation over ``search_ns`` (ns,
    relative to pi/D); by default from -2 ns to the total ramp time + 5 ns.
    """
    if params.scheme != "orir":
        raise ValueError("duration optimisation applies to the ORIR scheme")
    T0 = params.nominal_duration
    lo_ns, hi_ns = search_ns or (-2.0, edges.rise_ns + edges.fall_ns + 5.0)
    lo, hi = T0 + lo_ns * 1e-3, T0 + hi_ns * 1e-3
    cfg = cfg or IntegratorConfig(sample_interval=0.05)

    def leak01(T):
        return leakage(step2_evolve(params.with_duration(T), edges, "01", cfg=cfg))

    res = minimize_scalar(leak01, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-8, "maxiter": 200})
    edge_gap = 1e-4 * (hi - lo)
    if not res.success or res.x - lo < edge_gap or hi - res.x < edge_gap:
        raise OptimizationError(
            f"no interior minimum of the |01> leakage in [{lo * 1e3:.4f}, {hi * 1e3:.4f}] ns "
            f"(stopped at {res.x * 1e3:.4f} ns, leakage {res.fun:.3e}, {res.message})"
        )
    lr1 = leakage(step2_evolve(params.with_duration(res.x), edges, "11", cfg=cfg))
    return DurationOptimum(float(res.x), float(res.fun), lr1, int(res.nfev))


@dataclass(frozen=True)
class TimingAverage:
    sigma_ns: float
    leakage_01: float
    leakage_r1: float
    configurations: int


def _weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    """Order-independent weighted mean (exactly rounded sums)."""
    prods = (weights * values).ravel()
    return math.fsum(prods.tolist()) / math.fsum(weights.ravel().tolist())


def timing_error_average(params: GateParams, edges: PulseEdge, T: float, sigma_ns: float,
                         points: int = 11, threads: int = 1, accuracy: float = 1e-10,
                         method: str = "factorized") -> TimingAverage:
    """Gaussian-weighted average of both leakages over jittered tone edges.

    Every tone edge (start and end of the +D and -D tones) is offset
    independently on the grid {-5 sigma, ..., 5 sigma}.  The start offsets
    only act before T/2 and the end offsets only after it, so the
    ``factorized`` method propagates the points**2 start pairs to T/2 and the
    points**2 end pairs from T/2 and combines them, which is exact.
    ``direct`` evolves every tuple separately.
    """
    if params.scheme != "orir":
        raise ValueError("the timing-error model applies to the ORIR tones")
    model = TimingErrorModel(sigma_ns, points)
    g = model.offsets_ns() * 1e-3
    w = model.weights()
    ii, jj = np.meshgrid(np.arange(points), np.arange(points), indexing="ij")
    pair_a, pair_b = ii.ravel(), jj.ravel()          # (+ tone, - tone) offset indices
    pair_w = w[pair_a] * w[pair_b]
    gmin, gmax = g.min(), g.max()
    mid = 0.5 * T
    p = params.with_duration(T)
    out = {}
    if method == "factorized":
        if gmax + max(edges.rise, edges.fall) >= mid:
            raise ValueError("jitter plus ramps reach the pulse centre; use method='direct'")
        for inp, v in (("01", 0.0), ("11", params.v)):
            starts = batch_final_states(
                p, v, edges, t_start=gmin, t_end=mid,
                win_plus=(g[pair_a], T + gmax + 1.0), win_minus=(g[pair_b], T + gmax + 1.0),
                accuracy=accuracy, threads=threads)
            eye = np.broadcast_to(np.eye(2, dtype=complex), (pair_a.size, 2, 2))
            ends = batch_final_states(
                p, v, edges, t_start=mid, t_end=T + gmax,
                win_plus=(gmin - 1.0, T + g[pair_a]), win_minus=(gmin - 1.0, T + g[pair_b]),
                states=eye, accuracy=accuracy, threads=threads)
            # final[j, i] = U_end[j] @ psi_mid[i]; only the surviving amplitude is needed
            amp = np.einsum("jb,ib->ji", ends[:, 0, :], starts)
            leak = 1.0 - np.abs(amp) ** 2
            out[inp] = _weighted_mean(leak, np.outer(pair_w, pair_w))
    elif method == "direct":
        a, b = np.meshgrid(np.arange(pair_a.size), np.arange(pair_a.size), indexing="ij")
        s_idx, e_idx = a.ravel(), b.ravel()
        sp, sm = g[pair_a[s_idx]], g[pair_b[s_idx]]
        ep, em = g[pair_a[e_idx]], g[pair_b[e_idx]]
        weights = pair_w[s_idx] * pair_w[e_idx]
        for inp, v in (("01", 0.0), ("11", params.v)):
            final = batch_final_states(p, v, edges, t_start=gmin, t_end=T + gmax,
                                       win_plus=(sp, T + ep), win_minus=(sm, T + em),
                                       accuracy=accuracy, threads=threads)
            leak = 1.0 - np.abs(final[:, 0]) ** 2
            out[inp] = _weighted_mean(leak, weights)
    else:
        raise ValueError("method must be 'factorized' or 'direct'")
    return TimingAverage(sigma_ns, out["01"], out["11"], points**4)
