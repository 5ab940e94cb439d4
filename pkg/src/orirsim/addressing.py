"""Single-site Rydberg addressing with an optical spin echo.

Two beams ("perp" and "par") cross at the target atom.  Each beam carries
fields detuned by +D or -D; at the target they interfere to a resonant
drive, while an atom lit by only one beam sees a detuned Rabi problem whose
second half undoes the first (the echo).

Method I drives |1> <-> |r> with both beams.  Method II drives |1> <-> |r>
with the perp beam and |r> <-> |R> with the par beam, so only the target
reaches |R>.  The microwave variants move |r> to |r'> between the two
pulses; the second pulse then runs with |kappa|-scaled amplitude and
detuning so that the pair interaction kappa*V on |r'r'> echoes the V
accumulated on |rr>.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .core import (
    IntegratorConfig,
    LevelBasis,
    Segment,
    StateVector,
    Term,
    Trajectory,
    evolve_segments,
    fidelity,
    mhz,
)
from .sequence import Field, PulseStage, Sequence, pi_kick, run_sequence

METHOD1_RATIO = math.pi / 4  # Omega / Delta
METHOD2_RATIO = 1.2247
RATIO_RTOL = 1e-4
DEFAULT_LIFETIME = 320.0  # us
MAX_MANY_BODY_ATOMS = 4


@dataclass(frozen=True)
class AddressingParams:
    """Drive parameters at the target site.

    Parameters
    ----------
    delta : float
        Two-photon detuning D (rad/us).
    omega : float
        Rabi frequency at the beam focus (rad/us).
    omega_scale : float
        Rabi frequency of a nontarget atom relative to ``omega``.
    wait : float or None
        Length of the wait between pulses (us); None picks the method default.
    lifetime : float
        Rydberg lifetime used for the decay estimate (us).
    """

    delta: float
    omega: float
    omega_scale: float = 0.73
    wait: float | None = None
    lifetime: float = DEFAULT_LIFETIME

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not 0.0 <= self.omega_scale <= 1.0:
            raise ValueError("omega_scale must lie in [0, 1]")
        if self.wait is not None and self.wait < 0:
            raise ValueError("wait must be nonnegative")
        if not self.lifetime > 0:
            raise ValueError("lifetime must be positive")

    @classmethod
    def from_mhz(cls, delta_mhz, omega_mhz=None, omega_over_delta=None, **kw):
        delta = mhz(delta_mhz)
        if (omega_mhz is None) == (omega_over_delta is None):
            raise ValueError("give exactly one of omega_mhz and omega_over_delta")
        omega = mhz(omega_mhz) if omega_mhz is not None else omega_over_delta * delta
        return cls(delta, omega, **kw)

    @classmethod
    def method1(cls, delta, **kw):
        return cls(delta, METHOD1_RATIO * delta, **kw)

    @classmethod
    def method2(cls, delta, **kw):
        return cls(delta, METHOD2_RATIO * delta, **kw)

    @property
    def t0(self) -> float:
        return math.pi / self.delta

    def _check_ratio(self, ratio, rtol, name):
        if abs(self.omega / self.delta - ratio) > rtol * ratio:
            raise ValueError(
                f"{name} needs omega/delta = {ratio:.6g}, got {self.omega / self.delta:.6g}"
            )


class AtomRole(enum.Enum):
    TARGET = "target"
    NONTARGET_PERP = "nontarget-perp"
    NONTARGET_PAR = "nontarget-parallel"

    def illumination(self, omega_scale: float = 1.0, cross_beam_scale: float = 0.0) -> dict:
        """Per-beam amplitude scales.  ``cross_beam_scale`` is what a nontarget
        atom receives from the beam it does not sit on (0 drops that beam)."""
        if self is AtomRole.TARGET:
            return {"perp": 1.0, "par": 1.0, "global": 1.0}
        if self is AtomRole.NONTARGET_PERP:
            return {"perp": omega_scale, "par": cross_beam_scale, "global": 1.0}
        return {"perp": cross_beam_scale, "par": omega_scale, "global": 1.0}


@dataclass(frozen=True)
class EchoReport:
    restoration_fidelity: float
    target_amplitude: complex
    ground_amplitude: complex
    T_de: float
    decay_error: float
    peak_rydberg: float
    wait_rydberg: float
    residual_population: float

    def as_metrics(self, prefix: str = "") -> dict:
        out = {
            "restoration_fidelity": self.restoration_fidelity,
            "restoration_deficit": 1.0 - self.restoration_fidelity,
            "target_amplitude_re": self.target_amplitude.real,
            "target_amplitude_im": self.target_amplitude.imag,
            "target_amplitude_arg": float(np.angle(self.target_amplitude)),
            "target_population": abs(self.target_amplitude) ** 2,
            "ground_amplitude_re": self.ground_amplitude.real,
            "ground_amplitude_im": self.ground_amplitude.imag,
            "T_de_us": self.T_de,
            "decay_error": self.decay_error,
            "peak_rydberg": self.peak_rydberg,
            "wait_rydberg": self.wait_rydberg,
            "residual_population": self.residual_population,
        }
        return {prefix + k: float(v) for k, v in out.items()}


def _shift(fields, waited: float):
    """Re-phase fields so a schedule delayed by ``waited`` matches the undelayed one."""
    return tuple(f.with_phase(-f.frequency * waited) for f in fields)


def method1_sequence(params: AddressingParams, compensate: bool = True, check: bool = True) -> Sequence:
    """Pulse, wait, reversed pulse on |1> <-> |r>.

    The wait defaults to 2 pi / D.  With ``compensate`` the second pulse is
    re-phased by the wait, which makes any wait length equivalent to none.
    """
    if check:
        params._check_ratio(METHOD1_RATIO, 1e-9, "Method I")
    W, D, t0 = params.omega, params.delta, params.t0
    tw = 2 * math.pi / D if params.wait is None else params.wait
    first = (
        Field("r", "1", 0.5 * W, D, "perp"),
        Field("r", "1", -0.5 * W, -D, "par"),
    )
    second = (
        Field("r", "1", -0.5 * W, -D, "perp"),
        Field("r", "1", 0.5 * W, D, "par"),
    )
    if compensate:
        second = _shift(second, tw)
    stages = (
        PulseStage(0.0, t0, first, "pulse1"),
        PulseStage(t0, tw, (), "wait"),
        PulseStage(t0 + tw, t0, second, "pulse2"),
    )
    return Sequence(("1", "r"), stages, ("r",), "r", name="method1")


def method2_sequence(
    params: AddressingParams, cycles: int = 1, compensate: bool = True, check: bool = True
) -> Sequence:
    """Perp beam on |1> <-> |r>, par beam on |r> <-> |R>, ``cycles`` echo cycles.

    The wait inside each cycle defaults to 0.  ``check=False`` lifts the
    single-cycle amplitude condition for multi-cycle studies.
    """
    if cycles < 1:
        raise ValueError("cycles must be a positive integer")
    if check and cycles == 1:
        params._check_ratio(METHOD2_RATIO, RATIO_RTOL, "Method II")
    W, D, t0 = params.omega, params.delta, params.t0
    tw = 0.0 if params.wait is None else params.wait
    first = (
        Field("r", "1", 0.5 * W, D, "perp"),
        Field("R", "r", 0.5 * W, -D, "par"),
    )
    second = (
        Field("r", "1", -0.5 * W, -D, "perp"),
        Field("R", "r", 0.5 * W, D, "par"),
    )
    stages = []
    t = 0.0
    waited = 0.0
    for k in range(cycles):
        shift = waited if compensate else 0.0
        stages.append(PulseStage(t, t0, _shift(first, shift), f"pulse1.{k}"))
        t += t0
        stages.append(PulseStage(t, tw, (), f"wait.{k}"))
        t += tw
        waited += tw
        shift = waited if compensate else 0.0
        stages.append(PulseStage(t, t0, _shift(second, shift), f"pulse2.{k}"))
        t += t0
    return Sequence(("1", "r", "R"), tuple(stages), ("r", "R"), "R", name="method2")


def compute_T_de(traj: Trajectory, rydberg_levels) -> float:
    """Time-integrated Rydberg population (us), composite Simpson rule on the samples."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if len(traj) == 1:
        return 0.0
    pop = traj.populations(list(rydberg_levels))
    return float(simpson(pop, x=traj.times))


def _report(traj: Trajectory, seq: Sequence, initial: StateVector, lifetime: float) -> EchoReport:
    ryd = seq.rydberg_levels
    pop = traj.populations(list(ryd))
    waits = [traj.window(a, b).populations(list(ryd)) for a, b in seq.wait_windows()]
    waits = [w for w in waits if w.size]
    wait_peak = float(max(w.max() for w in waits)) if waits else float("nan")
    T_de = compute_T_de(traj, ryd)
    final = traj.final
    return EchoReport(
        restoration_fidelity=fidelity(final, initial),
        target_amplitude=final.amplitude(seq.target_level),
        ground_amplitude=final.amplitude(seq.ground_level),
        T_de=T_de,
        decay_error=T_de / lifetime,
        peak_rydberg=float(pop.max()),
        wait_rydberg=wait_peak,
        residual_population=1.0 - final.population(seq.target_level),
    )


def simulate_role(
    sequence: Sequence,
    role: AtomRole,
    omega_scale: float = 1.0,
    cfg: IntegratorConfig | None = None,
    *,
    cross_beam_scale: float = 0.0,
    initial: StateVector | None = None,
    lifetime: float = DEFAULT_LIFETIME,
) -> tuple:
    """Run one atom through ``sequence``; returns (trajectory, report).

    ``omega_scale`` is ignored for the target, which sits at both foci.
    """
    if not 0.0 <= omega_scale <= 1.0:
        raise ValueError("omega_scale must lie in [0, 1]")
    role = AtomRole(role)
    psi0 = initial if initial is not None else sequence.basis.ket(sequence.ground_level)
    traj = run_sequence(sequence, role.illumination(omega_scale, cross_beam_scale), psi0, cfg)
    return traj, _report(traj, sequence, psi0, lifetime)


# ---------------------------------------------------------------- microwave echo


@dataclass(frozen=True)
class MicrowaveEchoParams:
    """Timing of the microwave-echo variant.

    ``microwave_rabi`` is None when the transfer is idealised as an
    instantaneous pi kick (``t_mu`` = 0).  ``n`` is None in phase mode, where
    the residual laser phase ``chi`` is absorbed into the second pulse.
    """

    kappa: float
    delta: float
    t0: float
    t1: float
    t_mu: float
    t_wait: float
    microwave_rabi: float | None
    n: int | None
    chi: float
    mode: str

    @property
    def second_pulse_start(self) -> float:
        return self.t0 + self.t_mu + self.t_wait

    def as_metrics(self) -> dict:
        return {
            "kappa": self.kappa,
            "t0_us": self.t0,
            "t1_us": self.t1,
            "t_mu_us": self.t_mu,
            "t_wait_us": self.t_wait,
            "microwave_rabi_mhz": (self.microwave_rabi or 0.0) / (2 * math.pi),
            "n": float(self.n or 0),
            "chi_rad": self.chi,
        }


def _wrap(phase: float) -> float:
    w = math.remainder(phase, 2 * math.pi)
    return 0.0 if abs(w) < 1e-12 else w


def microwave_echo_schedule(
    kappa: float, delta: float, microwave_rabi: float | None = None, mode: str = "wait"
) -> MicrowaveEchoParams:
    """Wait and pulse lengths for the microwave echo.

    In ``wait`` mode the slot t_mu + t_w between the pulses is the smallest
    nonnegative value of 2 n pi / (|k| D) - t0 (1 + 1/|k|) that fits the
    microwave pulse; without ``microwave_rabi`` the whole slot is the pi
    pulse.  In ``phase`` mode there is no wait and the leftover phase is
    put on the second-pulse fields instead.
    """
    if not kappa < 0:
        raise ValueError(f"the echo needs kappa < 0 (interaction sign flip), got {kappa}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    ak = abs(kappa)
    t0 = math.pi / delta
    t1 = t0 / ak
    if microwave_rabi is not None and not microwave_rabi > 0:
        raise ValueError("microwave_rabi must be positive")
    if mode == "wait":
        need = math.pi / microwave_rabi if microwave_rabi is not None else 0.0
        n = 1
        slot = 2 * math.pi / (ak * delta) - t0 * (1 + 1 / ak)
        while slot < need - 1e-15:
            n += 1
            slot = 2 * n * math.pi / (ak * delta) - t0 * (1 + 1 / ak)
        slot = max(slot, 0.0)
        if microwave_rabi is None:
            t_mu, t_w = slot, 0.0
            rabi = math.pi / t_mu if t_mu > 0 else None
        else:
            t_mu, rabi = need, microwave_rabi
            t_w = max(slot - t_mu, 0.0)
    elif mode == "phase":
        if microwave_rabi is None:
            raise ValueError("phase mode needs an explicit microwave Rabi frequency")
        n, rabi, t_mu, t_w = None, microwave_rabi, math.pi / microwave_rabi, 0.0
    else:
        raise ValueError(f"mode must be 'wait' or 'phase', got {mode!r}")
    chi = _wrap(ak * delta * (t0 + t_mu + t_w) + delta * t0)
    return MicrowaveEchoParams(kappa, delta, t0, t1, t_mu, t_w, rabi, n, chi, mode)


def microwave_sequence(
    params: AddressingParams,
    schedule: MicrowaveEchoParams,
    method: int = 2,
    phase_error: tuple = (0.0, 0.0),
) -> Sequence:
    """Pulse, microwave pi pulse |r> -> |r'>, optional wait, |kappa|-scaled pulse.

    ``phase_error`` adds a static phase (rad) to the perp and par fields of
    the second pulse, for robustness studies.
    """
    if abs(schedule.delta - params.delta) > 1e-12 * params.delta:
        raise ValueError("schedule and params disagree on delta")
    W, D, t0 = params.omega, params.delta, params.t0
    ak, chi = abs(schedule.kappa), schedule.chi
    ts = schedule.second_pulse_start
    ep, eq = (np.exp(1j * p) for p in phase_error)
    if method == 1:
        levels, ryd, target = ("1", "r", "r'"), ("r", "r'"), "r'"
        first = (Field("r", "1", 0.5 * W, D, "perp"), Field("r", "1", -0.5 * W, -D, "par"))
        par2 = Field("r'", "1", 0.5 * ak * W * np.exp(-1j * chi) * eq, ak * D, "par")
    elif method == 2:
        levels, ryd, target = ("1", "r", "r'", "R"), ("r", "r'", "R"), "R"
        first = (Field("r", "1", 0.5 * W, D, "perp"), Field("R", "r", 0.5 * W, -D, "par"))
        par2 = Field("R", "r'", 0.5 * ak * W * np.exp(-1j * chi) * eq, ak * D, "par")
    else:
        raise ValueError("method must be 1 or 2")
    perp2 = Field("r'", "1", -0.5 * ak * W * np.exp(1j * chi) * ep, -ak * D, "perp")
    if schedule.t_mu > 0:
        mw = PulseStage(t0, schedule.t_mu,
                        (Field("r'", "r", 0.5j * schedule.microwave_rabi, 0.0, "global"),), "microwave")
    else:
        mw = PulseStage(t0, 0.0, (), "microwave", kick=("r", "r'"))
    stages = (
        PulseStage(0.0, t0, first, "pulse1"),
        mw,
        PulseStage(mw.end, schedule.t_wait, (), "wait"),
        PulseStage(ts, schedule.t1, (perp2, par2), "pulse2"),
    )
    return Sequence(levels, stages, ryd, target, name=f"method{method}-microwave")


def microwave_method2_sequence(params: AddressingParams, schedule: MicrowaveEchoParams, **kw) -> Sequence:
    params._check_ratio(METHOD2_RATIO, RATIO_RTOL, "Method II")
    return microwave_sequence(params, schedule, method=2, **kw)


def simulate_microwave_echo_method2(
    params: AddressingParams,
    schedule: MicrowaveEchoParams,
    omega_scale: float,
    role: AtomRole = AtomRole.NONTARGET_PERP,
    cfg: IntegratorConfig | None = None,
    initial: StateVector | None = None,
) -> tuple:
    seq = microwave_method2_sequence(params, schedule)
    return simulate_role(seq, role, omega_scale, cfg, initial=initial, lifetime=params.lifetime)


# ---------------------------------------------------------------- many atoms


def _embed(n: int, site: int, field_: Field, scale: float, levels) -> list:
    """Copy a one-atom field onto atom ``site`` of an n-atom product basis."""
    terms = []
    others = [levels] * (n - 1)
    for rest in itertools.product(*others):
        ket = list(rest)
        bra = list(rest)
        ket.insert(site, field_.ket)
        bra.insert(site, field_.bra)
        t = field_.term(scale)
        terms.append(Term(tuple(ket), tuple(bra), t.amplitude, t.frequency, t.envelope))
    return terms


def simulate_many_body_echo(
    n_atoms: int,
    interactions,
    kappa: float,
    omega_scales,
    schedule: MicrowaveEchoParams,
    params: AddressingParams | None = None,
    *,
    cross_coupling: float = 0.0,
    method: int = 1,
    cfg: IntegratorConfig | None = None,
) -> float:
    """Restoration fidelity of several interacting nontarget atoms on the perp path.

    Every atom carries levels (1, r, r').  Pairs pick up ``V_ij`` on |r r>,
    ``kappa * V_ij`` on |r' r'> and ``cross_coupling * V_ij`` on |r r'>.
    ``kappa`` is the physical interaction ratio; the pulse timing comes from
    ``schedule``, so a mismatched pair can be studied on purpose.
    """
    if not 1 <= n_atoms <= MAX_MANY_BODY_ATOMS:
        raise ValueError(
            f"n_atoms must be 1..{MAX_MANY_BODY_ATOMS} (Hilbert dimension 3^n capped at "
            f"{3 ** MAX_MANY_BODY_ATOMS})"
        )
    V = np.zeros((n_atoms, n_atoms)) if interactions is None else np.asarray(interactions, float)
    if V.shape != (n_atoms, n_atoms):
        raise ValueError(f"interaction matrix must be {n_atoms}x{n_atoms}")
    scales = np.broadcast_to(np.asarray(omega_scales, float), (n_atoms,))
    if method != 1:
        raise ValueError("the many-body echo is modelled for nontargets with levels (1, r, r')")
    if params is None:
        params = AddressingParams.method1(schedule.delta)
    seq = microwave_sequence(params, schedule, method=method)
    levels = seq.levels
    basis = LevelBasis.product(*[LevelBasis(levels)] * n_atoms)

    diag = []
    for label in basis.labels:
        e = 0.0
        for i, j in itertools.combinations(range(n_atoms), 2):
            pair = {label[i], label[j]}
            if label[i] == label[j] == "r":
                e += V[i, j]
            elif label[i] == label[j] == "r'":
                e += kappa * V[i, j]
            elif pair == {"r", "r'"}:
                e += cross_coupling * V[i, j]
        if e != 0.0:
            diag.append(Term(label, label, e))

    segments = []
    for stage in seq.stages:
        terms = list(diag)
        for i in range(n_atoms):
            beams = AtomRole.NONTARGET_PERP.illumination(float(scales[i]))
            for f in stage.fields:
                s = beams.get(f.beam, 0.0)
                if s != 0.0:
                    terms.extend(_embed(n_atoms, i, f, s, levels))
        kick = None
        if stage.kick:
            one = pi_kick(LevelBasis(levels), *stage.kick)
            kick = one
            for _ in range(n_atoms - 1):
                kick = np.kron(kick, one)
        segments.append(Segment(stage.start, stage.end, tuple(terms), kick))

    psi0 = basis.ket(tuple(["1"] * n_atoms))
    traj = evolve_segments(psi0, segments, cfg)
    return fidelity(traj.final, psi0)
