"""End-to-end entangled-photon protocol over N microtrap-microcavity sites.

Pipeline: per-ion auxiliary preparation, conditional cavity emission (one
polarization-tagged photon per ion), a chain of compiled CNOTs from ion 1
to every other ion followed by a Hadamard on ion 1, and projective readout
of the ion register.  Each of the 2^N ion outcomes heralds one maximally
entangled N-photon state; with ideal emission every outcome has
probability 1/2^N.

Monte Carlo sampling is reproducible: trial k draws from the substream
numpy.random.default_rng(SeedSequence(entropy=seed, spawn_key=(k,))), so
any execution order (serial or parallel) yields bit-identical reports.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import cavity, crystal, gates
from .errors import DomainError, UncompilableError

PHOTON_CHARS = {0: "s+", 1: "s0"}
SPIN_CHARS = {0: "e", 1: "g"}

MIN_PROTOCOL_IONS = 2


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run the full protocol once."""

    species: crystal.IonSpecies
    traps: crystal.TrapArray
    gradient: crystal.FieldGradient
    cavities: tuple            # one CavitySetup per ion
    cnot_active_on: str = "e"  # 'e' reproduces the outcome tables
    seed: int = 0
    t0: float | None = None    # per-CNOT time; derived from couplings if None
    t1: float = 0.0            # Hadamard + measurement time
    collection_efficiency: float = 1.0

    def __post_init__(self):
        n = self.traps.n_ions
        if not MIN_PROTOCOL_IONS <= n <= gates.MAX_IONS:
            raise DomainError(
                f"protocol needs {MIN_PROTOCOL_IONS}..{gates.MAX_IONS} ions, got {n}"
            )
        if len(self.cavities) != n:
            raise DomainError("need one cavity setup per ion")
        if self.cnot_active_on not in ("e", "g"):
            raise DomainError("cnot_active_on must be 'e' or 'g'")
        if not 0.0 <= self.collection_efficiency <= 1.0:
            raise DomainError("collection efficiency must be in [0, 1]")
        if self.t1 < 0 or (self.t0 is not None and self.t0 < 0):
            raise DomainError("times must be >= 0")

    @property
    def n_ions(self) -> int:
        return self.traps.n_ions


def prepare_initial(n_ions: int) -> list[cavity.FourLevelAmplitudes]:
    """Per-ion (|g'> + |e'>)/sqrt(2) x |00> product state."""
    if n_ions < 1:
        raise DomainError("need at least one ion")
    return [cavity.initial_superposition() for _ in range(n_ions)]


def emission_stage(cfg: ExperimentConfig):
    """Conditional emission at each ion's optimal stop time.

    Returns the spin-photon register conditioned on success at every site,
    the product of per-site branch states (|g>|s0> + |e>|s+>)/sqrt(2),
    together with the per-ion success probabilities.
    """
    probs = []
    site = np.zeros(4, complex)
    site[gates.bitstring_index((0, 0))] = 1.0 / math.sqrt(2)   # |e>|s+>
    site[gates.bitstring_index((1, 1))] = 1.0 / math.sqrt(2)   # |g>|s0>
    for setup in cfg.cavities:
        result = cavity.emission_result(setup)
        probs.append(result.p_success * cfg.collection_efficiency)
    state = gates.product_state([site] * cfg.n_ions)
    return state, probs


def chain_coupling(cfg: ExperimentConfig) -> crystal.CouplingMatrix:
    """Ising couplings of the configured chain."""
    eq = crystal.solve_equilibrium(cfg.traps, cfg.species)
    modes = crystal.normal_modes(eq, cfg.traps, cfg.species)
    return crystal.coupling_matrix(modes, cfg.gradient, cfg.species)


def entangle_stage(
    state: gates.SpinPhotonState,
    cfg: ExperimentConfig,
    coupling: crystal.CouplingMatrix | None = None,
    compiled: bool = True,
) -> gates.SpinPhotonState:
    """CNOT from ion 1 to ions 2..N, then Hadamard on ion 1.

    With ``compiled=True`` every CNOT runs as its pulse sequence over the
    actual coupling matrix (spectator couplings refocused away); otherwise
    the ideal gate is applied directly.
    """
    if coupling is None:
        coupling = chain_coupling(cfg)
    j = coupling.J
    for target in range(1, cfg.n_ions):
        if j[0, target] == 0:
            raise UncompilableError(f"J[0,{target}] = 0: CNOT unavailable")
        if compiled:
            seq = gates.cnot_sequence(j, 0, target, active_on=cfg.cnot_active_on)
            state = gates.apply_sequence(state, seq, j)
        else:
            state = _apply_ideal_cnot(state, 0, target, cfg.cnot_active_on)
    return gates.apply_hadamard(state, 0)


def _apply_ideal_cnot(
    state: gates.SpinPhotonState, control: int, target: int, active_on: str
) -> gates.SpinPhotonState:
    """Exact controlled-X on the spin qubits (photons untouched)."""
    n = state.n_ions
    nq = 2 * n
    shift_c = nq - 1 - 2 * control
    shift_t = nq - 1 - 2 * target
    active_bit = 0 if active_on == "e" else 1
    idx = np.arange(4**n)
    flips = ((idx >> shift_c) & 1) == active_bit
    perm = np.where(flips, idx ^ (1 << shift_t), idx)
    return gates.SpinPhotonState(state.amplitudes[perm], n)


@dataclass(frozen=True)
class OutcomeRow:
    """One ion-detection outcome and its heralded photon state."""

    ions: str                      # e.g. "ge"
    photon_amplitudes: np.ndarray  # normalized, dim 2^N
    expression: str                # e.g. "(+|s0 s+> - |s+ s0>)/sqrt2"
    probability: float


@dataclass(frozen=True)
class OutcomeTable:
    n_ions: int
    rows: tuple

    def row_by_ions(self, ions: str) -> OutcomeRow:
        for row in self.rows:
            if row.ions == ions:
                return row
        raise KeyError(ions)


def _photon_label(index: int, n: int) -> str:
    bits = [(index >> (n - 1 - i)) & 1 for i in range(n)]
    return " ".join(PHOTON_CHARS[b] for b in bits)


def format_photon_state(amps: np.ndarray) -> str:
    """Render a photon statevector.

    Balanced two-term states print as "(+|a> - |b>)/sqrt2" with the global
    phase fixed so the highest-index term is positive and positive terms
    listed first; anything else falls back to a plain sum of terms.
    """
    n = int(round(math.log2(len(amps)))) if len(amps) > 1 else 1
    mags = np.abs(amps)
    if mags.max() == 0:
        return "0"
    nz = np.nonzero(mags > 1e-10 * mags.max())[0]
    work = amps.copy()
    anchor = work[nz[-1]]
    work = work * (abs(anchor) / anchor)
    if (
        len(nz) == 2
        and np.all(np.abs(mags[nz] - 1 / math.sqrt(2)) < 1e-9)
        and np.all(np.abs(work[nz].imag) < 1e-10)
    ):
        terms = sorted(
            ((1 if work[i].real > 0 else -1, int(i)) for i in nz),
            key=lambda t: (-t[0], t[1]),
        )
        body = f"+|{_photon_label(terms[0][1], n)}>"
        for sign, i in terms[1:]:
            body += f" {'+' if sign > 0 else '-'} |{_photon_label(i, n)}>"
        return f"({body})/sqrt2"
    parts = []
    for i in nz:
        c = work[int(i)]
        coef = f"{c.real:+.6g}" if abs(c.imag) < 1e-12 else f"+({c:.6g})"
        parts.append(f"{coef}|{_photon_label(int(i), n)}>")
    return " ".join(parts)


def outcome_table(state: gates.SpinPhotonState) -> OutcomeTable:
    """Project onto every ion-basis string and normalize the photon rest."""
    n = state.n_ions
    tensor = state.amplitudes.reshape([2] * (2 * n))
    # move spin axes first, photon axes last
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    grouped = np.transpose(tensor, order).reshape(2**n, 2**n)
    rows = []
    for s in range(2**n):
        photon = grouped[s].copy()
        prob = float(np.sum(np.abs(photon) ** 2))
        if prob > 0:
            photon /= math.sqrt(prob)
        ions = "".join(
            SPIN_CHARS[(s >> (n - 1 - i)) & 1] for i in range(n)
        )
        rows.append(
            OutcomeRow(
                ions=ions,
                photon_amplitudes=photon,
                expression=format_photon_state(photon) if prob > 0 else "0",
                probability=prob,
            )
        )
    return OutcomeTable(n_ions=n, rows=tuple(rows))


def timing_estimate(n_ions: int, t0: float, t1: float) -> float:
    """Minimum protocol duration (N-1) t0 + t1."""
    if n_ions < 2:
        raise DomainError("timing needs at least two ions")
    if t0 < 0 or t1 < 0:
        raise DomainError("times must be >= 0")
    return (n_ions - 1) * t0 + t1


def default_cnot_time(coupling: crystal.CouplingMatrix) -> float:
    """Worst-case per-CNOT time pi / (2 min_k J_1k) for the gate chain.

    The compiled sequences carry no extra echo time (spectator cancellation
    happens inside the same delay), so this equals the compiled duration of
    the slowest CNOT.
    """
    j = coupling.J
    j_row = np.abs(j[0, 1:])
    if np.any(j_row == 0):
        raise UncompilableError("vanishing coupling from ion 1")
    return math.pi / (2.0 * float(np.min(j_row)))


def success_rate(n_ions: int, per_ion_p) -> tuple[float, float]:
    """(rate for one specific target photon state, rate for any outcome)."""
    p = [float(x) for x in per_ion_p]
    if any(not 0.0 <= x <= 1.0 for x in p):
        raise DomainError("probabilities must be in [0, 1]")
    total = math.prod(p)
    return total / 2**n_ions, total


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Documented substream rule: SeedSequence(entropy=seed, spawn_key=(k,))."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(trial_index,))
    )


@dataclass(frozen=True)
class RunReport:
    """Sampling summary of one protocol configuration."""

    trials: int
    seed: int
    per_ion_p: tuple
    p_total: float
    n_success: int
    failed_emissions: int
    counts: dict               # ion string -> count (all 2^N strings)
    frequencies: dict          # ion string -> count / n_success
    within_3sigma: dict        # ion string -> bool (vs uniform 1/2^N)
    t0_s: float
    t0_compiled_s: float
    t1_s: float
    timing_s: float
    rate_specific_state: float
    rate_any_state: float
    cnot_active_on: str
    table: OutcomeTable = field(compare=False)

    def __post_init__(self):
        if self.n_success + self.failed_emissions != self.trials:
            raise DomainError("trial accounting does not add up")


def sample_run(cfg: ExperimentConfig, trials: int) -> RunReport:
    """Run the pipeline once, then Monte Carlo sample the measurement.

    Each trial first draws overall emission success (probability
    prod_m P_m), then an ion string from the outcome table.  Deterministic
    given (seed, trials).
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    coupling = chain_coupling(cfg)
    state, probs = emission_stage(cfg)
    state = entangle_stage(state, cfg, coupling=coupling)
    table = outcome_table(state)

    p_total = math.prod(probs)
    cum = np.cumsum([row.probability for row in table.rows])
    cum[-1] = max(cum[-1], 1.0)   # guard the last bin against roundoff
    counts = np.zeros(len(table.rows), dtype=np.int64)
    failed = 0
    for k in range(trials):
        rng = trial_rng(cfg.seed, k)
        if rng.random() >= p_total:
            failed += 1
            continue
        counts[int(np.searchsorted(cum, rng.random(), side="right"))] += 1

    n_success = int(counts.sum())
    p_uniform = 1.0 / len(table.rows)
    freqs, flags = {}, {}
    sigma = (
        math.sqrt(p_uniform * (1 - p_uniform) / n_success) if n_success else 0.0
    )
    for row, c in zip(table.rows, counts):
        f = c / n_success if n_success else 0.0
        freqs[row.ions] = f
        flags[row.ions] = bool(abs(f - p_uniform) <= 3.0 * sigma) if n_success else False

    t0_compiled = max(
        gates.cnot_sequence(coupling.J, 0, t, active_on=cfg.cnot_active_on).total_duration
        for t in range(1, cfg.n_ions)
    )
    t0 = cfg.t0 if cfg.t0 is not None else default_cnot_time(coupling)
    rate_specific, rate_any = success_rate(cfg.n_ions, probs)
    return RunReport(
        trials=trials,
        seed=cfg.seed,
        per_ion_p=tuple(probs),
        p_total=p_total,
        n_success=n_success,
        failed_emissions=failed,
        counts={row.ions: int(c) for row, c in zip(table.rows, counts)},
        frequencies=freqs,
        within_3sigma=flags,
        t0_s=t0,
        t0_compiled_s=t0_compiled,
        t1_s=cfg.t1,
        timing_s=timing_estimate(cfg.n_ions, t0, cfg.t1),
        rate_specific_state=rate_specific,
        rate_any_state=rate_any,
        cnot_active_on=cfg.cnot_active_on,
        table=table,
    )
