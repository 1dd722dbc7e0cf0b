"""Experiment harness: seeded Monte-Carlo runs, CSV rendering, matrix files.

Every CSV starts with a provenance comment line
``# milac-sim v1 <json-encoded config>``. Realizations run in parallel
(capped by the MILAC_SIM_THREADS environment variable) but results are
buffered and written in realization order, so identical configs and seeds
produce byte-identical output regardless of scheduling.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import channels as ch
from .baselines import fp_digital
from .errors import InvalidConfig, MalformedFile
from .evaluation import channel_orthogonality
from .microwave import (
    ReferenceImpedance,
    ScatteringMatrix,
    SusceptanceMatrix,
    assemble_susceptance,
    scattering_from_susceptance,
    susceptance_from_scattering,
    synthesize_branches,
)
from .optimizer import ConvergenceTrace, OptimizerConfig, default_initialization, run_bcd

PROVENANCE_PREFIX = "# milac-sim v1 "
TRACE_HEADER = "iter,sum_rate_bits,fp_objective_nats,radiated_fraction,unitary_residual"
SWEEP_HEADER = (
    "sweep_var,milac_rate_mean,digital_rate_mean,rel_gap_mean,rel_gap_ci95,"
    "radiated_fraction_mean,orthogonality_mean,n_realizations"
)
THREADS_ENV = "MILAC_SIM_THREADS"

BUDGET_QUARTER = "quarter"
BUDGET_ABSOLUTE = "absolute"

_MAT_MAGIC = "MILAC-MAT v1"


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs shared by the experiment commands; unset sweep axes stay None."""

    k: int = 4
    l: int = 16
    l_list: tuple[int, ...] | None = None
    snr_db: float | None = None
    snr_db_list: tuple[float, ...] | None = None
    channel_model: str = ch.MODEL_RAYLEIGH
    realizations: int = 100
    base_seed: int = 42
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    digital_budget_mode: str = BUDGET_QUARTER
    digital_budget_watts: float | None = None

    def __post_init__(self):
        if self.k < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if self.l < 1:
            raise InvalidConfig(f"l must be >= 1, got {self.l}")
        if self.realizations < 1:
            raise InvalidConfig(f"realizations must be >= 1, got {self.realizations}")
        if self.channel_model not in (ch.MODEL_RAYLEIGH, ch.MODEL_ORTHOGONAL):
            raise InvalidConfig(f"unknown channel model {self.channel_model!r}")
        if self.digital_budget_mode not in (BUDGET_QUARTER, BUDGET_ABSOLUTE):
            raise InvalidConfig(f"unknown digital budget mode {self.digital_budget_mode!r}")
        if self.digital_budget_mode == BUDGET_ABSOLUTE:
            if self.digital_budget_watts is None or self.digital_budget_watts <= 0:
                raise InvalidConfig("absolute digital budget needs positive watts")
        if self.snr_db_list is not None:
            object.__setattr__(self, "snr_db_list", tuple(float(v) for v in self.snr_db_list))
            if not all(np.isfinite(self.snr_db_list)):
                raise InvalidConfig("snr values must be finite")
        if self.l_list is not None:
            object.__setattr__(self, "l_list", tuple(int(v) for v in self.l_list))


def resolve_threads(n_tasks: int) -> int:
    """Worker count for realization-level parallelism, capped by MILAC_SIM_THREADS."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise InvalidConfig(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise InvalidConfig(f"{THREADS_ENV} must be >= 1, got {cap}")
    return max(1, min(cap, n_tasks))


def _parallel_map(fn, tasks: list) -> list:
    workers = resolve_threads(len(tasks))
    if workers == 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _provenance(command: str, cfg: ExperimentConfig) -> str:
    payload = {"command": command, "config": asdict(cfg)}
    return PROVENANCE_PREFIX + json.dumps(payload, sort_keys=True)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _snr_to_power(snr_db: float) -> float:
    # Unit noise power makes the transmit SNR numerically equal to p_t.
    return float(10.0 ** (snr_db / 10.0))


def _channel_for(cfg: ExperimentConfig, l: int, realization: int) -> ch.ChannelSet:
    drawn = ch.generate_rayleigh(cfg.k, l, cfg.base_seed + realization)
    if cfg.channel_model == ch.MODEL_ORTHOGONAL:
        drawn = ch.orthogonalize(drawn)
    return drawn


def _digital_budget(cfg: ExperimentConfig, p_t: float) -> float:
    if cfg.digital_budget_mode == BUDGET_QUARTER:
        return p_t / 4.0
    return float(cfg.digital_budget_watts)


def _run_milac(channel: ch.ChannelSet, p_t: float, cfg: ExperimentConfig) -> ConvergenceTrace:
    sigma2 = ch.unit_noise(cfg.k)
    theta0, p0 = default_initialization(channel.k, channel.l, p_t, channel.seed)
    _, _, _, trace = run_bcd(channel, sigma2, p_t, cfg.optimizer, theta0, p0)
    return trace


def run_convergence(cfg: ExperimentConfig) -> str:
    """Optimizer traces, one per (snr, realization), as a single CSV."""
    if not cfg.snr_db_list:
        raise InvalidConfig("convergence needs a nonempty snr_db_list")
    tasks = [(snr, r) for snr in cfg.snr_db_list for r in range(cfg.realizations)]

    def worker(task: tuple[float, int]) -> ConvergenceTrace:
        snr_db, realization = task
        channel = _channel_for(cfg, cfg.l, realization)
        return _run_milac(channel, _snr_to_power(snr_db), cfg)

    traces = _parallel_map(worker, tasks)

    lines = [_provenance("convergence", cfg), TRACE_HEADER]
    for (snr_db, realization), trace in zip(tasks, traces):
        lines.append(f"# trace snr_db={_fmt(snr_db)} realization={realization}")
        for row in trace.rows:
            lines.append(
                f"{row.iteration},{_fmt(row.sum_rate_bits)},{_fmt(row.fp_objective_nats)},"
                f"{_fmt(row.radiated_fraction)},{_fmt(row.unitary_residual)}"
            )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class _RealizationResult:
    milac_rate: float
    digital_rate: float
    radiated_fraction: float
    orthogonality: float

    @property
    def rel_gap(self) -> float:
        return (self.digital_rate - self.milac_rate) / self.digital_rate


def _compare_once(cfg: ExperimentConfig, l: int, snr_db: float, realization: int) -> _RealizationResult:
    channel = _channel_for(cfg, l, realization)
    p_t = _snr_to_power(snr_db)
    trace = _run_milac(channel, p_t, cfg)
    _, digital_report, _ = fp_digital(
        channel,
        ch.unit_noise(cfg.k),
        _digital_budget(cfg, p_t),
        tolerance=cfg.optimizer.outer_tolerance,
        max_iters=cfg.optimizer.max_outer_iterations,
        bisection_tolerance=cfg.optimizer.bisection_tolerance,
    )
    return _RealizationResult(
        milac_rate=trace.final_rate_bits,
        digital_rate=digital_report.sum_rate,
        radiated_fraction=trace.rows[-1].radiated_fraction,
        orthogonality=channel_orthogonality(channel),
    )


def _sweep_row(sweep_var: float | int, results: list[_RealizationResult]) -> str:
    gaps = np.array([r.rel_gap for r in results])
    ci95 = 1.96 * gaps.std(ddof=1) / np.sqrt(len(gaps)) if len(gaps) > 1 else 0.0
    cells = [
        _fmt(float(sweep_var)),
        _fmt(float(np.mean([r.milac_rate for r in results]))),
        _fmt(float(np.mean([r.digital_rate for r in results]))),
        _fmt(float(gaps.mean())),
        _fmt(float(ci95)),
        _fmt(float(np.mean([r.radiated_fraction for r in results]))),
        _fmt(float(np.mean([r.orthogonality for r in results]))),
        str(len(results)),
    ]
    return ",".join(cells)


def run_snr_sweep(cfg: ExperimentConfig) -> str:
    """Mean analog vs digital sum rate per SNR point, averaged over realizations."""
    if not cfg.snr_db_list:
        raise InvalidConfig("snr sweep needs a nonempty snr_db_list")
    if cfg.channel_model == ch.MODEL_ORTHOGONAL and cfg.l < cfg.k:
        raise InvalidConfig("orthogonal channels need l >= k")
    tasks = [(snr, r) for snr in cfg.snr_db_list for r in range(cfg.realizations)]
    results = _parallel_map(lambda t: _compare_once(cfg, cfg.l, t[0], t[1]), tasks)

    lines = [_provenance("snr-sweep", cfg), SWEEP_HEADER]
    per_snr: dict[float, list[_RealizationResult]] = {snr: [] for snr in cfg.snr_db_list}
    for (snr, _), result in zip(tasks, results):
        per_snr[snr].append(result)
    for snr in cfg.snr_db_list:
        lines.append(_sweep_row(snr, per_snr[snr]))
        if cfg.channel_model == ch.MODEL_ORTHOGONAL:
            for realization, result in enumerate(per_snr[snr]):
                lines.append(
                    f"# rel_gap sweep_var={_fmt(snr)} realization={realization} "
                    f"value={_fmt(abs(result.rel_gap))}"
                )
    return "\n".join(lines) + "\n"


def run_array_sweep(cfg: ExperimentConfig) -> str:
    """Mean analog vs digital sum rate per antenna count at a fixed SNR."""
    if not cfg.l_list:
        raise InvalidConfig("array sweep needs a nonempty l_list")
    if any(l < cfg.k for l in cfg.l_list):
        raise InvalidConfig(f"every antenna count must be >= k={cfg.k}, got {cfg.l_list}")
    snr_db = 10.0 if cfg.snr_db is None else float(cfg.snr_db)
    tasks = [(l, r) for l in cfg.l_list for r in range(cfg.realizations)]
    results = _parallel_map(lambda t: _compare_once(cfg, t[0], snr_db, t[1]), tasks)

    lines = [_provenance("array-sweep", cfg), SWEEP_HEADER]
    per_l: dict[int, list[_RealizationResult]] = {l: [] for l in cfg.l_list}
    for (l, _), result in zip(tasks, results):
        per_l[l].append(result)
    for l in cfg.l_list:
        lines.append(_sweep_row(l, per_l[l]))
    return "\n".join(lines) + "\n"


def synthesize_csv(theta: ScatteringMatrix, z0: float) -> str:
    """Branch susceptances realizing a scattering matrix, as CSV (1-based ports)."""
    impedance = ReferenceImpedance(z0)
    branch = synthesize_branches(susceptance_from_scattering(theta, impedance))
    n = branch.shape[0]
    payload = {"command": "synthesize", "k": theta.k, "l": theta.l, "z0": z0}
    lines = [PROVENANCE_PREFIX + json.dumps(payload, sort_keys=True)]
    lines.append("port_i,port_v,susceptance_siemens")
    for i in range(n):
        for v in range(n):
            lines.append(f"{i + 1},{v + 1},{branch[i, v]:.16e}")
    return "\n".join(lines) + "\n"


def parse_branch_csv(text: str) -> np.ndarray:
    """Inverse of synthesize_csv's data section; used to rebuild the network."""
    rows = [line for line in text.splitlines() if line and not line.startswith("#")]
    if not rows or rows[0] != "port_i,port_v,susceptance_siemens":
        raise MalformedFile("missing branch CSV header")
    entries = []
    for line in rows[1:]:
        parts = line.split(",")
        if len(parts) != 3:
            raise MalformedFile(f"bad branch row: {line!r}")
        entries.append((int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])))
    n = max(i for i, _, _ in entries) + 1
    if len(entries) != n * n:
        raise MalformedFile(f"expected {n * n} branch rows, found {len(entries)}")
    branch = np.zeros((n, n))
    for i, v, value in entries:
        branch[i, v] = value
    return branch


def render_matrix_text(mat: ScatteringMatrix | SusceptanceMatrix) -> str:
    """Serialize a scattering or susceptance matrix to the text format."""
    if isinstance(mat, ScatteringMatrix):
        header = f"scattering {mat.k} {mat.l}"
        values = mat.theta
    else:
        header = f"susceptance {mat.n}"
        values = mat.b.astype(complex)
    lines = [_MAT_MAGIC, header]
    n = values.shape[0]
    for i in range(n):
        for v in range(n):
            lines.append(f"{values[i, v].real:.16e} {values[i, v].imag:.16e}")
    return "\n".join(lines) + "\n"


def parse_matrix_text(text: str) -> ScatteringMatrix | SusceptanceMatrix:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != _MAT_MAGIC:
        raise MalformedFile(f"missing magic line {_MAT_MAGIC!r}")
    if len(lines) < 2:
        raise MalformedFile("missing matrix header line")
    header = lines[1].split()
    try:
        if header[0] == "scattering" and len(header) == 3:
            k, l = int(header[1]), int(header[2])
            n = k + l
        elif header[0] == "susceptance" and len(header) == 2:
            k = l = 0
            n = int(header[1])
        else:
            raise ValueError(header)
    except (ValueError, IndexError) as exc:
        raise MalformedFile("matrix header must be 'scattering K L' or 'susceptance N'") from exc
    entries = lines[2:]
    if len(entries) != n * n:
        raise MalformedFile(f"expected {n * n} entries, found {len(entries)}")
    values = np.empty((n, n), dtype=complex)
    for idx, line in enumerate(entries):
        parts = line.split()
        if len(parts) != 2:
            raise MalformedFile(f"entry line {idx + 3} must be 're im'")
        try:
            values[idx // n, idx % n] = complex(float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise MalformedFile(f"cannot parse entry line {idx + 3}") from exc
    try:
        if header[0] == "scattering":
            return ScatteringMatrix(theta=values, k=k, l=l)
        if np.any(values.imag != 0):
            raise MalformedFile("susceptance entries must be real")
        return SusceptanceMatrix(values.real)
    except ValueError as exc:
        raise MalformedFile(str(exc)) from exc


def save_matrix(path: str | os.PathLike, mat: ScatteringMatrix | SusceptanceMatrix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_matrix_text(mat))


def load_matrix(path: str | os.PathLike) -> ScatteringMatrix | SusceptanceMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_matrix_text(fh.read())


def rebuild_scattering_from_branch_csv(text: str, z0: float, k: int) -> ScatteringMatrix:
    """Round-trip helper: branch CSV -> network susceptance -> scattering."""
    branch = parse_branch_csv(text)
    b = assemble_susceptance(branch)
    return scattering_from_susceptance(b, ReferenceImpedance(z0), k=k)
