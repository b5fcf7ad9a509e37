"""Monte Carlo sweeps over circuit draws, table regeneration and result files."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .channels import DecayModel, LossNoise, PauliNoise, eps_from_delay
from .distill import distill, extract_error_component, mse
from .linalg import MAX_DIM
from .pipeline import DilutionPlan, run
from .theory import (
    PAULI_FIELDS,
    cluster_spectrum,
    error_spectrum,
    estimate_loss_averages_all_M,
    estimate_pauli_averages,
    hellinger,
    hellinger_loss_product,
    hellinger_loss_product_exact,
    loss_product_spectrum,
    special_case_gradient,
    special_case_mse,
    steepest_descent,
    SpectrumModel,
)
from .unitaries import RngStream, haar_batch, hardware_efficient, product_haar

# loss runs above this many qubits need ``extended=True``
DEFAULT_MAX_LOSS_QUBITS = 4
CSV_COLUMNS = ("n", "M", "L_err", "eps_or_tau", "mse_mean", "mse_stderr", "samples")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep. ``channel`` is "loss" or "pauli"; a ``decay`` block
    ({"kind", "gamma", "tau_unit"}) turns it into a delay sweep over ``tau_grid``."""

    channel: str = "loss"
    pauli_ratios: tuple[float, float, float] = (1.0, 1.0, 1.0)
    decay: DecayModel | None = None
    n_grid: tuple[int, ...] = (2,)
    M_grid: tuple[int, ...] = (1,)
    L_err_grid: tuple[int, ...] = (1,)
    eps_grid: tuple[float, ...] = (0.02,)
    tau_grid: tuple[float, ...] | None = None
    circuit: str = "haar"
    total_layers: int = 8
    samples: int = 100
    master_seed: int = 0
    output_path: str | None = None
    renormalize_loss: bool = True
    extended: bool = False
    threads: int = 1

    def __post_init__(self):
        for name in ("pauli_ratios", "n_grid", "M_grid", "L_err_grid", "eps_grid", "tau_grid"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(v))
        if isinstance(self.decay, dict):
            object.__setattr__(self, "decay", DecayModel(**self.decay))
        if self.decay is not None:
            object.__setattr__(self, "channel", "loss" if self.decay.kind == "loss" else "pauli")
        self.validate()

    def validate(self) -> None:
        if self.channel not in ("loss", "pauli"):
            raise ConfigError(f"channel must be 'loss' or 'pauli', got {self.channel!r}")
        if self.circuit not in ("haar", "hardware_efficient", "product"):
            raise ConfigError(f"circuit must be haar, hardware_efficient or product, got {self.circuit!r}")
        for name in ("n_grid", "M_grid", "L_err_grid"):
            grid = getattr(self, name)
            if not grid:
                raise ConfigError(f"{name} must be non-empty")
            if min(grid) < 1:
                raise ConfigError(f"{name} entries must be positive")
        x_grid = self.tau_grid if self.decay is not None else self.eps_grid
        if not x_grid:
            raise ConfigError("tau_grid must be non-empty" if self.decay is not None else "eps_grid must be non-empty")
        if min(x_grid) < 0:
            raise ConfigError("noise grid entries must be non-negative")
        if self.decay is None and max(self.eps_grid) > 1:
            raise ConfigError("eps_grid entries must not exceed 1")
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if len(self.pauli_ratios) != 3 or min(self.pauli_ratios) < 0 or sum(self.pauli_ratios) <= 0:
            raise ConfigError("pauli_ratios must be three non-negative numbers with a positive sum")
        if self.circuit == "hardware_efficient":
            if min(self.n_grid) < 2:
                raise ConfigError("hardware-efficient circuits need n >= 2")
            bad = [L for L in self.L_err_grid if self.total_layers % L]
            if bad:
                raise ConfigError(f"L_err values {bad} do not divide total_layers={self.total_layers}")
        for n in self.n_grid:
            dim = (3 if self.channel == "loss" else 2) ** n
            if dim > MAX_DIM:
                raise ConfigError(f"n={n} gives dimension {dim} above the limit {MAX_DIM}")
            if self.channel == "loss" and n > DEFAULT_MAX_LOSS_QUBITS and not self.extended:
                raise ConfigError(f"loss runs with n={n} > {DEFAULT_MAX_LOSS_QUBITS} need extended=True")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        if isinstance(data.get("decay"), dict):
            dk = {f.name for f in fields(DecayModel)}
            extra = sorted(set(data["decay"]) - dk)
            if extra:
                raise ConfigError(f"unknown decay fields: {extra}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **changes) -> ExperimentConfig:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["decay"] = asdict(self.decay) if self.decay is not None else None
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def noise_for(self, eps: float):
        if self.channel == "loss":
            return LossNoise(eps)
        r = np.asarray(self.pauli_ratios, dtype=float)
        return PauliNoise(*(eps * r / r.sum()))


@dataclass
class GridPoint:
    n: int
    M: int | None
    L_err: int
    eps_or_tau: float
    mean: float
    stderr: float
    samples: int
    aux: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    kind: str
    points: list[GridPoint]
    config: dict
    value_name: str = "mse"
    extra_columns: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    def lookup(self, **where) -> GridPoint:
        hits = [p for p in self.points if all(getattr(p, k) == v for k, v in where.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} grid points match {where}")
        return hits[0]

    def columns(self) -> list[str]:
        return ["n", "M", "L_err", "eps_or_tau", f"{self.value_name}_mean", f"{self.value_name}_stderr", "samples",
                *self.extra_columns]

    def rows(self) -> list[list]:
        out = []
        for p in self.points:
            row = [p.n, "" if p.M is None else p.M, p.L_err, p.eps_or_tau, p.mean, p.stderr, p.samples]
            row += [p.aux.get(c, "") for c in self.extra_columns]
            out.append(row)
        return out

    def write(self, path, gnuplot: bool = False) -> tuple[Path, Path]:
        """Write ``<path>.csv`` and the ``<path>.json`` sidecar; returns both paths."""
        base = Path(path)
        if base.suffix in (".csv", ".json"):
            base = base.with_suffix("")
        base.parent.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
        write_csv(csv_path, self.columns(), self.rows())
        meta = {
            "kind": self.kind,
            "version": __version__,
            "config": self.config,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            **self.metadata,
            "points": [_jsonable(asdict(p)) for p in self.points],
        }
        json_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        if gnuplot:
            write_gnuplot(base.with_suffix(".gp"), csv_path, self)
        return csv_path, json_path


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_gnuplot(gp_path: Path, csv_path: Path, result: ExperimentResult) -> None:
    """Plot script: one log-log curve per (n, M, L_err) series."""
    series = sorted({(p.n, p.M, p.L_err) for p in result.points}, key=lambda s: tuple(-1 if v is None else v for v in s))
    lines = [
        "set datafile separator ','",
        "set logscale xy",
        "set key outside",
        "set xlabel 'eps_or_tau'",
        f"set ylabel '{result.value_name}'",
        "set terminal pngcairo size 900,600",
        f"set output '{gp_path.with_suffix('.png').name}'",
    ]
    plots = []
    for n, M, L in series:
        m_cond = "1" if M is None else f"$2=={M}"
        plots.append(
            f"'{csv_path.name}' every ::1 using ($1=={n} && {m_cond} && $3=={L} ? $4 : 1/0):5:6 "
            f"with yerrorlines title 'n={n} M={M} L={L}'"
        )
    lines.append("plot " + ", \\\n     ".join(plots))
    gp_path.write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# sampling helpers
# --------------------------------------------------------------------------


def sample_circuits(config: ExperimentConfig, n: int, L: int, sample: int) -> list[np.ndarray]:
    """Subcircuit unitaries for one sample, from a stream keyed by (n, L, sample).

    Hardware-efficient draws use a stream keyed by (n, sample) only, so every
    L_err splits the same ``total_layers``-layer circuit into equal blocks.
    """
    d = 2**n
    if config.circuit == "hardware_efficient":
        g = RngStream(config.master_seed, (n, sample)).generator()
        angles = g.uniform(0.0, 2 * np.pi, size=(config.total_layers, n, 3))
        per = config.total_layers // L
        return [hardware_efficient(n, per, angles=angles[k * per:(k + 1) * per]).data for k in range(L)]
    g = RngStream(config.master_seed, (n, L, sample)).generator()
    if config.circuit == "haar":
        return list(haar_batch(d, L, g))
    return [product_haar(n, g).data for _ in range(L)]


def map_samples(fn: Callable[[int], object], samples: int, threads: int) -> list:
    """fn(0..samples-1) in sample order, optionally on a thread pool."""
    if threads <= 1:
        return [fn(s) for s in range(samples)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(samples)))


def _stats(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), float("nan")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------


def _sweep(config: ExperimentConfig, xs, eps_of: Callable[[float], float], kind: str) -> ExperimentResult:
    Ms = config.M_grid
    points = []
    for n in config.n_grid:
        for L in config.L_err_grid:

            def one(sample: int, n=n, L=L):
                circuits = sample_circuits(config, n, L, sample)
                vals = np.zeros((len(xs), len(Ms)))
                traces = np.ones(len(xs))
                for i, x in enumerate(xs):
                    eps = eps_of(x)
                    if eps == 0:
                        # the noisy state is the target and distillation leaves it fixed
                        continue
                    out = run(DilutionPlan(circuits, config.noise_for(eps), config.renormalize_loss))
                    traces[i] = out.raw_trace
                    for k, M in enumerate(Ms):
                        vals[i, k] = mse(out.target, distill(out.noisy, M).state)
                return vals, traces

            results = map_samples(one, config.samples, config.threads)
            vals = np.array([r[0] for r in results])
            traces = np.array([r[1] for r in results])
            for i, x in enumerate(xs):
                tmean, _ = _stats(traces[:, i])
                for k, M in enumerate(Ms):
                    mean, se = _stats(vals[:, i, k])
                    points.append(GridPoint(n, M, L, float(x), mean, se, config.samples,
                                            {"eps": eps_of(x), "raw_trace_mean": tmean}))
    return ExperimentResult(kind, points, config.to_dict(), metadata={"seed": config.master_seed})


def run_mse_sweep(config: ExperimentConfig) -> ExperimentResult:
    if config.decay is not None:
        raise ConfigError("config has a decay model; use run_delay_sweep")
    return _sweep(config, config.eps_grid, float, "mse-sweep")


def run_delay_sweep(config: ExperimentConfig) -> ExperimentResult:
    """MSE versus total delay time; each tau is converted to a total error rate."""
    if config.decay is None or config.tau_grid is None:
        raise ConfigError("delay sweeps need a decay model and a tau_grid")
    if config.circuit != "hardware_efficient":
        raise ConfigError("delay sweeps use the hardware-efficient ansatz")
    return _sweep(config, config.tau_grid, lambda tau: eps_from_delay(config.decay, tau), "delay-sweep")


def delay_sweep_config(decay: DecayModel, tau_grid, **kw) -> ExperimentConfig:
    """Cluster scenario defaults: four qubits, eight ansatz layers, L_err in {1, 2, 4}."""
    base = dict(decay=decay, tau_grid=tuple(tau_grid), n_grid=(4,), M_grid=(1, 2, 3), L_err_grid=(1, 2, 4),
                circuit="hardware_efficient", total_layers=8, samples=100)
    base.update(kw)
    return ExperimentConfig(**base)


def run_hellinger(config: ExperimentConfig) -> ExperimentResult:
    """Hellinger distance between the error-component spectrum and uniform.

    Product-circuit loss runs also report the printed closed form and the
    exact product-state value in the extra columns.
    """
    if config.decay is not None:
        raise ConfigError("hellinger sweeps take an eps_grid, not a decay model")
    product_loss = config.channel == "loss" and config.circuit == "product"
    points = []
    for n in config.n_grid:
        d = (3 if config.channel == "loss" else 2) ** n
        for L in config.L_err_grid:

            def one(sample: int, n=n, L=L):
                circuits = sample_circuits(config, n, L, sample)
                row = np.full(len(config.eps_grid), np.nan)
                for i, eps in enumerate(config.eps_grid):
                    if eps == 0:
                        continue
                    noise = config.noise_for(eps)
                    out = run(DilutionPlan(circuits, noise, config.renormalize_loss))
                    rates = noise.rates if config.channel == "pauli" else (1.0, 1.0, 1.0)
                    err = extract_error_component(out, config.channel, rates)
                    row[i] = hellinger(np.clip(error_spectrum(err), 0.0, None), d)
                return row

            vals = np.array(map_samples(one, config.samples, config.threads))
            for i, eps in enumerate(config.eps_grid):
                mean, se = _stats(vals[:, i])
                aux = {}
                x = eps / L
                if product_loss and 0 < x < 1:
                    aux = {"closed_form_printed": hellinger_loss_product(n, x),
                           "closed_form_exact": hellinger_loss_product_exact(n, x),
                           "max_abs_dev_exact": float(np.nanmax(np.abs(vals[:, i] - hellinger_loss_product_exact(n, x))))}
                points.append(GridPoint(n, None, L, float(eps), mean, se, config.samples, aux))
    extra = ("closed_form_printed", "closed_form_exact", "max_abs_dev_exact") if product_loss else ()
    return ExperimentResult("hellinger", points, config.to_dict(), "hellinger", extra, {"seed": config.master_seed})


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------

# Reference Monte Carlo values (10^4 samples) and exact M=1 entries.
REFERENCE_PTR_POWER = {  # <tr[ptr_1(rho)^(2M)]>, keyed by n then M
    2: {1: 4 / 5, 2: 0.6283, 3: 0.5191, 4: 0.4490, 5: 0.3885},
    3: {1: 2 / 3, 2: 0.3934, 3: 0.2605, 4: 0.1808, 5: 0.1311},
    4: {1: 10 / 17, 2: 0.2648, 3: 0.1356, 4: 0.0754, 5: 0.0431},
    5: {1: 6 / 11, 2: 0.1940, 3: 0.0794, 4: 0.0352, 5: 0.0167},
    6: {1: 34 / 65, 2: 0.1604, 3: 0.0544, 4: 0.0201, 5: 0.0075},
}
REFERENCE_SUM_SQ = {  # <(sum_j tr[ptr_j(rho)^M])^2>
    2: {1: 4.0, 2: 2.6278, 3: 2.0963, 4: 1.7994, 5: 1.5547},
    3: {1: 9.0, 2: 4.0678, 3: 2.3808, 4: 1.5438, 5: 1.0734},
    4: {1: 16.0, 2: 5.5635, 3: 2.3935, 4: 1.1653, 5: 0.6196},
    5: {1: 25.0, 2: 7.4374, 3: 2.5432, 4: 0.9705, 5: 0.3969},
    6: {1: 36.0, 2: 9.8520, 3: 2.9229, 4: 0.9272, 5: 0.3104},
}
# Pauli index-case averages, keyed by field then n then L_err
REFERENCE_PAULI = {
    "rhoTT_diff_l_same_j": {
        2: (0.0000, 0.0791, 0.2422, 0.4802), 3: (0.0000, 0.0246, 0.0739, 0.1486),
        4: (0.0000, 0.0071, 0.0204, 0.0415), 5: (0.0000, 0.0019, 0.0054, 0.0110),
        6: (0.0000, 0.0005, 0.0014, 0.0028),
    },
    "rhoTT_diff_j": {
        2: (0.0696, 0.2090, 0.4363, 0.7526), 3: (0.0226, 0.0703, 0.1417, 0.2336),
        4: (0.0061, 0.0201, 0.0397, 0.0679), 5: (0.0017, 0.0053, 0.0109, 0.0175),
        6: (0.0005, 0.0014, 0.0027, 0.0044),
    },
    "rhoT_rhoT_same_same": {
        2: (0.0867, 0.2560, 0.5036, 0.8145), 3: (0.0298, 0.0862, 0.1649, 0.2715),
        4: (0.0092, 0.0268, 0.0489, 0.0809), 5: (0.0026, 0.0070, 0.0134, 0.0217),
        6: (0.0007, 0.0018, 0.0034, 0.0056),
    },
    "rhoT_rhoT_diff_l_same_j": {
        2: (0.0295, 0.1371, 0.3296, 0.5993), 3: (0.0101, 0.0445, 0.1027, 0.1868),
        4: (0.0030, 0.0131, 0.0301, 0.0541), 5: (0.0009, 0.0036, 0.0080, 0.0144),
        6: (0.0002, 0.0009, 0.0021, 0.0037),
    },
    "rhoT_rhoT_diff_j": {
        2: (0.0480, 0.1744, 0.3848, 0.6821), 3: (0.0142, 0.0518, 0.1161, 0.2021),
        4: (0.0038, 0.0144, 0.0316, 0.0559), 5: (0.0010, 0.0038, 0.0084, 0.0150),
        6: (0.0002, 0.0010, 0.0021, 0.0038),
    },
}
TABLE_COLUMNS = ("table", "block", "n", "index", "mean", "stderr", "samples", "reference")


@dataclass
class TableRow:
    table: str
    block: str
    n: int
    index: int  # M for the loss tables, L_err for the Pauli tables
    mean: float
    stderr: float
    samples: int
    reference: float | None

    def as_list(self) -> list:
        return [self.table, self.block, self.n, self.index, self.mean, self.stderr, self.samples,
                "" if self.reference is None else self.reference]


def loss_table_rows(n_grid, M_grid, samples: int, seed: int) -> list[TableRow]:
    rows = []
    for n in n_grid:
        avgs = estimate_loss_averages_all_M(n, M_grid, samples, RngStream(seed, (1, n)))
        for M in M_grid:
            a = avgs[M]
            rows.append(TableRow("loss_ptr_power", "all", n, M, a.avg_ptr_power, a.stderr_ptr_power, samples,
                                 REFERENCE_PTR_POWER.get(n, {}).get(M)))
            rows.append(TableRow("loss_sum_sq", "all", n, M, a.avg_sum_sq, a.stderr_sum_sq, samples,
                                 REFERENCE_SUM_SQ.get(n, {}).get(M)))
    return rows


def pauli_table_rows(n_grid, L_grid, samples: int, seed: int, threads: int = 1) -> list[TableRow]:
    jobs = [(n, L) for n in n_grid for L in L_grid]

    def one(i):
        n, L = jobs[i]
        return estimate_pauli_averages(n, L, samples, RngStream(seed, (2, n, L)))

    rows = []
    for (n, L), avgs in zip(jobs, map_samples(one, len(jobs), threads)):
        for f in PAULI_FIELDS:
            table = "pauli_rhoTT" if f.startswith("rhoTT") else "pauli_rhoT_rhoT"
            ref = REFERENCE_PAULI.get(f, {}).get(n)
            ref = ref[L - 1] if ref is not None and L <= len(ref) else None
            rows.append(TableRow(table, f, n, L, getattr(avgs, f), avgs.stderr[f], samples, ref))
    return rows


def product_spectrum_rows(n_grid, x_grid, seed: int, tol: float = 1e-10) -> list[list]:
    """Observed versus predicted (eigenvalue, multiplicity) pairs of the
    product-state loss error component."""
    rows = []
    for n in n_grid:
        for x in x_grid:
            config = ExperimentConfig(channel="loss", n_grid=(n,), circuit="product", master_seed=seed)
            out = run(DilutionPlan(sample_circuits(config, n, 1, 0), LossNoise(x)))
            observed = cluster_spectrum(error_spectrum(extract_error_component(out, "loss")), tol)
            # merge predicted levels that coincide (all of them at x = 1/2)
            predicted = cluster_spectrum(np.repeat(*map(np.array, zip(*loss_product_spectrum(n, x)))), tol)
            ok = len(observed) == len(predicted) and all(
                mo == mp and abs(vo - vp) <= tol for (vo, mo), (vp, mp) in zip(observed, predicted))
            for k, (vp, mp) in enumerate(predicted):
                vo, mo = observed[k] if k < len(observed) else (float("nan"), 0)
                rows.append([n, x, vp, mp, vo, mo, ok])
    return rows


def run_tables(out_dir, samples: int = 10_000, seed: int = 0, n_grid=(2, 3, 4, 5, 6), M_grid=(1, 2, 3, 4, 5),
               L_grid=(1, 2, 3, 4), threads: int = 1) -> dict[str, list]:
    """Regenerate the loss, Pauli and product-spectrum tables as CSV files in ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    loss = loss_table_rows(n_grid, M_grid, samples, seed)
    pauli = pauli_table_rows(n_grid, L_grid, samples, seed, threads)
    spectrum = product_spectrum_rows((1, 2, 3, 4), (0.01, 0.1, 0.5), seed)
    tables = {
        "loss_ptr_power": [r for r in loss if r.table == "loss_ptr_power"],
        "loss_sum_sq": [r for r in loss if r.table == "loss_sum_sq"],
        "pauli_rhoTT": [r for r in pauli if r.table == "pauli_rhoTT"],
        "pauli_rhoT_rhoT": [r for r in pauli if r.table == "pauli_rhoT_rhoT"],
    }
    for name, rows in tables.items():
        write_csv(out / f"table_{name}.csv", TABLE_COLUMNS, [r.as_list() for r in rows])
    write_csv(out / "table_loss_product_spectrum.csv",
              ("n", "x", "eigenvalue", "multiplicity", "observed_eigenvalue", "observed_multiplicity", "match"),
              spectrum)
    tables["loss_product_spectrum"] = spectrum
    return tables


# --------------------------------------------------------------------------
# special case
# --------------------------------------------------------------------------

SPECIAL_COLUMNS = ("d", "M", "eps0", "uniform_mse", "grad_max_at_uniform", "min_random_mse",
                   "descent_max_dev", "descent_iterations")


def run_special_case(out_path, d_grid=(3, 5, 8), M_grid=(1, 2, 3), eps0: float = 0.1, samples: int = 100,
                     seed: int = 0) -> list[list]:
    """Uniform-spectrum optimality checks for the orthogonal error-component model."""
    rows = []
    for d in d_grid:
        for M in M_grid:
            uni = SpectrumModel.uniform(d, eps0, M)
            g = RngStream(seed, (3, d, M)).generator()
            ps = g.dirichlet(np.ones(d - 1), size=samples)
            min_mse = min(special_case_mse(uni.with_p(p)) for p in ps)
            p_end, iters = steepest_descent(uni.with_p(ps[0]))
            rows.append([d, M, eps0, special_case_mse(uni), float(np.abs(special_case_gradient(uni)).max()),
                         min_mse, float(np.abs(p_end - uni.p).max()), iters])
    if out_path is not None:
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_csv(path, SPECIAL_COLUMNS, rows)
    return rows
