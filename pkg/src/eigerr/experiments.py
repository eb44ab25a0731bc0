"""Experiment orchestration: desk-scale reproductions of the validation runs.

Each experiment is a deterministic function of (config, seed) that writes
analysis-ready CSV/JSON files plus a manifest with content hashes. Child RNG
seeds are derived from the master seed by counter-based keys per (matrix,
replicate), so results are independent of execution order and thread count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .estimators import (
    BootstrapConfig,
    ErrorSample,
    bootstrap_error,
    h_exact_all,
    h_hat,
    regime_violation,
    write_estimates_csv,
)
from .graphs import is_connected, laplacian, sample_regular_graph
from .hdensity import F_H, HDensityParams, f_H, tail_report, write_hdensity_csv, write_tail_report_json
from .spectral import (
    SpectralDensity,
    eig_sym,
    estimate_density,
    extract_gap_records,
    joint_gap_pdf,
    wigner_surmise_cdf,
    wigner_surmise_pdf,
    write_gap_csv,
)
from .wishart import child_seed, sample_wishart_scaled, sqrt_psd

__all__ = ["ExperimentConfig", "ConfigError", "EXPERIMENTS", "run", "validate"]


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


@dataclass
class ExperimentConfig:
    """Knobs shared by all experiments; `n` may carry several sample sizes."""

    p: int = 100
    k: int = 20
    n: tuple = (10_000_000,)
    R: int = 10
    M: int = 10
    lambda0: float = 20.0
    delta: float = 1.0
    seed: int = 0
    out: Path = field(default_factory=lambda: Path("out"))
    threads: int = 1

    def __post_init__(self):
        self.n = tuple(int(v) for v in (self.n if hasattr(self.n, "__iter__") else (self.n,)))
        self.out = Path(self.out)

    def check(self):
        problems = []
        if self.p < 2:
            problems.append("p must be >= 2")
        if not 1 <= self.k < self.p:
            problems.append("need p > k >= 1")
        if (self.p * self.k) % 2 != 0:
            problems.append("p*k must be even")
        if not self.n or any(v < self.p for v in self.n):
            problems.append("every n must satisfy n >= p")
        if self.R < 1 or self.M < 1:
            problems.append("R and M must be >= 1")
        if self.delta <= 0:
            problems.append("delta must be positive")
        if self.threads < 1:
            problems.append("threads must be >= 1")
        if problems:
            raise ConfigError("; ".join(problems))

    def as_dict(self):
        d = asdict(self)
        d["n"] = list(self.n)
        d["out"] = str(self.out)
        return d


def _map_indexed(fn, count, threads):
    # Deterministic parallel map: results land in index order.
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _sample_ensemble(config, count=None):
    count = config.M if count is None else count

    def build(m):
        g = sample_regular_graph(config.p, config.k, child_seed(config.seed, 0, m))
        return laplacian(g), is_connected(g)

    results = _map_indexed(build, count, config.threads)
    mats = [r[0] for r in results]
    connected = [r[1] for r in results]
    return mats, connected


def _bulk_pools(mats):
    # Laplacian spectra minus the zero (Perron) eigenvalue each matrix carries.
    return [m.eigenvalues[1:] for m in mats]


def _ensemble_density(mats, bin_width=None):
    return estimate_density(_bulk_pools(mats), bin_width=bin_width)


def _pool_gap_records(mats, lambda0, delta):
    pooled = []
    for m in mats:
        pooled.extend(extract_gap_records(m.eigenvalues, lambda0, delta))
    return pooled


def _write_csv(path, header, rows):
    def cell(v):
        if isinstance(v, bool):
            return str(int(v))
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, float):
            return repr(v)
        return str(v)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell(v) for v in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_density(config, out):
    mats, connected = _sample_ensemble(config)
    density = _ensemble_density(mats)
    grid = density.grid
    mckay = SpectralDensity.mckay(config.k)
    _write_csv(out / "density.csv", ["lambda", "rho_empirical", "rho_mckay"],
               zip(grid.tolist(), density(grid).tolist(), mckay(grid).tolist()))
    _write_json(out / "stats.json", {
        "matrices": config.M,
        "disconnected": int(sum(not c for c in connected)),
        "bin_width": density.bandwidth,
    })
    return ["density.csv", "stats.json"]


def _run_spacing(config, out):
    mats, _ = _sample_ensemble(config)
    records = _pool_gap_records(mats, config.lambda0, config.delta)
    if not records:
        raise RuntimeError("no eigenvalues found in the spacing window")
    write_gap_csv(out / "gaps.csv", records)
    rho = SpectralDensity.mckay(config.k)(config.lambda0)
    normalized = np.array([config.p * r.s_plus for r in records])
    # KS against the surmise for t = p*s with scale rho(lambda0).
    t_sorted = np.sort(normalized)
    cdf = wigner_surmise_cdf(t_sorted, 1.0, rho)
    steps = np.arange(1, t_sorted.size + 1) / t_sorted.size
    ks = float(np.max(np.maximum(np.abs(steps - cdf),
                                 np.abs(steps - 1.0 / t_sorted.size - cdf))))
    hist, edges = np.histogram(normalized, bins=50, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    _write_csv(out / "spacing.csv", ["s_normalized", "empirical_pdf", "surmise_pdf"],
               zip(centers.tolist(),
                   hist.tolist(),
                   np.asarray(wigner_surmise_pdf(centers, 1.0, rho)).tolist()))
    _write_json(out / "stats.json", {
        "ks_statistic": ks,
        "gap_count": len(records),
        "rho_mckay": rho,
    })
    return ["gaps.csv", "spacing.csv", "stats.json"]


def _run_joint_gaps(config, out):
    mats, _ = _sample_ensemble(config)
    records = _pool_gap_records(mats, config.lambda0, config.delta)
    if not records:
        raise RuntimeError("no eigenvalues found in the gap window")
    rho = SpectralDensity.mckay(config.k)(config.lambda0)
    a = config.p * rho
    sm = np.array([r.s_minus for r in records])
    sp = np.array([r.s_plus for r in records])
    hi = 3.5 / a
    nb = 10
    edges = np.linspace(0.0, hi, nb + 1)
    counts, _, _ = np.histogram2d(sm, sp, bins=[edges, edges])
    p_emp = counts / len(records)
    centers = 0.5 * (edges[:-1] + edges[1:])
    p_mod = _joint_cell_masses(edges, config.p, rho)
    l1 = float(np.abs(p_emp - p_mod).sum() + abs(p_emp.sum() - p_mod.sum()))
    rows = []
    for i, ci in enumerate(centers):
        for j, cj in enumerate(centers):
            rows.append((ci, cj, float(p_emp[i, j]), float(p_mod[i, j])))
    _write_csv(out / "joint_gaps.csv",
               ["s_minus_center", "s_plus_center", "cell_prob_empirical", "cell_prob_surmise"],
               rows)
    _write_json(out / "stats.json", {"l1_distance": l1, "gap_count": len(records)})
    return ["joint_gaps.csv", "stats.json"]


def _joint_cell_masses(edges, p, rho, refine=6):
    # Cell probabilities of J by midpoint refinement inside each cell.
    nb = len(edges) - 1
    out = np.empty((nb, nb))
    for i in range(nb):
        xs = np.linspace(edges[i], edges[i + 1], refine + 1)
        xm = 0.5 * (xs[:-1] + xs[1:])
        dx = xs[1] - xs[0]
        for j in range(nb):
            ys = np.linspace(edges[j], edges[j + 1], refine + 1)
            ym = 0.5 * (ys[:-1] + ys[1:])
            dy = ys[1] - ys[0]
            gx, gy = np.meshgrid(xm, ym, indexing="ij")
            out[i, j] = joint_gap_pdf(gx, gy, p, rho).sum() * dx * dy
    return out


def _bulk_estimate_rows(mat, density, config, n):
    ev = mat.eigenvalues
    p = ev.size
    hx = h_exact_all(ev)
    rows = []
    for i in range(1, p - 1):  # interior indices only (two-sided gaps)
        lam = ev[i]
        sm, sp = ev[i] - ev[i - 1], ev[i + 1] - ev[i]
        rho_i = float(density(lam))
        hh = h_hat(lam, sm, sp, p, rho_i, include_correction=True)
        hh0 = h_hat(lam, sm, sp, p, rho_i, include_correction=False)
        rows.append({
            "index": i + 1,
            "lambda": float(lam),
            "h_exact": float(hx[i]),
            "h_hat": float(hh),
            "h_hat_uncorrected": float(hh0),
            "n_mean_error": None,
            "n_std_error": None,
            "regime_violation": bool(regime_violation(n, hx[i])) if hx[i] > 0 else False,
        })
    return rows


def _run_hhat_vs_h(config, out):
    mats, _ = _sample_ensemble(config)
    density = _ensemble_density(mats)
    rows = _bulk_estimate_rows(mats[0], density, config, config.n[0])
    write_estimates_csv(out / "estimates.csv", rows)
    hx = np.array([r["h_exact"] for r in rows])
    hh = np.array([r["h_hat"] for r in rows])
    hh0 = np.array([r["h_hat_uncorrected"] for r in rows])
    log_corr = float(np.corrcoef(np.log(hx), np.log(hh))[0, 1])
    lower = hx <= np.median(hx)
    _write_json(out / "stats.json", {
        "log_pearson_corr": log_corr,
        "median_rel_err_corrected_lower_half": float(np.median(np.abs(hh[lower] / hx[lower] - 1.0))),
        "median_rel_err_uncorrected_lower_half": float(np.median(np.abs(hh0[lower] / hx[lower] - 1.0))),
        "bulk_indices": int(hx.size),
    })
    return ["estimates.csv", "stats.json"]


def _run_bootstrap_vs_hhat(config, out):
    mats, _ = _sample_ensemble(config)
    density = _ensemble_density(mats)
    mat = mats[0]
    n = config.n[0]
    result = bootstrap_error(mat, BootstrapConfig(R=config.R, n=n, seed=int(
        child_seed(config.seed, 1, 0).generate_state(1)[0])))
    rows = _bulk_estimate_rows(mat, density, config, n)
    for row in rows:
        i = row["index"] - 1
        row["n_mean_error"] = float(result.n_mean[i])
        row["n_std_error"] = float(result.n_std[i])
    write_estimates_csv(out / "estimates.csv", rows)
    hh = np.array([r["h_hat"] for r in rows])
    hx = np.array([r["h_exact"] for r in rows])
    nm = np.array([r["n_mean_error"] for r in rows])
    ok = hx <= 2.0 * n
    rel = np.abs(nm[ok] / hh[ok] - 1.0)
    _write_json(out / "stats.json", {
        "median_rel_deviation": float(np.median(rel)),
        "indices_in_regime": int(ok.sum()),
        "crossing_indices": int((result.crossing_count > 0).sum()),
    })
    return ["estimates.csv", "stats.json"]


def _fh_grid(params, n_points=60):
    h_typ = 4.0 * (params.lam * params.a) ** 2
    return np.geomspace(h_typ / 100.0, h_typ * 1000.0, n_points)


def _run_fh_density(config, out):
    mats, _ = _sample_ensemble(config)
    density = _ensemble_density(mats)
    rho0 = float(density(config.lambda0))
    if rho0 <= 0:
        raise RuntimeError(
            f"empirical density vanishes at lambda0={config.lambda0}; "
            "choose a window inside the bulk")
    params = HDensityParams(lam=config.lambda0, p=config.p, rho=rho0)

    h_rows = []
    for m, mat in enumerate(mats):
        ev = mat.eigenvalues
        hx = h_exact_all(ev)
        for rec in extract_gap_records(ev, config.lambda0, config.delta):
            i = rec.index - 1
            rho_i = float(density(rec.lam))
            h_rows.append((m, rec.index, rec.lam, float(hx[i]),
                           float(h_hat(rec.lam, rec.s_minus, rec.s_plus, config.p, rho_i))))
    if not h_rows:
        raise RuntimeError("no eigenvalues found in the window")
    _write_csv(out / "h_empirical.csv",
               ["matrix", "index", "lambda", "h_exact", "h_hat"], h_rows)

    n = config.n[0]

    def boot(m):
        cfg = BootstrapConfig(R=config.R, n=n, seed=int(
            child_seed(config.seed, 1, m).generate_state(1)[0]))
        return bootstrap_error(mats[m], cfg)

    boots = _map_indexed(boot, len(mats), config.threads)
    b_rows = []
    for m, mat in enumerate(mats):
        ev = mat.eigenvalues
        for rec in extract_gap_records(ev, config.lambda0, config.delta):
            i = rec.index - 1
            b_rows.append((m, rec.index, rec.lam,
                           float(boots[m].n_mean[i]), float(boots[m].n_std[i])))
    _write_csv(out / "bootstrap.csv",
               ["matrix", "index", "lambda", "n_mean_error", "n_std_error"], b_rows)

    grid = _fh_grid(params)
    fh = [f_H(h, params) for h in grid]
    cdf = [F_H(h, params) for h in grid]
    write_hdensity_csv(out / "fh.csv", grid, fh, cdf)

    h_emp = np.array([r[3] for r in h_rows])
    _write_json(out / "stats.json", {
        "rho_at_lambda0": rho0,
        "window_count": len(h_rows),
        "median_h_empirical": float(np.median(h_emp)),
        "regime_violation_fraction": float(np.mean(h_emp > 2.0 * n)),
    })
    return ["h_empirical.csv", "bootstrap.csv", "fh.csv", "stats.json"]


def _run_tail(config, out):
    rho = SpectralDensity.mckay(config.k)(config.lambda0)
    if rho <= 0:
        raise RuntimeError(f"McKay density vanishes at lambda0={config.lambda0}")
    params = HDensityParams(lam=config.lambda0, p=config.p, rho=rho)
    report = tail_report(params)
    write_tail_report_json(out / "tail.json", report)
    grid = np.geomspace(report.window[0], report.window[1], 25)
    fh = [f_H(h, params) for h in grid]
    cdf = [F_H(h, params) for h in grid]
    write_hdensity_csv(out / "fh_tail.csv", grid, fh, cdf)
    return ["tail.json", "fh_tail.csv"]


def _run_bound_scatter(config, out):
    mats, _ = _sample_ensemble(config, count=1)
    mat = mats[0]
    ev = mat.eigenvalues
    hx = h_exact_all(ev)
    c_root = sqrt_psd(mat)
    rows = []
    for ni, n in enumerate(config.n):
        for r in range(config.R):
            seed = child_seed(config.seed, 2, ni, r)
            draw = sample_wishart_scaled(c_root, n, seed)
            _, v_tilde = eig_sym(draw.matrix)
            dots = np.abs(np.einsum("ij,ij->j", mat.eigenvectors, v_tilde))
            res = np.clip(2.0 * (1.0 - dots), 0.0, 2.0)
            for i in range(ev.size):
                sample = ErrorSample(index=i + 1, residual=float(res[i]),
                                     n=n, replicate=r)
                rows.append((sample.n, sample.replicate, sample.index,
                             float(ev[i]), float(hx[i]), sample.residual,
                             sample.n * sample.residual,
                             bool(hx[i] > 0 and regime_violation(n, hx[i]))))
    _write_csv(out / "bound_scatter.csv",
               ["n", "replicate", "index", "lambda", "h_exact",
                "residual", "n_residual", "regime_violation"], rows)
    return ["bound_scatter.csv"]


EXPERIMENTS = {
    "density": _run_density,
    "spacing": _run_spacing,
    "joint-gaps": _run_joint_gaps,
    "hhat-vs-h": _run_hhat_vs_h,
    "bootstrap-vs-hhat": _run_bootstrap_vs_hhat,
    "fh-density": _run_fh_density,
    "tail": _run_tail,
    "bound-scatter": _run_bound_scatter,
    # Same pipeline as fh-density; run with small R or small n to expose the
    # two bootstrap failure modes.
    "bootstrap-discrepancy": _run_fh_density,
}


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def run(experiment, config):
    """Run one named experiment; returns the manifest dict.

    Writes the experiment's data files plus `manifest.json` (config echo,
    output hashes, wall time) into config.out. Deterministic per seed and
    thread count.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"choose from {sorted(EXPERIMENTS)}")
    config.check()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    outputs = EXPERIMENTS[experiment](config, out)
    manifest = {
        "experiment": experiment,
        "config": config.as_dict(),
        "outputs": [{"path": name, "sha256": _sha256(out / name)} for name in outputs],
        "wall_time_s": time.perf_counter() - started,
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


def validate(config):
    """Pre-flight checks; returns a report dict with warnings only.

    Flags `regime_violation` when any configured n falls below the h/2 bound
    for a pilot estimate at lambda0, and `delta_sensitivity` when the
    delta-normalized gap-record rate shifts by more than 20% under halving
    or doubling of delta.
    """
    config.check()
    pilot_count = min(config.M, 5)
    mats, _ = _sample_ensemble(config, count=pilot_count)
    density = _ensemble_density(mats)
    warnings = []

    records = _pool_gap_records(mats, config.lambda0, config.delta)
    pilot_h = None
    if records:
        rho0 = float(density(config.lambda0))
        if rho0 > 0:
            hh = [h_hat(r.lam, r.s_minus, r.s_plus, config.p, rho0) for r in records]
            pilot_h = float(np.median(hh))
            for n in config.n:
                if regime_violation(n, pilot_h):
                    warnings.append(
                        f"regime_violation: n={n} is below the bound "
                        f"{pilot_h / 2.0:.3g} implied by the pilot estimate")
        else:
            warnings.append("window_outside_bulk: density vanishes at lambda0")
    else:
        warnings.append("empty_window: no eigenvalues within delta of lambda0")

    rates = {}
    for label, d in (("half", config.delta / 2), ("base", config.delta), ("double", config.delta * 2)):
        cnt = len(_pool_gap_records(mats, config.lambda0, d))
        rates[label] = cnt / (2.0 * d * pilot_count)
    if rates["base"] > 0:
        for label in ("half", "double"):
            shift = abs(rates[label] / rates["base"] - 1.0)
            if shift > 0.2:
                warnings.append(
                    f"delta_sensitivity: {label} delta shifts the normalized "
                    f"record rate by {100 * shift:.0f}%")

    return {
        "config": config.as_dict(),
        "pilot_h_hat": pilot_h,
        "bound_n": None if pilot_h is None else pilot_h / 2.0,
        "record_rates_per_unit_delta": rates,
        "warnings": warnings,
        "ok": not warnings,
    }
