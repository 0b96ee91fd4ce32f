"""Experiment driver: policy synthesis + analytic MBF + simulation sweeps to CSV."""

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor

from .config import ExperimentConfig, build_delay
from .ctmc import validate_generator
from .errors import MissingColumnError
from .freshness import EvalContext
from .optimize import SYNTHESIZERS
from .simulator import SimConfig, simulate

log = logging.getLogger("freshquery")

CSV_COLUMNS = ["sweep_value", "policy", "mbf_analytic", "mbf_sim", "sim_stderr", "policy_summary"]
CONTAINMENT_TOL = 1e-6

_MASK = (1 << 64) - 1


def derive_seed(base: int, point_index: int, policy_index: int) -> int:
    """Stable per-job seed (splitmix64-style mixing of the coordinates)."""
    z = (base * 0x9E3779B97F4A7C15 + point_index * 0xBF58476D1CE4E5B9 + policy_index + 1) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def run_sweep_point(cfg: ExperimentConfig, point_index: int, run_sim: bool = True) -> list[dict]:
    """All policy rows for one sweep value."""
    value = float(cfg.sweep_values[point_index])
    g = validate_generator(cfg.generator_rows)
    y = build_delay(cfg.forward_delay, cfg.sweep_parameter, value)
    d = build_delay(cfg.backward_delay, cfg.sweep_parameter, value)
    ctx = EvalContext(g, cfg.estimator, y, d)
    rows = []
    for policy_index, name in enumerate(cfg.policies):
        log.info("sweep %s=%g policy=%s", cfg.sweep_parameter, value, name)
        result = SYNTHESIZERS[name](ctx, w_max=cfg.w_max)
        if result.extras.get("gain_trace"):
            log.debug("gain trace %s: %s", name, result.extras["gain_trace"])
        row = {
            "sweep_value": value,
            "policy": name,
            "mbf_analytic": result.report.mbf,
            "mbf_sim": "",
            "sim_stderr": "",
            "policy_summary": result.policy.summary(),
        }
        if run_sim and cfg.sim.enabled:
            sim_cfg = SimConfig(
                cycles=cfg.sim.cycles,
                seed=derive_seed(cfg.sim.seed, point_index, policy_index),
                burn_in=cfg.sim.burn_in,
            )
            sim = simulate(g, cfg.estimator, y, d, result.policy, sim_cfg)
            row["mbf_sim"] = sim.mbf_hat
            row["sim_stderr"] = sim.stderr
        rows.append(row)
    return rows


def _fmt(x) -> str:
    if x == "":
        return ""
    return f"{float(x):.9g}"


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                _fmt(row["sweep_value"]),
                row["policy"],
                _fmt(row["mbf_analytic"]),
                _fmt(row["mbf_sim"]),
                _fmt(row["sim_stderr"]),
                row["policy_summary"],
            ]
        )
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, run_sim: bool = True, workers: int = 1, out_path: str | None = None) -> str:
    """Run the full sweep and return (and optionally write) the CSV text."""
    n = len(cfg.sweep_values)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_sweep_point, cfg, k, run_sim) for k in range(n)]
            per_point = [f.result() for f in futures]
    else:
        per_point = [run_sweep_point(cfg, k, run_sim) for k in range(n)]
    rows = [row for point in per_point for row in point]
    text = rows_to_csv(rows)
    target = out_path or cfg.output
    if target:
        with open(target, "w", newline="") as fh:
            fh.write(text)
    return text


def read_dataset(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise MissingColumnError("empty dataset")
    for col in ("sweep_value", "policy", "mbf_analytic"):
        if col not in rows[0]:
            raise MissingColumnError(f"dataset lacks column {col!r}")
    return rows


def compare_policies(rows: list[dict], tol: float = CONTAINMENT_TOL):
    """Rank policies per sweep value and flag containment-chain violations.

    Checks opt_wait >= every other policy and state_ind >= cw >= zw.
    Returns (report_lines, violations).
    """
    policies = {r["policy"] for r in rows}
    if len(policies) < 2:
        raise MissingColumnError("need at least two policies to compare")
    by_value: dict[float, dict[str, float]] = {}
    for r in rows:
        by_value.setdefault(float(r["sweep_value"]), {})[r["policy"]] = float(r["mbf_analytic"])
    lines, violations = [], []
    chain = [("state_ind", "cw"), ("cw", "zw"), ("state_ind", "zw")]
    for value in sorted(by_value):
        at = by_value[value]
        ranked = sorted(at.items(), key=lambda kv: -kv[1])
        lines.append(f"{value:.9g}: " + " >= ".join(f"{p}({m:.9g})" for p, m in ranked))
        if "opt_wait" in at:
            for p, m in at.items():
                if p != "opt_wait" and at["opt_wait"] < m - tol:
                    violations.append(f"{value:.9g}: opt_wait < {p} by {m - at['opt_wait']:.3g}")
        for hi, lo in chain:
            if hi in at and lo in at and at[hi] < at[lo] - tol:
                violations.append(f"{value:.9g}: {hi} < {lo} by {at[lo] - at[hi]:.3g}")
    return lines, violations
