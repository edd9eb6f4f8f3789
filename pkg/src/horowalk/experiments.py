"""Config-driven estimator runs: one config in, one table and one record out."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from . import estimators as est
from . import oracles, strips
from .coarse import Shadow
from .config import ExperimentConfig, ResultRecord, csv_text, version_string
from .spaces import TreePoint
from .walks import StepDistribution
from .words import parse


@dataclass
class Table:
    header: list[str]
    rows: list[list]
    payload: dict

    def csv(self) -> str:
        return csv_text(self.header, self.rows)


def _is_simple(mu: StepDistribution, rank: int) -> bool:
    return mu == StepDistribution.uniform(rank)


def _drift(cfg: ExperimentConfig) -> Table:
    n = int(cfg.params["n"])
    d = est.estimate_drift(cfg.step, n, cfg.trials, cfg.seed,
                           check=not cfg.params.get("allow_elementary", False))
    payload = {"L_hat": d.L_hat, "stderr": d.stderr, "n": n, "trials": d.trials}
    if _is_simple(cfg.step, cfg.rank) and cfg.model == "tree":
        mean, _ = oracles.distance_chain_moments(n, cfg.rank)
        payload["oracle"] = mean / n
    return Table(["n", "trials", "L_hat", "stderr"], [[n, d.trials, d.L_hat, d.stderr]], payload)


def _tail(cfg: ExperimentConfig) -> Table:
    ns = [int(x) for x in cfg.params["ns"]]
    L = float(cfg.params["L"])
    tails = est.drift_tails(cfg.step, ns, L, cfg.trials, cfg.seed)
    simple = _is_simple(cfg.step, cfg.rank) and cfg.model == "tree"
    rows = []
    for n in ns:
        t = tails[n]
        exact = float(oracles.lower_tail(n, L * n, cfg.rank)) if simple else float("nan")
        rows.append([n, t.count, t.trials, t.p, t.lo, t.hi, exact])
    return Table(["n", "count", "trials", "p_hat", "lo", "hi", "oracle"], rows,
                 {"L": L, "tails": {n: tails[n].p for n in ns}})


def _persistence(cfg: ExperimentConfig) -> Table:
    p = cfg.params
    C, C0 = p.get("C", 0), p.get("C0", est.TREE_C0)
    if "k" in p and "R" in p:
        k, R, choice = int(p["k"]), Fraction(p["R"]), None
    else:
        choice = est.choose_persistence_params(cfg.step, float(p.get("eps", 0.1)), C, C0,
                                               seed=cfg.seed + 1)
        k, R = choice.k, Fraction(choice.R)
    st = est.persistence_experiment(cfg.step, int(p["n"]), k, R, cfg.trials, cfg.seed, C, C0)
    ci = st.interval(0.99)
    rows = [[t, z, st.segments, ok] for t, (z, ok) in enumerate(zip(st.Z, st.bound_ok))]
    payload = {"k": k, "R": R, "density": st.density, "ci99": [ci.lo, ci.hi],
               "bound_ok": all(st.bound_ok)}
    if choice is not None:
        payload["recipe"] = {"hitting": choice.hitting, "chi_tail": choice.chi_tail}
    return Table(["trial", "Z", "segments", "bound_ok"], rows, payload)


def _hitting(cfg: ExperimentConfig) -> Table:
    p = cfg.params
    S = Shadow(TreePoint(parse(p["base"])), TreePoint(parse(p["center"])), Fraction(p["R"]))
    horizon = int(p["horizon"])
    h = est.hitting_prob(cfg.step, S, horizon, cfg.trials, cfg.seed, p.get("direction", "forward"))
    stride = max(1, horizon // 50)
    times = sorted(set(range(0, horizon + 1, stride)) | {horizon})
    rows = [[t, h.by(t).count, cfg.trials, h.by(t).p] for t in times]
    return Table(["t", "hits", "trials", "p_hat"], rows, {"p": h.p, "horizon": horizon})


def _decay(cfg: ExperimentConfig) -> Table:
    p = cfg.params
    word = parse(p["word"]) if "word" in p else None
    fit = est.shadow_decay(cfg.step, int(p["r1"]), int(p["r2"]), cfg.trials, cfg.seed, word)
    simple = _is_simple(cfg.step, cfg.rank)
    rows = []
    for r, c, m in zip(fit.r, fit.counts, fit.mass):
        exact = float(oracles.harmonic_cylinder_mass(r, cfg.rank)) if simple else float("nan")
        rows.append([r, c, cfg.trials, m, exact])
    payload = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual,
               "unresolved": fit.unresolved, "dropped": list(fit.dropped)}
    return Table(["r", "count", "trials", "mass", "oracle"], rows, payload)


def _translation(cfg: ExperimentConfig) -> Table:
    n, L = int(cfg.params["n"]), float(cfg.params["L"])
    st = est.translation_growth(cfg.step, n, L, cfg.trials, cfg.seed)
    rows = [[t, e, "" if f is None else f, g]
            for t, (e, f, g) in enumerate(zip(st.tau_exact, st.tau_formula, st.guard))]
    payload = {"tail": st.tail.p, "tail_hi": st.tail.hi, "formula_agrees": st.formula_agrees}
    return Table(["trial", "tau_exact", "tau_formula", "guard"], rows, payload)


def _tracking(cfg: ExperimentConfig) -> Table:
    n = int(cfg.params["n"])
    ex = est.tracking_experiment(cfg.step, n, cfg.trials, cfg.seed, int(cfg.params.get("n_min", 100)))
    rows = [[t, s.final_ratio, s.max_log_ratio] for t, s in enumerate(ex.series)]
    fr, lr = ex.final_ratios(), ex.max_log_ratios()
    payload = {"unresolved": ex.unresolved,
               "frac_final_le_0.01": float((fr <= 0.01).mean()) if len(fr) else math.nan,
               "max_log_ratio_p95": float(sorted(lr)[int(0.95 * (len(lr) - 1))]) if len(lr) else math.nan}
    if "log_bound" in cfg.params and len(lr):
        payload["frac_log_below_bound"] = float((lr < float(cfg.params["log_bound"])).mean())
    return Table(["trial", "final_ratio", "max_log_ratio"], rows, payload)


def _midpoint(cfg: ExperimentConfig) -> Table:
    n = int(cfg.params["n"])
    st = est.midpoint_gp_experiment(cfg.step, n, cfg.trials, cfg.seed)
    rows = [[t, a, b] for t, (a, b) in enumerate(zip(st.gp_mid.tolist(), st.gp_cross.tolist()))]
    l = float(cfg.params.get("l", 0.125))
    payload = {"m": st.m, "frac_mid": st.frac_mid_at_least(l), "frac_cross": st.frac_cross_at_most()}
    return Table(["trial", "gp_mid", "gp_cross"], rows, payload)


def _strips(cfg: ExperimentConfig) -> Table:
    p = cfg.params
    params = strips.BGParams(Fraction(p["K"]), Fraction(p["R"]), parse(p["v"]))
    n = int(p["n"])
    series = strips.strip_criterion_series(cfg.step, params, n, cfg.trials, cfg.seed)
    rows = []
    for t, s in enumerate(series):
        if s is None:
            rows.append([t, "", "", "", 0])
        else:
            rows.append([t, s.at(n), s.strip_times, s.density, 1])
    ok = [s for s in series if s is not None]
    payload = {"resolved": len(ok),
               "frac_le_0.01": sum(s.at(n) <= 0.01 for s in ok) / len(ok) if ok else math.nan,
               "strip_density": sum(s.strip_times for s in ok) / (n * len(ok)) if ok else math.nan}
    return Table(["trial", "log_card_over_n", "strip_times", "density", "resolved"], rows, payload)


RUNNERS = {
    "drift": _drift,
    "tail": _tail,
    "persistence": _persistence,
    "hitting": _hitting,
    "decay": _decay,
    "translation": _translation,
    "tracking": _tracking,
    "midpoint": _midpoint,
    "strips": _strips,
}


def run(cfg: ExperimentConfig) -> tuple[Table, ResultRecord]:
    t0 = time.perf_counter()
    table = RUNNERS[cfg.estimator](cfg)
    rec = ResultRecord(cfg.digest(), version_string(), cfg.estimator, table.payload,
                       time.perf_counter() - t0)
    return table, rec


def strip_growth_table(alpha: str, beta: str, K, R, v: str, r_max: int) -> Table:
    from .spaces import end_of

    pair = strips.BoundaryPair(end_of(alpha), end_of(beta))
    params = strips.BGParams(Fraction(K), Fraction(R), parse(v))
    counts = strips.growth_counts(pair, params, r_max)
    rows = [[r, c, strips.growth_bound(params, r)] for r, c in enumerate(counts)]
    return Table(["r", "count", "bound"], rows, {"N": strips.local_bound(params)})
