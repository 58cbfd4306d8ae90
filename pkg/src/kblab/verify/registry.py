"""Registry of checkable estimates, per-check reports and the full suite."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import checks
from .sampling import TrialSpec, VerifyGrids

EXACT_SLACK = 1e-12
DRIFT_LIMIT = 2.0
BUNDLE_VERSION = "1"


@dataclass(frozen=True)
class Entry:
    """One estimate: evaluator, direction and default regularity index.

    ``direction`` is "le" for LHS <= C RHS (fitted C = max ratio) and "ge"
    for LHS >= c RHS (fitted c = min ratio).  Exact entries assert C = 1.
    """

    id: str
    anchor: str
    evaluator: Callable
    direction: str = "le"
    exact: bool = False
    s: float = 1.5
    uses: str = "nonlinear"


REGISTRY: dict[str, Entry] = {e.id: e for e in (
    Entry("TRILINEAR", "sum_q 2^{qs}[int |(Delta_q Gamma(f,g), Delta_q h)| dt]^{1/2} <~ ||h||^{1/2} x "
          "[four mixed-norm products with L^inf_T L^2_xi L^inf_x and L^2_T L^2_{xi,nu} L^inf_x slots]",
          checks.trilinear),
    Entry("TRILINEAR_X", "trilinear bound with the L^inf_x slots replaced by X in {B^{3/2}, homogeneous B^{3/2}}",
          checks.trilinear_x),
    Entry("TRILINEAR_P", "trilinear bounds for Gamma(Pf,g), Gamma(f,Pg), Gamma(Pf,Pg)", checks.trilinear_p),
    Entry("NONLIN_ENERGY", "sum_q 2^{3q/2}[int |(Delta_q Gamma(f,f), Delta_q {I-P}f)| dt]^{1/2} <~ sqrt(E_T) D_T, "
          "with Gamma(f,f) = Gamma(Pf,Pf) + Gamma(Pf,{I-P}f) + Gamma({I-P}f,Pf) + Gamma({I-P}f,{I-P}f)",
          checks.nonlinear_energy),
    Entry("MOMENT_BOUND", "sum_q 2^{qs}[int ||Delta_q (Gamma(f,f), zeta)||^2 dt]^{1/2} <~ E_T D_T",
          checks.moment_bound, s=0.5),
    Entry("L_UPPER", "sum_q 2^{qs}[int ||Delta_q (L{I-P}f, zeta)||^2 dt]^{1/2} <~ ||{I-P}f||_{L~^2_T L~^2_nu B^s}",
          checks.l_upper, s=0.5),
    Entry("MACRO_DISS", "||grad(a,b,c)||_{L~^2_T B^{1/2}} <~ ||f0|| + E_T + ||{I-P}f||_{L~^2_T L~^2_nu B^{3/2}} "
          "+ E_T D_T", checks.macro_dissipation, uses="solver"),
    Entry("APRIORI", "E_T + D_T <= C||f0|| + C(sqrt(E_T) + E_T) D_T", checks.a_priori, uses="solver"),
    Entry("COERCIVITY", "(Delta_q L f, Delta_q f) >= lambda_0 ||{I-P} Delta_q f||^2_nu", checks.coercivity,
          direction="ge", uses="linear"),
    Entry("K_BOUND", "(Delta_q K f, Delta_q g) <= C ||Delta_q f|| ||Delta_q g||", checks.k_bound, uses="linear"),
    Entry("BLOCK_BOUND", "||Delta_q u||_{L^p} <= C||u||_{L^p}, ||S_q u||_{L^p} <= C||u||_{L^p}, p in {1,2,inf}",
          checks.block_bound, uses="scalar"),
    Entry("BERNSTEIN_EQUIV", "||grad u||_{L~^rho_T hom B^s} ~ ||u||_{L~^rho_T hom B^{s+1}}", checks.bernstein,
          s=0.5, uses="scalar"),
    Entry("NH_EMBED", "||u||_{L~^rho_T hom B^s} <~ ||u||_{L~^rho_T B^s}", checks.nh_embed, s=0.5, uses="scalar"),
    Entry("CL_ORDER", "r <= min(rho1,rho2): L~ >= L;  r >= max(rho1,rho2): L~ <= L  (constant 1)",
          checks.cl_order, exact=True, uses="norms"),
    Entry("SERIES_CONV", "sum_q sum_{|j-q|<=4} 2^{(q-j)s} c(j) <= ||1_{|j|<=4} 2^{js}||_{l^1} ||c||_{l^1}",
          checks.series_conv, exact=True),
)}


def _num(x: float):
    """JSON-safe float: non-finite values become strings."""
    x = float(x)
    return x if math.isfinite(x) else repr(x)


@dataclass
class InequalityReport:
    inequality_id: str
    anchor: str
    direction: str
    exact: bool
    s: float
    trials: np.ndarray  # trial index per row
    labels: list
    lhs: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray
    skipped: int
    n_trials: int
    refinement: dict = field(default_factory=dict)
    levels: dict = field(default_factory=dict)

    @property
    def max_ratio(self) -> float:
        return float(self.ratio.max()) if self.ratio.size else math.nan

    @property
    def min_ratio(self) -> float:
        return float(self.ratio.min()) if self.ratio.size else math.nan

    @property
    def fitted_C(self) -> float:
        return self.min_ratio if self.direction == "ge" else self.max_ratio

    @property
    def refinement_drift(self) -> float | None:
        return self.refinement.get("drift")

    @property
    def violations(self) -> int:
        """Rows breaking the exact constant 1 (exact entries) or with RHS = 0 < LHS."""
        if self.exact:
            bad = self.ratio < 1.0 - EXACT_SLACK if self.direction == "ge" else self.ratio > 1.0 + EXACT_SLACK
            return int(np.sum(bad))
        return int(np.sum(~np.isfinite(self.ratio)))

    @property
    def passed(self) -> bool:
        if self.violations:
            return False
        if self.exact or not self.ratio.size:
            return True
        if not math.isfinite(self.fitted_C) or (self.direction == "ge" and self.fitted_C <= 0.0):
            return False
        drift = self.refinement_drift
        return drift is None or drift <= DRIFT_LIMIT

    def label_max(self) -> dict:
        """Fitted constant per row label."""
        out = {}
        for lab in sorted(set(self.labels)):
            sel = np.array([x == lab for x in self.labels])
            r = self.ratio[sel]
            out[lab] = float(r.min() if self.direction == "ge" else r.max())
        return out

    def to_dict(self) -> dict:
        return {"inequality_id": self.inequality_id, "anchor": self.anchor, "direction": self.direction,
                "exact": self.exact, "s": self.s, "n_trials": self.n_trials, "skipped": self.skipped,
                "n_rows": int(self.ratio.size), "max_ratio": _num(self.max_ratio),
                "min_ratio": _num(self.min_ratio), "fitted_C": _num(self.fitted_C),
                "per_label": {k: _num(v) for k, v in self.label_max().items()},
                "violations": self.violations,
                "refinement": {k: (_num(v) if isinstance(v, float) else v) for k, v in self.refinement.items()},
                "refinement_drift": None if self.refinement_drift is None else _num(self.refinement_drift),
                "levels": self.levels, "passed": self.passed}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("trial", "label", "lhs", "rhs", "ratio"))
        for t, lab, a, b, r in zip(self.trials, self.labels, self.lhs, self.rhs, self.ratio):
            w.writerow((int(t), lab, repr(float(a)), repr(float(b)), repr(float(r))))
        return buf.getvalue()


def _evaluate(entry: Entry, spec: TrialSpec, level, s: float, n_trials: int):
    trials, labels, lhs, rhs = [], [], [], []
    skipped = 0
    for t in range(n_trials):
        rows = entry.evaluator(spec, level, t, s)
        live = [(lab, float(a), float(b)) for lab, a, b in rows if not (a == 0.0 and b == 0.0)]
        if not live:
            skipped += 1
            continue
        for lab, a, b in live:
            trials.append(t)
            labels.append(lab)
            lhs.append(a)
            rhs.append(b)
    lhs, rhs = np.array(lhs, dtype=float), np.array(rhs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = np.inf if entry.direction == "le" else 0.0
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), bad)
    return np.array(trials, dtype=int), labels, lhs, rhs, ratio, skipped


def _fitted(direction: str, ratio: np.ndarray) -> float:
    if not ratio.size:
        return math.nan
    return float(ratio.min() if direction == "ge" else ratio.max())


def run_check(check_id: str, spec: TrialSpec | None = None, grids: VerifyGrids | None = None,
              tables=None, s: float | None = None, refine: bool = True) -> InequalityReport:
    """Evaluate one registered estimate on spec.n_trials trials.

    Non-exact entries are rerun on the first ``spec.refine_trials`` trials at
    the refined level; the drift is max(C_ref / C_base, C_base / C_ref) over
    that common subset.  ``tables`` overrides the base nonlinear tables.
    """
    if check_id not in REGISTRY:
        raise KeyError(f"unknown inequality id {check_id!r}; known ids: {', '.join(REGISTRY)}")
    entry = REGISTRY[check_id]
    spec = TrialSpec() if spec is None else spec
    grids = VerifyGrids() if grids is None else grids
    s = entry.s if s is None else float(s)
    if not 0.0 < s <= 1.5 and entry.uses != "scalar":
        raise ValueError(f"s must lie in (0, 3/2], got {s}")
    base = grids.level(False)
    if tables is not None:
        base = _with_tables(base, tables)
    trials, labels, lhs, rhs, ratio, skipped = _evaluate(entry, spec, base, s, spec.n_trials)
    refinement: dict = {}
    levels = {"base": base.describe()}
    m = min(spec.refine_trials, spec.n_trials)
    if refine and not entry.exact and m > 0:
        fine = grids.level(True)
        levels["refined"] = fine.describe()
        r_ref = _evaluate(entry, spec, fine, s, m)[4]
        c_base = _fitted(entry.direction, ratio[trials < m])
        c_ref = _fitted(entry.direction, r_ref)
        drift = math.nan
        if c_base > 0 and c_ref > 0 and math.isfinite(c_base) and math.isfinite(c_ref):
            drift = max(c_ref / c_base, c_base / c_ref)
        refinement = {"trials": m, "base": c_base, "refined": c_ref, "drift": drift}
    return InequalityReport(check_id, entry.anchor, entry.direction, entry.exact, s, trials, labels, lhs, rhs,
                            ratio, skipped, spec.n_trials, refinement, levels)


def _with_tables(level, tables):
    """A level whose nonlinear tables are the supplied ones."""
    from .sampling import Level

    class _Pinned(Level):
        @property
        def tables(self):
            return tables

    return _Pinned(level.grid, level.velocity, level.linear_velocity, level.sphere_nodes, level.gamma,
                   level.gamma_order)


@dataclass
class SuiteResult:
    reports: dict
    spec: TrialSpec
    grids: VerifyGrids

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    def bundle(self) -> dict:
        from dataclasses import asdict
        return {"version": BUNDLE_VERSION, "spec": asdict(self.spec), "grids": asdict(self.grids),
                "passed": self.passed, "ids": list(self.reports),
                "reports": {k: r.to_dict() for k, r in self.reports.items()}}

    def to_json(self) -> str:
        return json.dumps(self.bundle(), indent=2, sort_keys=True) + "\n"


def full_suite(spec: TrialSpec | None = None, grids: VerifyGrids | None = None, only=None,
               refine: bool = True, progress: Callable | None = None) -> SuiteResult:
    """Run every registry entry (or the ``only`` subset) with shared seeds."""
    spec = TrialSpec() if spec is None else spec
    grids = VerifyGrids() if grids is None else grids
    ids = list(REGISTRY) if only is None else list(dict.fromkeys(only))
    unknown = [i for i in ids if i not in REGISTRY]
    if unknown:
        raise KeyError(f"unknown inequality id(s): {', '.join(unknown)}")
    reports = {}
    for cid in ids:
        reports[cid] = run_check(cid, spec, grids, refine=refine)
        if progress is not None:
            progress(reports[cid])
    return SuiteResult(reports, spec, grids)


def with_trials(spec: TrialSpec, n_trials: int) -> TrialSpec:
    return replace(spec, n_trials=n_trials)
