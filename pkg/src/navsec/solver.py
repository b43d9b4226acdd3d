"""Multilateration with clock bias and single-fault meaconing hypotheses.

Pseudoranges are ``c * (rx_i - t_i)``: true range plus the client's clock
bias plus any meaconing delay on that navaid. ``solve_fix`` estimates
position and bias by Gauss-Newton (Levenberg damping when a step does not
reduce the cost). With five or more navaids it also tries every "navaid k is
delayed" hypothesis and reports the one that best explains the data.

Two facts limit what any snapshot solver can do here:

* A delay common to every navaid is indistinguishable from clock bias, so
  all-station meaconing looks CLEAN to a client that knows nothing about
  its clock.
* With exactly five navaids every single-fault hypothesis has as many
  unknowns as equations and fits exactly. The only thing separating them is
  that a meaconer can add delay but never remove it, so hypotheses needing a
  negative delay are discarded. Whatever remains is reported in
  ``PositionFix.ambiguous``.

Both go away once the client bounds its own clock error
(``max_clock_bias_ns``): the bias stops absorbing delay and the extra
constraint makes the single-fault hypotheses distinguishable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .core import C, NS_PER_S, NodeId, Position, SimTime, distance

M_PER_NS = C / NS_PER_S


class Verdict(str, Enum):
    CLEAN = "CLEAN"
    MEACONING_DETECTED = "MEACONING_DETECTED"
    MEACONING_SUSPECTED = "MEACONING_SUSPECTED"
    INCONSISTENT = "INCONSISTENT"
    UNDERDETERMINED = "UNDERDETERMINED"


class SolverError(Exception):
    pass


class NoConvergence(SolverError):
    pass


class SingularGeometry(SolverError):
    pass


@dataclass(frozen=True)
class PseudorangeEntry:
    navaid: NodeId
    position: Position
    t: float
    rx: float
    source: str = "p2"

    @property
    def pseudorange_m(self) -> float:
        return (self.rx - self.t) * M_PER_NS


@dataclass(frozen=True)
class PseudorangeSet:
    entries: tuple[PseudorangeEntry, ...] = ()
    quantization: int = 1
    duplicates: frozenset = frozenset()

    def __post_init__(self) -> None:
        ids = [e.navaid for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("navaid ids must be distinct")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ids(self) -> list[NodeId]:
        return [e.navaid for e in self.entries]

    def positions(self) -> np.ndarray:
        return np.array([e.position.as_array() for e in self.entries]).reshape(-1, 3)

    def pseudoranges(self) -> np.ndarray:
        return np.array([e.pseudorange_m for e in self.entries], dtype=float)


@dataclass(frozen=True)
class Hypothesis:
    navaid: NodeId | None
    delay_ns: float
    residual_m: float
    feasible: bool


@dataclass(frozen=True)
class PositionFix:
    position: Position | None
    clock_bias_ns: float
    hypothesis: tuple[NodeId, float] | None
    residual_m: float
    verdict: Verdict
    n: int = 0
    none_residual_m: float = 0.0
    ambiguous: tuple[NodeId, ...] = ()
    hypotheses: tuple[Hypothesis, ...] = field(default=(), repr=False)

    @property
    def accused(self) -> NodeId | None:
        return None if self.hypothesis is None else self.hypothesis[0]

    @property
    def delay_ns(self) -> float:
        return 0.0 if self.hypothesis is None else self.hypothesis[1]

    def to_json(self) -> dict:
        return {
            "position": None if self.position is None else list(self.position),
            "clock_bias_ns": self.clock_bias_ns,
            "accused": None if self.accused is None else self.accused.name,
            "delay_ns": self.delay_ns,
            "residual_m": self.residual_m,
            "none_residual_m": None if math.isinf(self.none_residual_m) else self.none_residual_m,
            "verdict": self.verdict.value,
            "n": self.n,
            "ambiguous": [a.name for a in self.ambiguous],
        }


def time_lower_bound(prs: PseudorangeSet | Iterable[PseudorangeEntry]) -> SimTime:
    """Latest signed transmit time seen: the current time is at least this."""
    ts = [e.t for e in prs]
    if not ts:
        raise ValueError("need at least one entry")
    return max(ts)


def pairwise_timestamp_check(prs: PseudorangeSet, slack_ns: float | None = None) -> list[tuple[NodeId, NodeId, float]]:
    """Pairs whose arrival spacing disagrees with their timestamp spacing by
    more than the signal could take to cross between the two navaids.

    Returns ``(id_i, id_j, excess_ns)`` for each violation; empty means CLEAN.
    """
    if slack_ns is None:
        slack_ns = 2 * prs.quantization
    out = []
    for a, b in itertools.combinations(prs.entries, 2):
        skew = abs((a.rx - b.rx) - (a.t - b.t))
        limit = distance(a.position, b.position) / M_PER_NS + slack_ns
        if skew > limit:
            out.append((a.navaid, b.navaid, skew - limit))
    return out


# -- least squares core -------------------------------------------------------

@dataclass
class _Fit:
    theta: np.ndarray
    rms: float
    jac: np.ndarray


def _model(theta, P, rho, estimate_bias, k):
    n = len(P)
    x = theta[:3]
    diff = x - P
    rng = np.linalg.norm(diff, axis=1)
    rng_safe = np.where(rng > 0, rng, 1.0)
    cols = [-(diff / rng_safe[:, None])]
    r = rho - rng
    j = 3
    if estimate_bias:
        r = r - theta[j]
        cols.append(-np.ones((n, 1)))
        j += 1
    if k is not None:
        e = np.zeros(n)
        e[k] = 1.0
        r = r - theta[j] * e
        cols.append(-e[:, None])
    return r, np.hstack(cols)


def _gauss_newton(P, rho, x0, estimate_bias, k, max_iter, step_tol) -> _Fit:
    # inconsistent data can pull the optimum off to infinity; give up well before
    far_m = 1e3 * max(float(np.ptp(P, axis=0).max()), 1.0)
    n_par = 3 + int(estimate_bias) + int(k is not None)
    theta = np.zeros(n_par)
    theta[:3] = x0
    r, J = _model(theta, P, rho, estimate_bias, k)
    cost = float(r @ r)
    for _ in range(max_iter):
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        cand = theta + step
        r2, J2 = _model(cand, P, rho, estimate_bias, k)
        cost2 = float(r2 @ r2)
        if cost2 > cost * (1 + 1e-12) + 1e-18:
            # Levenberg fallback
            JtJ = J.T @ J
            g = J.T @ r
            damp = np.diag(np.maximum(np.diag(JtJ), 1e-12))
            lam = 1e-3
            accepted = False
            while lam < 1e12:
                step = np.linalg.solve(JtJ + lam * damp, -g)
                cand = theta + step
                r2, J2 = _model(cand, P, rho, estimate_bias, k)
                cost2 = float(r2 @ r2)
                if cost2 < cost:
                    accepted = True
                    break
                lam *= 10.0
            if not accepted:
                # numerical floor: nothing decreases the cost any more
                return _Fit(theta, math.sqrt(cost / len(P)), J)
        stalled = cost - cost2 <= 1e-12 * cost
        theta, r, J, cost = cand, r2, J2, cost2
        if np.linalg.norm(theta[:3] - x0) > far_m:
            raise NoConvergence("fit ran away from the navaids")
        # large-residual fits creep; stop once the cost no longer moves
        if np.linalg.norm(step) < step_tol or stalled:
            return _Fit(theta, math.sqrt(cost / len(P)), J)
    raise NoConvergence(f"no convergence in {max_iter} iterations")


def _starts(P: np.ndarray) -> list[np.ndarray]:
    centroid = P.mean(axis=0)
    centered = P - centroid
    _, s, vt = np.linalg.svd(centered, full_matrices=True)
    normal = vt[-1]
    if normal[2] < 0 or (normal[2] == 0 and normal[1] < 0):
        normal = -normal
    spread = max(float(np.sqrt((centered ** 2).sum(axis=1).mean())), 1.0)
    return [centroid, centroid + spread * normal, centroid - spread * normal]


def _check_geometry(P: np.ndarray) -> None:
    centered = P - P.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[0] == 0 or len(s) < 2 or s[1] / s[0] < 1e-9:
        raise SingularGeometry("navaids are collinear or coincident")


def _best_fit(P, rho, estimate_bias, k, max_iter, step_tol, tie_tol) -> _Fit:
    best = None
    errors = []
    for x0 in _starts(P):
        try:
            fit = _gauss_newton(P, rho, x0, estimate_bias, k, max_iter, step_tol)
        except NoConvergence as e:
            errors.append(e)
            continue
        if best is None or fit.rms < best.rms - tie_tol:
            best = fit
        if best.rms <= tie_tol:
            # later starts can only tie an exact fit, and ties keep the first
            break
    if best is None:
        raise errors[0]
    return best


def _bounded_fit(P, rho, estimate_bias, k, max_iter, step_tol, tie_tol, bias_bound_m) -> _Fit:
    """Best fit with the clock bias (when estimated) held inside ``+-bias_bound_m``.

    An out-of-bound optimum is refitted with the bias pinned to the nearer
    bound, where the constrained optimum of this one-sided problem lies.
    """
    fit = _best_fit(P, rho, estimate_bias, k, max_iter, step_tol, tie_tol)
    if not estimate_bias or bias_bound_m is None or abs(fit.theta[3]) <= bias_bound_m:
        return fit
    b = math.copysign(bias_bound_m, fit.theta[3])
    pinned = _best_fit(P, rho - b, False, k, 20 * max_iter, step_tol, tie_tol)
    theta = np.insert(pinned.theta, 3, b)
    return _Fit(theta, pinned.rms, pinned.jac)


def _condition(J: np.ndarray) -> float:
    s = np.linalg.svd(J, compute_uv=False)
    return math.inf if s[-1] == 0 else float(s[0] / s[-1])


def residuals(prs: PseudorangeSet, position: Position, clock_bias_ns: float = 0.0,
              hypothesis: tuple[NodeId, float] | None = None) -> np.ndarray:
    """Post-fit residuals (m) of ``prs`` under the given solution."""
    P = prs.positions()
    rho = prs.pseudoranges()
    r = rho - clock_bias_ns * M_PER_NS - np.linalg.norm(position.as_array() - P, axis=1)
    if hypothesis is not None:
        k = prs.ids.index(hypothesis[0])
        r[k] -= hypothesis[1] * M_PER_NS
    return r


def solve_fix(
    prs: PseudorangeSet,
    *,
    detection_ratio: float = 10.0,
    residual_threshold: float = 3.0,
    max_iter: int = 50,
    step_tol: float = 1e-10,
    singular_condition: float = 1e8,
    max_clock_bias_ns: float | None = None,
) -> PositionFix:
    """Position, clock bias and (for five or more navaids) a single-delay hypothesis.

    Three entries solve position with the client clock taken as correct;
    four add clock bias; five or more also enumerate one-navaid-delayed
    hypotheses. Hypothesis ties go to the lowest navaid id.

    Four pseudoranges often admit two exact solutions. Nothing in the data
    separates them; the one reached from the earliest start is returned.

    ``max_clock_bias_ns`` is for clients that know how good their clock is.
    It keeps every fitted bias within that bound (plus quantization), which
    removes the five-navaid ambiguity and stops a common delay from hiding
    in the bias. Left as None, the bias is unconstrained.
    """
    n = len(prs)
    if n < 3:
        return PositionFix(None, 0.0, None, 0.0, Verdict.UNDERDETERMINED, n=n)
    P = prs.positions()
    rho = prs.pseudoranges()
    _check_geometry(P)
    estimate_bias = n >= 4
    floor_m = prs.quantization * M_PER_NS
    tie_tol = 1e-6 + 1e-3 * floor_m

    bound_m = None if max_clock_bias_ns is None else (max_clock_bias_ns + prs.quantization) * M_PER_NS
    try:
        none_fit = _bounded_fit(P, rho, estimate_bias, None, max_iter, step_tol, tie_tol, bound_m)
    except NoConvergence:
        if n < 5:
            raise
        # no finite no-fault solution; only the delay hypotheses can explain the data
        none_fit = None
    none_rms = math.inf if none_fit is None else none_fit.rms

    hyps = [Hypothesis(None, 0.0, none_rms, none_fit is not None)]
    chosen, chosen_k = none_fit, None
    ambiguous: list[NodeId] = []
    verdict = Verdict.CLEAN
    if n >= 5:
        fits = {}
        order = sorted(range(n), key=lambda i: prs.entries[i].navaid.raw)
        for k in order:
            try:
                fit = _bounded_fit(P, rho, True, k, max_iter, step_tol, tie_tol, bound_m)
            except NoConvergence:
                continue
            delay_ns = fit.theta[4] / M_PER_NS
            feasible = delay_ns >= -2 * prs.quantization
            hyps.append(Hypothesis(prs.entries[k].navaid, delay_ns, fit.rms, feasible))
            if feasible:
                fits[k] = fit
        if fits:
            best_rms = min(f.rms for f in fits.values())
            tied = [k for k in order if k in fits and fits[k].rms <= best_rms + tie_tol]
            best_k = tied[0]
            if none_rms >= detection_ratio * max(fits[best_k].rms, floor_m):
                verdict = Verdict.MEACONING_DETECTED
                chosen, chosen_k = fits[best_k], best_k
                ambiguous = [prs.entries[k].navaid for k in tied[1:]]

    if chosen is None:
        raise NoConvergence("no model fits these pseudoranges")
    if _condition(chosen.jac) > singular_condition:
        raise SingularGeometry("normal equations are singular at the solution")

    theta = chosen.theta
    bias_ns = theta[3] / M_PER_NS if estimate_bias else 0.0
    hypothesis = None
    if chosen_k is not None:
        hypothesis = (prs.entries[chosen_k].navaid, float(theta[4] / M_PER_NS))
    fix = PositionFix(
        Position.of(theta[:3]), float(bias_ns), hypothesis, chosen.rms, verdict,
        n=n, none_residual_m=none_rms, ambiguous=tuple(ambiguous), hypotheses=tuple(hyps),
    )
    if geometry_consistency(prs, fix, residual_threshold) is Verdict.INCONSISTENT:
        fix = PositionFix(fix.position, fix.clock_bias_ns, fix.hypothesis, fix.residual_m,
                          Verdict.INCONSISTENT, n=n, none_residual_m=fix.none_residual_m,
                          ambiguous=fix.ambiguous, hypotheses=fix.hypotheses)
    return fix


def geometry_consistency(prs: PseudorangeSet, fix: PositionFix, residual_threshold: float = 3.0) -> Verdict:
    """Compare the fitted solution against the signed navaid positions."""
    if fix.position is None:
        return Verdict.UNDERDETERMINED
    r = residuals(prs, fix.position, fix.clock_bias_ns, fix.hypothesis)
    rms = float(np.sqrt(np.mean(r ** 2)))
    return Verdict.INCONSISTENT if rms > residual_threshold else Verdict.CLEAN


def forward_pseudoranges(
    navaids: Sequence[tuple[NodeId, Position]],
    client: Position,
    *,
    t_tx: SimTime = 1_000_000,
    bias_ns: float = 0.0,
    delays_ns: dict | None = None,
    quantization: int = 1,
    integer: bool = False,
) -> PseudorangeSet:
    """Synthetic pseudoranges for a static client.

    Receive times are exact (fractional ns) unless ``integer`` is set, in
    which case they are rounded to whole nanoseconds like simulator output.
    """
    delays_ns = delays_ns or {}
    entries = []
    for nid, p in navaids:
        rx = t_tx + distance(client, p) / M_PER_NS + delays_ns.get(nid, 0) + bias_ns
        entries.append(PseudorangeEntry(nid, p, t_tx, round(rx) if integer else rx))
    return PseudorangeSet(tuple(entries), quantization)
