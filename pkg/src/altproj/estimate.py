"""Empirical convergence-rate extraction from traces.

Sublinear limits converge at Cesaro speed, so all estimators work on the
log-k tail of a trace; early iterations are always excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .rates import RateKind

NORM_FLOOR = 1e-13


@dataclass
class RateEstimate:
    """Fitted power-law descriptor of a trace tail."""

    fitted_exponent: float
    fitted_constant: float
    r_squared: float
    tail_window: tuple
    product_at_end: float | None = None
    linear_ratio: float | None = None

    def as_kv(self):
        lines = [
            f"fitted_exponent = {self.fitted_exponent:.17g}",
            f"fitted_constant = {self.fitted_constant:.17g}",
            f"r_squared = {self.r_squared:.17g}",
            f"tail_window = {self.tail_window[0]}..{self.tail_window[1]}",
        ]
        if self.product_at_end is not None:
            lines.append(f"product_at_end = {self.product_at_end:.17g}")
        if self.linear_ratio is not None:
            lines.append(f"linear_ratio = {self.linear_ratio:.17g}")
        return "\n".join(lines) + "\n"


def _tail_mask(ks, norms, tail_fraction):
    ks = np.asarray(ks, dtype=float)
    usable = (ks >= 1) & (norms > NORM_FLOOR)
    if not np.any(usable):
        return usable
    kmax = ks[usable].max()
    kmin = kmax ** (1.0 - tail_fraction)
    return usable & (ks >= kmin)


def fit_rate(trace, tail_fraction=0.5):
    """Least-squares fit of log||u_k|| = log C - lam log k on the log-k tail."""
    ks = trace.ks
    norms = trace.rec_norms
    mask = _tail_mask(ks, norms, tail_fraction)
    if mask.sum() < 20:
        raise InsufficientDataError(
            f"only {int(mask.sum())} usable tail records (need 20)")
    x = np.log(ks[mask].astype(float))
    y = np.log(norms[mask])
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateEstimate(fitted_exponent=float(-slope),
                        fitted_constant=float(np.exp(intercept)),
                        r_squared=r2,
                        tail_window=(int(ks[mask].min()), int(ks[mask].max())))


def check_limit_product(trace, pred):
    """Sequence limit_constant * k^lam * ||u_k|| at recorded steps (k >= 1)."""
    if pred.kind is not RateKind.EXACT or pred.limit_constant is None:
        raise ValueError("limit product requires an exact prediction with a constant")
    ks = trace.ks
    norms = trace.rec_norms
    mask = ks >= 1
    k = ks[mask].astype(float)
    p = pred.limit_constant * k ** float(pred.lam) * norms[mask]
    return ks[mask], p


def detect_linear(trace, tail_fraction=0.5, spread_tol=1e-2, ratio_cap=0.999):
    """Limiting step ratio if the trace decays geometrically, else None.

    Steps below a relative floor are dropped: geometric decay reaches the
    solver's numerical scale quickly and stalls there."""
    complete = trace.terminated_reason in ("fixed_point", "tiny_norm")
    if len(trace.norms) < 21 and not complete:
        raise InsufficientDataError(f"trace has only {len(trace.norms)} steps (need 21)")
    floor = max(1e-12, 1e-8 * float(trace.norms[0]))
    norms = trace.norms[trace.norms > floor]
    if len(norms) < 5:
        return None
    ratios = norms[1:] / norms[:-1]
    tail = ratios[int(len(ratios) * (1.0 - tail_fraction)):]
    mean = float(tail.mean())
    spread = float((tail.max() - tail.min()) / mean)
    if spread < spread_tol and mean < ratio_cap:
        return mean
    return None
