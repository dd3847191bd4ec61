"""Skin-color pixel classification in the CbCr plane.

Two classifiers are provided.  The crisp rule accepts a pixel when
77 <= Cb <= 127 and 133 <= Cr <= 173.  The fuzzy classifier softens those
box edges: each chroma channel carries three trapezoidal membership
functions (light / medium / dark), a nine-rule table pairs them up, each
rule fires with the min of its two memberships, and the score is the
firing-weighted average of the binary rule outputs.  A pixel counts as
skin when the score reaches the decision threshold (0.5 by default).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

log = logging.getLogger(__name__)

CHANNEL_LABELS = ("light", "medium", "dark")

CRISP_CB_RANGE = (77.0, 127.0)
CRISP_CR_RANGE = (133.0, 173.0)


def crisp_skin(cb, cr):
    """Boxy skin test on chroma; scalars in, bool out (arrays broadcast)."""
    cb = np.asarray(cb, dtype=np.float64)
    cr = np.asarray(cr, dtype=np.float64)
    ok = (cb >= CRISP_CB_RANGE[0]) & (cb <= CRISP_CB_RANGE[1]) \
        & (cr >= CRISP_CR_RANGE[0]) & (cr <= CRISP_CR_RANGE[1])
    return bool(ok) if ok.ndim == 0 else ok


@dataclass(frozen=True)
class MembershipFunction:
    """Trapezoid on [0, 255] with breakpoints a <= b <= c <= d.

    Degree is 0 outside (a, d), 1 on [b, c], and linear on the shoulders.
    a == b or c == d makes the corresponding side vertical.
    """

    label: str
    breaks: tuple[float, float, float, float]

    def __post_init__(self):
        a, b, c, d = self.breaks
        if not (0.0 <= a <= b <= c <= d <= 255.0):
            raise InvalidParameterError(
                f"membership breakpoints must be ordered within [0, 255], got {self.breaks}")

    def degree(self, x):
        a, b, c, d = self.breaks
        xs = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(xs)
        out[(xs >= b) & (xs <= c)] = 1.0
        if b > a:
            rise = (xs > a) & (xs < b)
            out[rise] = (xs[rise] - a) / (b - a)
        if d > c:
            fall = (xs > c) & (xs < d)
            out[fall] = (d - xs[fall]) / (d - c)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FuzzyRule:
    """One table entry: antecedent labels for Cb and Cr, binary output."""

    cb: str
    cr: str
    output: int

    def __post_init__(self):
        if self.cb not in CHANNEL_LABELS or self.cr not in CHANNEL_LABELS:
            raise InvalidParameterError(f"rule labels must be in {CHANNEL_LABELS}, got {self}")
        if self.output not in (0, 1):
            raise InvalidParameterError(f"rule output must be 0 or 1, got {self.output!r}")


def _default_cb_memberships():
    return (
        MembershipFunction("light", (0.0, 0.0, 67.0, 87.0)),
        MembershipFunction("medium", (67.0, 87.0, 117.0, 137.0)),
        MembershipFunction("dark", (117.0, 137.0, 255.0, 255.0)),
    )


def _default_cr_memberships():
    return (
        MembershipFunction("light", (0.0, 0.0, 123.0, 143.0)),
        MembershipFunction("medium", (123.0, 143.0, 163.0, 183.0)),
        MembershipFunction("dark", (163.0, 183.0, 255.0, 255.0)),
    )


def _default_rules():
    # Skin fires for medium Cb with medium or dark Cr, and dark Cb with
    # medium Cr; the other six label pairs are non-skin.
    skin_pairs = {("medium", "medium"), ("medium", "dark"), ("dark", "medium")}
    return tuple(
        FuzzyRule(cb, cr, 1 if (cb, cr) in skin_pairs else 0)
        for cb in CHANNEL_LABELS for cr in CHANNEL_LABELS
    )


@dataclass(frozen=True)
class FisConfig:
    """Complete parameterization of the fuzzy skin classifier."""

    cb_memberships: tuple[MembershipFunction, ...] = field(default_factory=_default_cb_memberships)
    cr_memberships: tuple[MembershipFunction, ...] = field(default_factory=_default_cr_memberships)
    rules: tuple[FuzzyRule, ...] = field(default_factory=_default_rules)
    decision_threshold: float = 0.5

    def __post_init__(self):
        for name, mfs in (("cb", self.cb_memberships), ("cr", self.cr_memberships)):
            labels = tuple(m.label for m in mfs)
            if labels != CHANNEL_LABELS:
                raise InvalidParameterError(
                    f"{name} memberships must be labeled {CHANNEL_LABELS} in order, got {labels}")
            if not _covers_channel(mfs):
                raise InvalidParameterError(
                    f"{name} memberships leave part of [0, 255] with zero degree")
        pairs = sorted((r.cb, r.cr) for r in self.rules)
        expected = sorted((cb, cr) for cb in CHANNEL_LABELS for cr in CHANNEL_LABELS)
        if pairs != expected:
            raise InvalidParameterError("rule table must contain each label pair exactly once")
        if not 0.0 < self.decision_threshold < 1.0:
            raise InvalidParameterError(
                f"decision threshold must lie in (0, 1), got {self.decision_threshold!r}")

    def to_dict(self) -> dict:
        return {
            "cb": {m.label: list(m.breaks) for m in self.cb_memberships},
            "cr": {m.label: list(m.breaks) for m in self.cr_memberships},
            "rules": [{"cb": r.cb, "cr": r.cr, "output": r.output} for r in self.rules],
            "threshold": self.decision_threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FisConfig":
        try:
            cb = tuple(MembershipFunction(lbl, tuple(float(v) for v in data["cb"][lbl]))
                       for lbl in CHANNEL_LABELS)
            cr = tuple(MembershipFunction(lbl, tuple(float(v) for v in data["cr"][lbl]))
                       for lbl in CHANNEL_LABELS)
            rules = tuple(FuzzyRule(r["cb"], r["cr"], int(r["output"])) for r in data["rules"])
            thr = float(data["threshold"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed fuzzy classifier config: {exc}") from exc
        return cls(cb, cr, rules, thr)


def _covers_channel(mfs) -> bool:
    # Positive degree everywhere on [0, 255]: check breakpoints and a fine
    # grid (membership is piecewise linear, so gaps show up immediately).
    probes = np.unique(np.concatenate([
        np.linspace(0.0, 255.0, 2048),
        np.array([v for m in mfs for v in m.breaks]),
    ]))
    total = np.zeros_like(probes)
    for m in mfs:
        total = np.maximum(total, m.degree(probes))
    return bool((total > 0.0).all())


def fuzzify(x, memberships) -> tuple:
    """Degrees of one value under the channel's three memberships."""
    return tuple(m.degree(x) for m in memberships)


def defuzzify(firing, outputs) -> float:
    """Firing-weighted average of rule outputs.

    With every firing degree at zero there is nothing to average; the
    classifier reports 0 (non-skin) and logs the degenerate input.
    """
    p = np.asarray(firing, dtype=np.float64)
    z = np.asarray(outputs, dtype=np.float64)
    if p.shape != z.shape:
        raise InvalidInputError(f"firing/output length mismatch: {p.shape} vs {z.shape}")
    total = p.sum()
    if total <= 0.0:
        log.warning("all rule firing degrees are zero; returning 0")
        return 0.0
    return float((p * z).sum() / total)


def fis_evaluate(cb: float, cr: float, config: FisConfig | None = None) -> float:
    """Fuzzy skin score of one chroma pair, in [0, 1]."""
    cfg = config or FisConfig()
    cb_deg = dict(zip(CHANNEL_LABELS, fuzzify(float(cb), cfg.cb_memberships)))
    cr_deg = dict(zip(CHANNEL_LABELS, fuzzify(float(cr), cfg.cr_memberships)))
    firing = [min(cb_deg[r.cb], cr_deg[r.cr]) for r in cfg.rules]
    return defuzzify(firing, [r.output for r in cfg.rules])


def skin_probability(img_ycbcr, config: FisConfig | None = None) -> np.ndarray:
    """Per-pixel fuzzy skin score for a YCbCr image."""
    cfg = config or FisConfig()
    ycc = np.asarray(img_ycbcr, dtype=np.float64)
    if ycc.ndim != 3 or ycc.shape[2] != 3:
        raise InvalidInputError(f"expected a YCbCr image (h, w, 3), got shape {ycc.shape}")
    cb_deg = {m.label: m.degree(ycc[..., 1]) for m in cfg.cb_memberships}
    cr_deg = {m.label: m.degree(ycc[..., 2]) for m in cfg.cr_memberships}
    num = np.zeros(ycc.shape[:2])
    den = np.zeros(ycc.shape[:2])
    for rule in cfg.rules:
        p = np.minimum(cb_deg[rule.cb], cr_deg[rule.cr])
        den += p
        if rule.output:
            num += p
    uncovered = den <= 0.0
    if uncovered.any():
        log.warning("%d pixels fired no rule; scoring them 0", int(uncovered.sum()))
        den = np.where(uncovered, 1.0, den)
        num = np.where(uncovered, 0.0, num)
    return num / den


def skin_mask(img_ycbcr, config: FisConfig | None = None) -> np.ndarray:
    """Boolean mask of pixels whose fuzzy score reaches the threshold."""
    cfg = config or FisConfig()
    return skin_probability(img_ycbcr, cfg) >= cfg.decision_threshold


def crisp_mask(img_ycbcr) -> np.ndarray:
    """Boolean mask under the crisp chroma box."""
    ycc = np.asarray(img_ycbcr, dtype=np.float64)
    if ycc.ndim != 3 or ycc.shape[2] != 3:
        raise InvalidInputError(f"expected a YCbCr image (h, w, 3), got shape {ycc.shape}")
    return crisp_skin(ycc[..., 1], ycc[..., 2])
