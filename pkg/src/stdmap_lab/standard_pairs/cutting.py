"""One-step cuts of measure pairs into the L / I / J / E classes.

Pushing a pair forward splits its image into fully-crossing pairs (L),
standard pairs (I), substandard pairs (J), and an uncontrolled error
mass (E).  Which zones are treated how depends on the input class:

  * standard pairs lose their eta = 1/2 strip portion to E, and the
    strip-free image splits at integer verticals into L plus short
    leftovers that also go to E;
  * substandard pairs (already strip-free) are subdivided to lengths in
    [L^-1/2, 2 L^-1/2]; every subpiece stretches across at least one
    full window, and leftovers are classified by length into I, J or E;
  * fully-crossing pairs additionally process the annulus between the
    eta = 1/2 and eta = 1/4 strips, whose image pieces land in J or E.

Masses are exact integrals of the input density between computed cut
points, so each step conserves mass to quadrature accuracy.  Children
come back as columnar SpecBatch objects (a cut at L produces ~4L of
them); materialize only what will be cut again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvariantViolation
from ..geometry import strip_intervals_cached
from .curves import (
    A0_DEFAULT,
    MeasurePair,
    Regularity,
    f_gamma_parts,
    invert_f_gamma_batch,
    make_child_pair,
    make_children_batch,
    validate_pair,
)

_ZERO_LEN = 1e-13


@dataclass
class SpecBatch:
    """Deferred image pairs of one zone of one cut, stored columnar.

    Rows share the parent, class, and strip level; arrays hold the
    preimage interval [a, b], the integer window, the child domain
    [lo, hi], and the carried mass.
    """

    parent: MeasurePair
    regularity: Regularity
    eta: float
    a: np.ndarray
    b: np.ndarray
    window: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    mass: np.ndarray

    def __len__(self):
        return self.a.size

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def materialize_row(self, i: int) -> MeasurePair:
        return make_child_pair(
            self.parent, float(self.a[i]), float(self.b[i]), int(self.window[i]),
            float(self.lo[i]), float(self.hi[i]), self.regularity, self.eta,
            mass=float(self.mass[i]),
        )

    def materialize_all(self):
        return make_children_batch(
            self.parent, self.a, self.b, self.window, self.lo, self.hi,
            self.regularity, self.eta, self.mass,
        )


@dataclass
class DecompositionStep:
    """Result of one cut: class inventories (spec batches) plus error mass."""

    input_mass: float
    full: list = field(default_factory=list)
    standard: list = field(default_factory=list)
    substandard: list = field(default_factory=list)
    error_mass: float = 0.0
    full_mass: float = 0.0
    standard_mass: float = 0.0
    substandard_mass: float = 0.0
    full_count: int = 0
    standard_count: int = 0
    substandard_count: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def masses(self):
        return (self.full_mass, self.standard_mass, self.substandard_mass, self.error_mass)

    @property
    def child_count(self) -> int:
        return self.full_count + self.standard_count + self.substandard_count

    @property
    def conservation_defect(self) -> float:
        return abs(sum(self.masses) - self.input_mass)

    def batches(self):
        yield from self.full
        yield from self.standard
        yield from self.substandard

    def _add_batch(self, batch: SpecBatch, collect_specs: bool):
        if len(batch) == 0:
            return
        m = batch.total_mass()
        if batch.regularity is Regularity.FULL_CROSSING:
            self.full_mass += m
            self.full_count += len(batch)
            if collect_specs:
                self.full.append(batch)
        elif batch.regularity is Regularity.STANDARD:
            self.standard_mass += m
            self.standard_count += len(batch)
            if collect_specs:
                self.standard.append(batch)
        else:
            self.substandard_mass += m
            self.substandard_count += len(batch)
            if collect_specs:
                self.substandard.append(batch)


# ---------------------------------------------------------------------------
# interval bookkeeping
# ---------------------------------------------------------------------------

def _lifted_strip_pieces(lo: float, hi: float, strips):
    """Intersections of [lo, hi] with the mod-1 strips lifted to the cover."""
    pieces = []
    for (sa, sb) in strips:
        for k in range(math.floor(lo) - 1, math.floor(hi) + 2):
            a, b = sa + k, sb + k
            if b > lo and a < hi:
                pieces.append((max(a, lo), min(b, hi)))
    pieces.sort()
    return pieces


def components_minus_strips(lo: float, hi: float, strips):
    """([lo,hi] minus strip lifts) as (free_components, removed_pieces)."""
    removed = _lifted_strip_pieces(lo, hi, strips)
    free = []
    cursor = lo
    for (a, b) in removed:
        if a - cursor > _ZERO_LEN:
            free.append((cursor, a))
        cursor = max(cursor, b)
    if hi - cursor > _ZERO_LEN:
        free.append((cursor, hi))
    return free, removed


def _image_parts(pair: MeasurePair, x):
    return f_gamma_parts(pair.curve, np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# splitting one monotone strip-free piece at integer verticals
# ---------------------------------------------------------------------------

def _window_split(pair: MeasurePair, u: float, v: float, step: DecompositionStep,
                  *, leftovers: str, eta: float, a0: float, collect_specs: bool,
                  full_to: Regularity = Regularity.FULL_CROSSING):
    """Split the image of [u, v] (monotone, strip-free) at integer verticals.

    leftovers = "error": short end pieces join E (standard cut);
    leftovers = "classify": they are routed by length to I / J / E.
    `full_to` is the class of full-window pieces: L for (fully-crossing)
    standard inputs, I for substandard inputs.
    """
    L = pair.L
    (nu, ru) = _image_parts(pair, u)
    (nv, rv) = _image_parts(pair, v)
    fu = nu + ru
    fv = nv + rv
    if fv > fu:
        A_int, A_frac, B_int, B_frac = nu, ru, nv, rv
        xA, xB = u, v
    else:
        A_int, A_frac, B_int, B_frac = nv, rv, nu, ru
        xA, xB = v, u

    k_first = int(A_int) + (1 if A_frac > 0.0 else 0)
    k_last = int(B_int)
    targets = np.arange(k_first, k_last + 1, dtype=float)

    if targets.size:
        cuts = invert_f_gamma_batch(
            pair.curve, targets, np.zeros_like(targets),
            np.full(targets.shape, min(u, v)), np.full(targets.shape, max(u, v)),
            strict=False,
        )
    else:
        cuts = np.empty(0)

    # stations ordered by increasing image value
    st_int = np.concatenate(([A_int], targets, [B_int]))
    st_frac = np.concatenate(([A_frac], np.zeros_like(targets), [B_frac]))
    st_x = np.concatenate(([xA], cuts, [xB]))

    anti = pair.density.antiderivative(st_x)
    masses = pair.mass * np.abs(np.diff(anti))
    lengths = (st_int[1:] - st_int[:-1]) + (st_frac[1:] - st_frac[:-1])
    a_arr = np.minimum(st_x[:-1], st_x[1:])
    b_arr = np.maximum(st_x[:-1], st_x[1:])
    win = st_int[:-1]
    lo_arr = st_frac[:-1]

    valid = lengths > _ZERO_LEN
    is_full = valid & (st_frac[:-1] == 0.0) & (st_frac[1:] == 0.0) \
        & (st_int[1:] - st_int[:-1] == 1.0)
    step.error_mass += float(masses[~valid].sum())

    if np.any(is_full):
        m = is_full
        step._add_batch(SpecBatch(
            parent=pair, regularity=full_to, eta=eta,
            a=a_arr[m], b=b_arr[m], window=win[m],
            lo=np.zeros(int(m.sum())), hi=np.ones(int(m.sum())),
            mass=masses[m],
        ), collect_specs)

    rest = valid & ~is_full
    if not np.any(rest):
        return
    if leftovers == "error":
        step.error_mass += float(masses[rest].sum())
        return

    to_std = rest & (lengths > a0)
    to_sub = rest & ~to_std & (lengths >= L ** -0.5)
    to_err = rest & ~to_std & ~to_sub
    step.error_mass += float(masses[to_err].sum())
    for mask, cls in ((to_std, Regularity.STANDARD), (to_sub, Regularity.SUBSTANDARD)):
        if np.any(mask):
            step._add_batch(SpecBatch(
                parent=pair, regularity=cls, eta=eta,
                a=a_arr[mask], b=b_arr[mask], window=win[mask],
                lo=lo_arr[mask], hi=lo_arr[mask] + lengths[mask],
                mass=masses[mask],
            ), collect_specs)


# ---------------------------------------------------------------------------
# the three cuts
# ---------------------------------------------------------------------------

def cut_standard(pair: MeasurePair, a0: float = A0_DEFAULT, *,
                 collect_specs: bool = True, validate: bool = True) -> DecompositionStep:
    """Push a standard pair one step: full windows to L, the rest to E."""
    if validate:
        if pair.regularity is Regularity.SUBSTANDARD:
            raise InvariantViolation("cut_standard needs a standard pair")
        validate_pair(pair, a0=a0)
    L = pair.L
    step = DecompositionStep(input_mass=pair.mass)
    strips = strip_intervals_cached(L, 0.5)
    free, removed = components_minus_strips(pair.curve.lo, pair.curve.hi, strips)
    if len(free) > 3:
        raise InvariantViolation(
            f"strip-free part has {len(free)} components; at most three expected"
        )
    for (a, b) in removed:
        step.error_mass += float(pair.integral_over(a, b))
    for (u, v) in free:
        _window_split(pair, u, v, step, leftovers="error", eta=0.5,
                      a0=a0, collect_specs=collect_specs)
    return step


def cut_substandard(pair: MeasurePair, a0: float = A0_DEFAULT, *,
                    collect_specs: bool = True, validate: bool = True) -> DecompositionStep:
    """Push a substandard pair: images cross at least one window; classify ends."""
    if validate:
        if pair.regularity is not Regularity.SUBSTANDARD:
            raise InvariantViolation("cut_substandard needs a substandard pair")
        validate_pair(pair, a0=a0)
    L = pair.L
    step = DecompositionStep(input_mass=pair.mass)
    lo, hi = pair.curve.lo, pair.curve.hi
    length = hi - lo
    max_len = 2.0 * L ** -0.5
    m = max(1, math.ceil(length / max_len - 1e-12))
    edges = np.linspace(lo, hi, m + 1)
    image_lengths = []
    for i in range(m):
        u, v = float(edges[i]), float(edges[i + 1])
        (nu, ru) = _image_parts(pair, u)
        (nv, rv) = _image_parts(pair, v)
        img_len = abs((nv - nu) + (rv - ru))
        image_lengths.append(img_len)
        if img_len < 1.0:
            raise InvariantViolation(
                f"substandard image spans {img_len:.6g} < 1 window"
            )
        _window_split(pair, u, v, step, leftovers="classify", eta=0.5,
                      a0=a0, collect_specs=collect_specs,
                      full_to=Regularity.STANDARD)
    step.stats["image_lengths"] = image_lengths
    return step


def cut_full(pair: MeasurePair, a0: float = A0_DEFAULT, *,
             collect_specs: bool = True, validate: bool = True) -> DecompositionStep:
    """Push a fully-crossing pair with the three-zone treatment.

    The inner eta = 1/4 strips feed E directly; the strip-free part is
    handled like a standard cut with classified leftovers; the annulus
    between the strip levels maps to order-one image pieces that are
    split along the image-side strips into J and E.
    """
    if validate:
        if pair.regularity is not Regularity.FULL_CROSSING or not pair.curve.fully_crossing:
            raise InvariantViolation("cut_full needs a fully-crossing standard pair")
        validate_pair(pair, a0=a0)
    L = pair.L
    if L < 1000.0:
        raise InvariantViolation(
            "full cut requires L >= 1e3 (inner-zone slope bound 1/(2 L^1/4 - 1/10))"
        )
    step = DecompositionStep(input_mass=pair.mass)
    outer = strip_intervals_cached(L, 0.5)
    inner = strip_intervals_cached(L, 0.25)
    lo, hi = pair.curve.lo, pair.curve.hi

    # zone 1: inner strips straight to E
    _, inner_pieces = components_minus_strips(lo, hi, inner)
    for (a, b) in inner_pieces:
        step.error_mass += float(pair.integral_over(a, b))

    # zone 2: off the outer strips, standard treatment with classified ends
    free, outer_pieces = components_minus_strips(lo, hi, outer)
    if len(free) > 3:
        raise InvariantViolation(
            f"strip-free part has {len(free)} components; at most three expected"
        )
    for (u, v) in free:
        _window_split(pair, u, v, step, leftovers="classify", eta=0.5,
                      a0=a0, collect_specs=collect_specs)

    # zone 3: the annulus between the strip levels
    ring = []
    for (a, b) in outer_pieces:
        sub_free, _ = components_minus_strips(a, b, inner)
        ring.extend(sub_free)
    ring_lengths = []
    for (u, v) in ring:
        ring_lengths.append(
            _ring_split(pair, u, v, step, a0=a0, collect_specs=collect_specs)
        )
    step.stats["ring_image_lengths"] = ring_lengths
    return step


def _ring_split(pair: MeasurePair, u: float, v: float, step: DecompositionStep,
                *, a0: float, collect_specs: bool) -> float:
    """Image of one annulus component: strip hits to E, free pieces to J/E."""
    L = pair.L
    outer = strip_intervals_cached(L, 0.5)
    (nu, ru) = _image_parts(pair, u)
    (nv, rv) = _image_parts(pair, v)
    fu, fv = nu + ru, nv + rv
    A, B = (fu, fv) if fu < fv else (fv, fu)
    img_len = B - A
    if img_len <= _ZERO_LEN:
        step.error_mass += float(pair.integral_over(u, v))
        return img_len

    free_img, strip_img = components_minus_strips(A, B, outer)

    # every piece boundary, preimaged in one batch
    bounds = set()
    for (a, b) in free_img + strip_img:
        bounds.add(a)
        bounds.add(b)
    bounds.discard(A)
    bounds.discard(B)
    bounds = np.array(sorted(bounds), dtype=float)
    if bounds.size:
        ti = np.floor(bounds)
        pre = invert_f_gamma_batch(pair.curve, ti, bounds - ti,
                                   np.full(bounds.shape, u), np.full(bounds.shape, v),
                                   strict=False)
    else:
        pre = np.empty(0)
    x_of = {float(b): float(x) for b, x in zip(bounds, pre)}
    x_of[float(A)] = u if fu < fv else v
    x_of[float(B)] = v if fu < fv else u

    def preimage(a, b):
        xa, xb = x_of[float(a)], x_of[float(b)]
        return (xa, xb) if xa <= xb else (xb, xa)

    for (a, b) in strip_img:
        xa, xb = preimage(a, b)
        step.error_mass += float(pair.integral_over(xa, xb))

    j_rows = []  # (img_a, img_b)
    for (a, b) in free_img:
        zeta_len = b - a
        if zeta_len <= _ZERO_LEN:
            continue
        if zeta_len < L ** -0.5:
            xa, xb = preimage(a, b)
            step.error_mass += float(pair.integral_over(xa, xb))
            continue
        if zeta_len <= a0:
            j_rows.append((a, b))
            continue
        # long free piece: equal subdivision into lengths in [a0/2, a0]
        parts = math.ceil(zeta_len / a0 - 1e-12)
        cuts = np.linspace(a, b, parts + 1)
        if cuts.size > 2:
            ti = np.floor(cuts[1:-1])
            pre = invert_f_gamma_batch(pair.curve, ti, cuts[1:-1] - ti,
                                       np.full(ti.shape, u), np.full(ti.shape, v),
                                       strict=False)
            for c, x in zip(cuts[1:-1], pre):
                x_of[float(c)] = float(x)
        for i in range(parts):
            j_rows.append((float(cuts[i]), float(cuts[i + 1])))

    if j_rows:
        a_img = np.array([r[0] for r in j_rows])
        b_img = np.array([r[1] for r in j_rows])
        pre_pairs = [preimage(a, b) for a, b in j_rows]
        a_arr = np.array([p[0] for p in pre_pairs])
        b_arr = np.array([p[1] for p in pre_pairs])
        anti_a = pair.density.antiderivative(a_arr)
        anti_b = pair.density.antiderivative(b_arr)
        masses = pair.mass * np.abs(anti_b - anti_a)
        windows = np.floor(a_img)
        step._add_batch(SpecBatch(
            parent=pair, regularity=Regularity.SUBSTANDARD, eta=0.25,
            a=a_arr, b=b_arr, window=windows,
            lo=a_img - windows, hi=b_img - windows, mass=masses,
        ), collect_specs)
    return img_len


def cut_by_class(pair: MeasurePair, a0: float = A0_DEFAULT, *,
                 collect_specs: bool = True, validate: bool = False) -> DecompositionStep:
    """Dispatch to the cut matching the pair's decomposition class."""
    if pair.regularity is Regularity.FULL_CROSSING:
        return cut_full(pair, a0, collect_specs=collect_specs, validate=validate)
    if pair.regularity is Regularity.STANDARD:
        return cut_standard(pair, a0, collect_specs=collect_specs, validate=validate)
    return cut_substandard(pair, a0, collect_specs=collect_specs, validate=validate)
