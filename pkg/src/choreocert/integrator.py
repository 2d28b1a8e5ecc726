"""Rigorous enclosure integration and Poincare maps.

One step of the validated integrator produces, for the whole input box:

* a tight enclosure of the time-h image (Taylor polynomial at the box center
  plus a Lagrange remainder over a first-order rough enclosure),
* a whole-step enclosure valid for every intermediate time,
* an enclosure of the one-step transition matrix (variational Taylor layers
  with their own remainder, which needs an a-priori enclosure of the
  transition itself over the step - the linear analogue of the rough
  enclosure).

Sets are carried as center + frame * box, with the frame re-chosen every
step from a floating-point QR factorization (columns sorted by contribution)
to control the wrapping effect; the frame inverse is enclosed rigorously via
a Neumann bound, so the representation change never loses soundness.  The
C1 slab (selected monodromy columns) is propagated with the same machinery.

Section crossings are located in three rigorous stages: straddle detection on
whole-step enclosures with a transversality sign check, bisection of the
in-step Taylor polynomial, and one interval Newton step in time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels as kn
from .errors import (
    NoCrossing,
    NonTransversal,
    RoughEnclosureFailure,
    SingularEnclosure,
)
from .interval import Interval

Pair = tuple[np.ndarray, np.ndarray]

_ROUGH_INFLATE = 1.5
_ROUGH_TRIES = 20
_BISECT_BUDGET = 40


# --- small helpers -----------------------------------------------------------

def poly_eval(layers: Pair, rem: Pair, tau: Interval) -> Pair:
    """Horner evaluation of sum_i c_i tau^i + tau^(R+1) rem.

    `layers` is (R+1, ...) coefficient enclosures, `rem` the order-(R+1)
    Lagrange coefficient enclosure; tau may be a thick time interval.
    """
    tl = np.float64(tau.lo)
    th = np.float64(tau.hi)
    acc_l, acc_h = rem
    order = layers[0].shape[0] - 1
    for i in range(order, -1, -1):
        acc_l, acc_h = kn.mul(acc_l, acc_h, tl, th)
        acc_l, acc_h = kn.add(acc_l, acc_h, layers[0][i], layers[1][i])
    return acc_l, acc_h


def _inverse_enclosure(Q: np.ndarray) -> Pair:
    """Rigorous enclosure of Q^-1 for a nearly orthogonal float matrix.

    Q^-1 = (Q^T Q)^-1 Q^T and Q^T Q = I + E with ||E|| tiny, so
    (I + E)^-1 = I + D with |D_ij| <= ||E|| / (1 - ||E||).
    """
    n = Q.shape[0]
    qt = np.ascontiguousarray(Q.T)
    pl, ph = kn.matmul_float(qt, Q)
    el, eh = kn.sub(pl, ph, np.eye(n), np.eye(n))
    rowsum = np.sum(kn.mag(el, eh), axis=1)
    e = float(np.max(rowsum)) * (1.0 + n * 2.0 ** -50) + 1e-300
    if not e < 0.5:
        raise SingularEnclosure("frame matrix is far from orthogonal")
    rho = (Interval.point(e) / (Interval(1.0) - Interval.point(e))).hi
    dl = np.eye(n) - rho
    dh = np.eye(n) + rho
    return kn.matmul_thin_right(dl, dh, qt)


def _sorted_qr(Bmid: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Orthogonal frame from a QR of Bmid with columns ordered by how much
    box volume they carry (largest first); returns the Q factor."""
    order = np.argsort(-(np.linalg.norm(Bmid, axis=0) * weights), kind="stable")
    q, _ = np.linalg.qr(Bmid[:, order])
    return q


def _zero_hold(h: float, fl: np.ndarray, fh: np.ndarray) -> Pair:
    """Enclosure of [0, h] * [f]."""
    lo = np.minimum(0.0, kn.down(h * fl))
    hi = np.maximum(0.0, kn.up(h * fh))
    return lo, hi


# --- set representation ------------------------------------------------------

@dataclass
class LohnerSet:
    """Current enclosure: m + Q [r], optionally with a monodromy slab
    V = Vm + QV [RV] (n x d columns of the flow derivative)."""

    m: np.ndarray
    Q: np.ndarray
    r: Pair
    Vm: np.ndarray | None = None
    QV: np.ndarray | None = None
    RV: Pair | None = None

    @classmethod
    def from_box(cls, lo, hi, transition_dim: int | None = None) -> LohnerSet:
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        m = kn.mid(lo, hi)
        n = m.size
        rl, rh = kn.sub(lo, hi, m, m)
        out = cls(m=m, Q=np.eye(n), r=(rl, rh))
        if transition_dim is not None:
            out.Vm = np.eye(n)[:, :transition_dim].copy()
            out.QV = np.eye(n)
            out.RV = (np.zeros((n, transition_dim)), np.zeros((n, transition_dim)))
        return out

    @classmethod
    def from_slab(cls, anchor: np.ndarray, directions: np.ndarray,
                  coords: Pair, carry_transition: bool = True) -> LohnerSet:
        """Affine slab {anchor + directions @ c : c in coords}.

        Used for embedded boxes E(x) = E(anchor) + DE (x - anchor): the
        correlations between copied components are kept instead of being
        hulled into an axis box.  The slab directions also seed the
        monodromy columns when `carry_transition`.
        """
        anchor = np.asarray(anchor, float)
        D = np.asarray(directions, float)
        n, d = D.shape
        q, _ = np.linalg.qr(D, mode="complete")
        qinv = _inverse_enclosure(q)
        cl, ch = kn.matmul(*qinv, D, D)           # Q^-1 D, almost [R; 0]
        rl, rh = kn.matvec(cl, ch, coords[0], coords[1])
        out = cls(m=anchor, Q=q, r=(rl, rh))
        if carry_transition:
            out.Vm = D.copy()
            out.QV = np.eye(n)
            out.RV = (np.zeros((n, d)), np.zeros((n, d)))
        return out

    def box(self) -> Pair:
        sl, sh = kn.matvec_thin_left(self.Q, self.r[0], self.r[1])
        return kn.add(sl, sh, self.m, self.m)

    def transition_box(self) -> Pair:
        tl, th = kn.matmul_thin_left(self.QV, self.RV[0], self.RV[1])
        return kn.add(tl, th, self.Vm, self.Vm)

    @property
    def has_transition(self) -> bool:
        return self.Vm is not None


@dataclass
class EnclosureStep:
    """One validated step: tight endpoint and whole-step enclosures plus the
    per-step Taylor data needed to re-evaluate the flow inside the step."""

    index: int
    t_prev: float
    t_k: float
    h: float
    order: int
    tight: Pair
    whole: Pair
    layers: Pair                      # state Taylor layers at the step start set
    rem: Pair                         # order-(R+1) state Lagrange coefficient
    trans_step: Pair                  # one-step transition enclosure [A]
    trans_layers: Pair | None = None  # transition Taylor layers (C1 only)
    trans_rem: Pair | None = None     # order-(R+1) transition remainder (C1)
    v_start: Pair | None = None       # accumulated slab box at t_prev (C1)

    def state_at(self, tau: Interval) -> Pair:
        """Enclosure of the flow at step-local time tau in [0, h]."""
        return poly_eval(self.layers, self.rem, tau)

    def transition_at(self, tau: Interval) -> Pair:
        mt = poly_eval(self.trans_layers, self.trans_rem, tau)
        return kn.matmul(*mt, *self.v_start)


# --- rough enclosures --------------------------------------------------------

def _inflate(wl: np.ndarray, wh: np.ndarray) -> Pair:
    c = kn.mid(wl, wh)
    pad = 1e-14 * (1.0 + kn.mag(wl, wh))
    return (kn.down(c + _ROUGH_INFLATE * (wl - c) - pad),
            kn.up(c + _ROUGH_INFLATE * (wh - c) + pad))


def _rough_enclosure(field, xl, xh, h: float) -> Pair:
    fl, fh = field.eval(xl, xh)
    il, ih = _zero_hold(h, fl, fh)
    wl, wh = kn.add(xl, xh, il, ih)
    wl, wh = kn.hull(xl, xh, wl, wh)
    for _ in range(_ROUGH_TRIES):
        # Validate an inflated candidate; on failure re-anchor to the latest
        # Picard image (hull-and-grow overshoots on anisotropic boxes).
        cl, ch = _inflate(wl, wh)
        fl, fh = field.eval(cl, ch)
        il, ih = _zero_hold(h, fl, fh)
        nl, nh = kn.add(xl, xh, il, ih)
        if kn.subset(nl, nh, cl, ch):
            return nl, nh
        wl, wh = kn.hull(nl, nh, xl, xh)
    raise RoughEnclosureFailure(
        f"no validated enclosure at step size {h}; reduce the step")


def _rough_transition(jac: Pair, n: int, h: float) -> Pair:
    """A-priori enclosure of the transition matrix over one step, from
    Picard iteration on V' = J V, V(0) = I, with J ranging over the step."""
    jl, jh = jac
    eye = np.eye(n)
    wl, wh = eye.copy(), eye.copy()
    for _ in range(_ROUGH_TRIES):
        cl, ch = _inflate(wl, wh)
        pl, ph = kn.matmul(jl, jh, cl, ch)
        il, ih = _zero_hold(h, pl, ph)
        nl, nh = kn.add(eye, eye, il, ih)
        if kn.subset(nl, nh, cl, ch):
            return nl, nh
        wl, wh = kn.hull(nl, nh, eye, eye)
    raise RoughEnclosureFailure(
        f"no validated transition enclosure at step size {h}")


# --- the Lohner step ---------------------------------------------------------

def step(field, cur: LohnerSet, h: float, order: int,
         index: int = 0, t_prev: float = 0.0) -> tuple[LohnerSet, EnclosureStep]:
    """Advance the set by one step of size h at the given Taylor order."""
    n = field.dim
    xl, xh = cur.box()
    kn.assert_valid(xl, xh, "step input")
    wl, wh = _rough_enclosure(field, xl, xh, h)

    ser_m = field.series(cur.m, cur.m, order)
    ser_x = field.series(xl, xh, order, variational=True)
    ser_w = field.series(wl, wh, order + 1, variational=True)

    layers_m = ser_m.layers()
    layers_x = ser_x.layers()
    layers_w = ser_w.layers()
    rem = (layers_w[0][order + 1].copy(), layers_w[1][order + 1].copy())

    h_iv = Interval.point(h)
    pt = poly_eval(layers_m, rem, h_iv)

    mx = ser_x.transition_layers(order)
    mw = ser_w.transition_layers(order + 1)
    vw = _rough_transition(ser_w.jacobian(), n, h)
    trans_rem = kn.matmul(mw[0][order + 1], mw[1][order + 1], *vw)
    A = poly_eval(mx, trans_rem, h_iv)

    # Whole-step enclosure: the in-step polynomial sharpens the rough box.
    span = Interval(0.0, h)
    ql, qh = poly_eval(layers_x, rem, span)
    ql, qh = kn.intersect(ql, qh, wl, wh)
    whole = (ql, qh)

    # Lohner propagation with a fresh orthogonal frame.
    bl, bh = kn.matmul(*A, cur.Q, cur.Q)
    m_new = kn.mid(*pt)
    zl, zh = kn.sub(pt[0], pt[1], m_new, m_new)
    rad = 0.5 * kn.diam(*cur.r)
    q_new = _sorted_qr(kn.mid(bl, bh), rad)
    qinv = _inverse_enclosure(q_new)
    tl, th = kn.matmul(*qinv, bl, bh)
    rl, rh = kn.matvec(tl, th, *cur.r)
    r2l, r2h = kn.matvec(*qinv, zl, zh)
    r_new = kn.add(rl, rh, r2l, r2h)

    # Tight endpoint enclosure: direct image intersected with the frame box.
    dl, dh = kn.matvec(bl, bh, *cur.r)
    dl, dh = kn.add(dl, dh, *pt)
    fl2, fh2 = kn.matvec_thin_left(q_new, *r_new)
    fl2, fh2 = kn.add(fl2, fh2, m_new, m_new)
    tight = kn.intersect(dl, dh, fl2, fh2)
    kn.assert_valid(*tight, "step output")

    nxt = LohnerSet(m=m_new, Q=q_new, r=r_new)

    rec = EnclosureStep(
        index=index, t_prev=t_prev, t_k=t_prev + h, h=h, order=order,
        tight=tight, whole=whole,
        layers=layers_x, rem=rem, trans_step=A)

    if cur.has_transition:
        v_start = cur.transition_box()
        bvl, bvh = kn.matmul(*A, cur.QV, cur.QV)
        pvl, pvh = kn.matmul_thin_right(*A, cur.Vm)
        vm_new = kn.mid(pvl, pvh)
        zvl, zvh = kn.sub(pvl, pvh, vm_new, vm_new)
        radv = 0.5 * np.max(kn.diam(*cur.RV), axis=1)
        qv_new = _sorted_qr(kn.mid(bvl, bvh), radv)
        qvinv = _inverse_enclosure(qv_new)
        cl, ch = kn.matmul(*qvinv, bvl, bvh)
        rvl, rvh = kn.matmul(cl, ch, *cur.RV)
        rv2 = kn.matmul(*qvinv, zvl, zvh)
        rv_new = kn.add(rvl, rvh, *rv2)
        nxt.Vm, nxt.QV, nxt.RV = vm_new, qv_new, rv_new

        rec.trans_layers = mx
        rec.trans_rem = trans_rem
        rec.v_start = v_start

    return nxt, rec


def flow(field, start: LohnerSet, t_final: float, h: float, order: int,
         max_steps: int | None = None) -> tuple[LohnerSet, list[EnclosureStep]]:
    """Chain steps to time t_final; the last step is shortened to land on it."""
    steps: list[EnclosureStep] = []
    cur = start
    t = 0.0
    k = 0
    budget = max_steps if max_steps is not None else int(np.ceil(t_final / h)) + 2
    while t < t_final and k < budget:
        hk = min(h, t_final - t)
        if hk <= 0:
            break
        cur, rec = step(field, cur, hk, order, index=k, t_prev=t)
        steps.append(rec)
        t = rec.t_k
        k += 1
    return cur, steps


# --- sections and crossings --------------------------------------------------

@dataclass(frozen=True)
class SectionSpec:
    """Poincare section g(x) = 0 with gradient and required crossing sign.

    crossing_sign "+-" means g passes from positive to negative, "-+" the
    reverse, "either" takes the sign of g at the start state.
    """

    g: Callable[[np.ndarray, np.ndarray], Interval]
    dg: Callable[[np.ndarray, np.ndarray], Pair]
    crossing_sign: str = "either"

    def gdot(self, sl: np.ndarray, sh: np.ndarray, field) -> Interval:
        gl, gh = self.dg(sl, sh)
        fl, fh = field.eval(sl, sh)
        lo, hi = kn.vecdot(gl, gh, fl, fh)
        return Interval(float(lo), float(hi))


@dataclass
class SectionCrossing:
    state: Pair
    t_cross: Interval
    gdot: Interval
    transition: Pair | None          # monodromy columns at the crossing
    projected: Pair | None           # after removing the flow direction
    steps: list[EnclosureStep]
    first_zone_step: int


def _crossing_sign(section: SectionSpec, g0: Interval) -> int:
    if section.crossing_sign == "+-":
        want = 1
    elif section.crossing_sign == "-+":
        want = -1
    else:
        if g0.contains_zero():
            raise NonTransversal("section function straddles zero at start")
        want = 1 if g0.lo > 0.0 else -1
    if (want == 1 and not g0.lo > 0.0) or (want == -1 and not g0.hi < 0.0):
        raise NonTransversal("start state is not on the required section side")
    return want


def flow_to_section(field, start: LohnerSet, section: SectionSpec,
                    h: float, order: int,
                    max_steps: int | None = None) -> SectionCrossing:
    """Integrate to the first transversal crossing of the section."""
    budget = max_steps if max_steps is not None else int(np.ceil(10.0 / h))
    want = _crossing_sign(section, section.g(*start.box()))
    carry_v = start.has_transition

    steps: list[EnclosureStep] = []
    cur = start
    zone: list[int] = []
    t = 0.0
    for k in range(budget):
        cur, rec = step(field, cur, h, order, index=k, t_prev=t)
        steps.append(rec)
        t = rec.t_k
        g_whole = section.g(*rec.whole)
        if not g_whole.contains_zero():
            on_start_side = (g_whole.lo > 0.0) if want == 1 else (g_whole.hi < 0.0)
            if zone:
                if on_start_side:
                    raise NonTransversal(
                        "section straddle ended on the starting side")
                break
            if not on_start_side:
                raise NonTransversal(
                    "sign flip without a straddled step; enclosures inconsistent")
            continue
        gd = section.gdot(*rec.whole, field)
        if (want == 1 and not gd.hi < 0.0) or (want == -1 and not gd.lo > 0.0):
            raise NonTransversal(
                f"dg.f = {gd} does not exclude zero with the required sign "
                f"on step {k}")
        zone.append(k)
    else:
        raise NoCrossing(f"no section crossing within {budget} steps")
    if not zone:
        raise NoCrossing("monitoring loop ended without a crossing zone")

    zone_hull = steps[zone[0]].whole
    for k in zone[1:]:
        zone_hull = kn.hull(*zone_hull, *steps[k].whole)

    t_enc, state = _locate_crossing(steps, zone, zone_hull, section, field)
    gdot = section.gdot(*state, field)
    if gdot.contains_zero():
        raise NonTransversal("transversality lost at the refined crossing")

    transition = projected = None
    if carry_v:
        transition = _transition_at_cross(steps, zone, t_enc)
        projected = _project_transition(field, section, state, gdot, transition)

    return SectionCrossing(
        state=state, t_cross=t_enc, gdot=gdot, transition=transition,
        projected=projected, steps=steps, first_zone_step=zone[0])


def _windows_initial(steps, zone) -> list[tuple[int, float, float]]:
    return [(k, 0.0, steps[k].h) for k in zone]


def _window_state(steps, win) -> Pair:
    k, a, b = win
    return steps[k].state_at(Interval(a, b))


def _global_time(steps, k: int, a: float, b: float) -> Interval:
    # Step k spans [t_prev, t_prev + h] with exact float step sizes; rebuild
    # the accumulated time rigorously from the recorded step lengths.
    if k > 0 and all(steps[j].h == steps[0].h for j in range(k)):
        t0 = Interval.point(steps[0].h) * Interval.point(float(k))
    else:
        t0 = Interval(0.0)
        for j in range(k):
            t0 = t0 + Interval.point(steps[j].h)
    return t0 + Interval(a, b)


def _step_tau_overlap(steps, k: int, t_enc: Interval) -> tuple[float, float] | None:
    """Rigorous in-step time range covering t_enc within step k, or None."""
    t0 = _global_time(steps, k, 0.0, 0.0)
    lo = max(0.0, (Interval.point(t_enc.lo) - t0).lo)
    hi = min(steps[k].h, (Interval.point(t_enc.hi) - t0).hi)
    if lo > hi:
        return None
    return lo, hi


def _span_state(steps, candidates, t_enc: Interval) -> Pair:
    """Hull of the flow over every time in t_enc (no sign pruning): the valid
    domain for mean-value slopes."""
    state = None
    for k in candidates:
        rng = _step_tau_overlap(steps, k, t_enc)
        if rng is None:
            continue
        sl, sh = steps[k].state_at(Interval(rng[0], rng[1]))
        state = (sl, sh) if state is None else kn.hull(*state, sl, sh)
    if state is None:
        raise NonTransversal("crossing time enclosure left the crossing zone")
    return state


def _locate_crossing(steps, zone, zone_hull: Pair, section: SectionSpec, field
                     ) -> tuple[Interval, Pair]:
    windows = _windows_initial(steps, zone)

    def keep(win) -> bool:
        return section.g(*_window_state(steps, win)).contains_zero()

    windows = [w for w in windows if keep(w)]
    if not windows:
        raise NonTransversal("crossing zone vanished during refinement")

    # Stage 1: bisection.  Every window is split each round and halves that
    # cannot contain a crossing (g strictly one-signed) are dropped.
    splits = 0
    while splits < _BISECT_BUDGET and len(windows) <= 16:
        progressed = False
        nxt: list[tuple[int, float, float]] = []
        for k, a, b in windows:
            m = a + 0.5 * (b - a)
            if splits >= _BISECT_BUDGET or m <= a or m >= b:
                nxt.append((k, a, b))
                continue
            splits += 1
            progressed = True
            nxt.extend(w for w in ((k, a, m), (k, m, b)) if keep(w))
        if not nxt:
            raise NonTransversal("crossing zone vanished during refinement")
        windows = nxt
        if not progressed:
            break

    t_enc = None
    for k, a, b in windows:
        ti = _global_time(steps, k, a, b)
        t_enc = ti if t_enc is None else t_enc.hull(ti)

    # Stage 2: interval Newton in time, t* = c - g(phi(c)) / (dg.f)(span),
    # iterated while it still contracts.  The slope domain must cover every
    # mean-value point between the chosen center and any crossing time, so
    # it is the flow over the hull of t_enc and the center, pruned or not.
    for _ in range(12):
        c = t_enc.mid()
        k_c = None
        for k in zone:
            rng = _step_tau_overlap(steps, k, t_enc)
            if rng is None:
                continue
            tau_c = min(max(c - steps[k].t_prev, rng[0]), rng[1])
            k_c = k
            if steps[k].t_prev <= c <= steps[k].t_k:
                break
        if k_c is None:
            break
        t_c = _global_time(steps, k_c, tau_c, tau_c)
        span = _span_state(steps, zone, t_enc.hull(t_c))
        gd = section.gdot(*span, field)
        if gd.contains_zero():
            break
        centered = steps[k_c].state_at(Interval.point(tau_c))
        g_c = section.g(*centered)
        t_new = (t_c - g_c / gd).intersect(t_enc)
        if t_new.diam() > 0.9 * t_enc.diam():
            t_enc = t_new
            break
        t_enc = t_new

    # Final crossing state: kept windows clipped to the refined time range.
    state = None
    for k, a, b in windows:
        rng = _step_tau_overlap(steps, k, t_enc)
        if rng is None:
            continue
        lo, hi = max(a, rng[0]), min(b, rng[1])
        if lo > hi:
            continue
        sl, sh = steps[k].state_at(Interval(lo, hi))
        state = (sl, sh) if state is None else kn.hull(*state, sl, sh)
    if state is None:
        state = _span_state(steps, zone, t_enc)

    kn.assert_valid(*state, "crossing state")
    return t_enc, state


def _transition_at_cross(steps, zone, t_enc: Interval) -> Pair:
    out = None
    for k in zone:
        rng = _step_tau_overlap(steps, k, t_enc)
        if rng is None:
            continue
        vt = steps[k].transition_at(Interval(rng[0], rng[1]))
        out = vt if out is None else kn.hull(*out, *vt)
    if out is None:
        # Conservative fallback: the whole zone span.
        for k in zone:
            vt = steps[k].transition_at(Interval(0.0, steps[k].h))
            out = vt if out is None else kn.hull(*out, *vt)
    return out


def _project_transition(field, section: SectionSpec, state: Pair,
                        gdot: Interval, vt: Pair) -> Pair:
    """(Id - f dg / (dg.f)) V: removes the return-time variation so the
    result is the derivative of the section-to-section map."""
    fl, fh = field.eval(*state)
    dgl, dgh = section.dg(*state)
    wl, wh = kn.dot(dgl[:, None], dgh[:, None], vt[0], vt[1], axis=0)
    cl, ch = kn.div(wl, wh, np.float64(gdot.lo), np.float64(gdot.hi))
    ol, oh = kn.mul(fl[:, None], fh[:, None], cl[None, :], ch[None, :])
    return kn.sub(vt[0], vt[1], ol, oh)
