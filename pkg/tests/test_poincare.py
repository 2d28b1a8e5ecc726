import math

import numpy as np
import pytest

from choreocert.dynamics import LinearField
from choreocert.errors import NoCrossing, NonTransversal
from choreocert.integrator import LohnerSet, SectionSpec, flow_to_section
from choreocert.interval import Interval

HARMONIC = LinearField(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def coordinate_section(index: int, dim: int, sign: str = "+-") -> SectionSpec:
    def g(sl, sh):
        return Interval(float(sl[index]), float(sh[index]))

    def dg(sl, sh):
        v = np.zeros(dim)
        v[index] = 1.0
        return v, v

    return SectionSpec(g=g, dg=dg, crossing_sign=sign)


def thin(x, transition=None):
    x = np.asarray(x, float)
    return LohnerSet.from_box(x, x, transition_dim=transition)


class TestHarmonicCrossing:
    def test_crossing_state_and_time(self):
        sec = coordinate_section(0, 2, "+-")
        cr = flow_to_section(HARMONIC, thin([1.0, 0.0], transition=2),
                             sec, 0.01, 7)
        assert cr.t_cross.contains(math.pi / 2)
        assert cr.t_cross.diam() < 1e-10
        assert cr.state[0][1] <= -1.0 <= cr.state[1][1]
        assert cr.state[0][0] <= 0.0 <= cr.state[1][0]
        assert cr.gdot.hi < 0.0

    def test_first_crossing_not_a_later_one(self):
        # from (1, 0) the first x = 0 crossing is at pi/2, not 3 pi/2
        sec = coordinate_section(0, 2, "+-")
        cr = flow_to_section(HARMONIC, thin([1.0, 0.0]), sec, 0.01, 7,
                             max_steps=700)
        assert cr.t_cross.hi < math.pi

    def test_requested_opposite_sign_crossing(self):
        # x = 0 rising happens at 3 pi / 2 starting from (1, 0)
        sec = coordinate_section(0, 2, "-+")
        with pytest.raises(NonTransversal):
            # the start state is on the wrong side for a -+ crossing
            flow_to_section(HARMONIC, thin([1.0, 0.0]), sec, 0.01, 7)
        cr = flow_to_section(HARMONIC, thin([-1.0, 0.0]), sec, 0.01, 7)
        assert cr.t_cross.contains(math.pi / 2)

    def test_no_crossing_budget(self):
        sec = coordinate_section(0, 2, "+-")
        with pytest.raises(NoCrossing):
            flow_to_section(HARMONIC, thin([1.0, 0.0]), sec, 0.01, 7,
                            max_steps=20)

    def test_tangential_crossing_rejected(self):
        # section x = 1 is tangent to the circle orbit at the start point:
        # g dips from 0 with gdot = v = 0 there; starting just inside makes
        # the section unreachable transversally
        def g(sl, sh):
            return Interval(float(sl[0]) - 1.0, float(sh[0]) - 1.0)

        def dg(sl, sh):
            return np.array([1.0, 0.0]), np.array([1.0, 0.0])

        sec = SectionSpec(g=g, dg=dg, crossing_sign="either")
        with pytest.raises((NonTransversal, NoCrossing)):
            flow_to_section(HARMONIC, thin([1.0, 0.0]), sec, 0.01, 7,
                            max_steps=700)

    def test_projected_transition_kills_flow_direction(self):
        # (Id - f dg/(dg.f)) V applied to the flow direction vanishes:
        # for the return map to the section, the image of f(x0) must be
        # (numerically) the zero vector
        sec = coordinate_section(0, 2, "+-")
        cr = flow_to_section(HARMONIC, thin([1.0, 0.0], transition=2),
                             sec, 0.01, 7)
        pl, ph = cr.projected
        f0 = np.array([0.0, -1.0])  # field at (1,0)
        img_lo = pl @ f0
        img_hi = ph @ f0
        lo = np.minimum(img_lo, img_hi)
        hi = np.maximum(img_lo, img_hi)
        assert np.all(lo <= 1e-8) and np.all(hi >= -1e-8)
