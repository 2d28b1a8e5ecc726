import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from choreocert import kernels as kn
from choreocert.dynamics import LinearField, nbody_field
from choreocert.errors import RoughEnclosureFailure
from choreocert.integrator import LohnerSet, flow, step

HARMONIC = LinearField(np.array([[0.0, 1.0], [-1.0, 0.0]]))

EIGHT_X0 = (0.347116768716, 0.532724944657)


def eight_state():
    v, u = EIGHT_X0
    return np.array([1.0, 0, -1.0, 0, 0, 0, v, u, v, u, -2 * v, -2 * u])


def thin(x, transition=None):
    x = np.asarray(x, float)
    return LohnerSet.from_box(x, x, transition_dim=transition)


class TestHarmonicOscillator:
    def test_quarter_period_containment(self):
        fin, steps = flow(HARMONIC, thin([1.0, 0.0], transition=2),
                          math.pi / 2, 0.01, 7)
        lo, hi = fin.box()
        assert lo[0] <= 0.0 <= hi[0]
        assert lo[1] <= -1.0 <= hi[1]
        assert np.max(hi - lo) < 1e-12
        tl, th = fin.transition_box()
        rot = np.array([[math.cos(math.pi / 2), math.sin(math.pi / 2)],
                        [-math.sin(math.pi / 2), math.cos(math.pi / 2)]])
        assert np.all(tl <= rot) and np.all(rot <= th)

    def test_zero_time_returns_input(self):
        start = thin([1.0, 0.0])
        fin, steps = flow(HARMONIC, start, 0.0, 0.01, 7)
        assert steps == []
        assert fin is start

    def test_final_partial_step_lands_on_t(self):
        fin, steps = flow(HARMONIC, thin([1.0, 0.0]), 0.025, 0.01, 7)
        assert len(steps) == 3
        assert steps[-1].h == pytest.approx(0.005)
        lo, hi = fin.box()
        assert lo[0] <= math.cos(0.025) <= hi[0]


class TestTwoBodyCircular:
    OMEGA = math.sqrt(2.0)

    def start(self):
        v = self.OMEGA / 2
        return np.array([0.5, 0, 0, v, -0.5, 0, 0, -v])

    @pytest.mark.slow
    def test_full_period_returns_to_start(self):
        f = nbody_field(2)
        period = 2 * math.pi / self.OMEGA
        fin, steps = flow(f, thin(self.start(), transition=8), period, 0.01, 7)
        lo, hi = fin.box()
        assert np.all(lo <= self.start()) and np.all(self.start() <= hi)
        assert np.max(hi - lo) < 1e-9
        # the flow derivative along the orbit direction has eigenvalue one:
        # V f(x0) must enclose f(x0)
        tl, th = fin.transition_box()
        flo, fhi = f.eval(self.start(), self.start())
        fl = 0.5 * (flo + fhi)
        vl, vh = kn.matvec_thin_right(tl, th, fl)
        assert np.all(vl - 1e-7 <= fl) and np.all(fl <= vh + 1e-7)

    def test_reversibility(self):
        f = nbody_field(2)
        s0 = self.start()
        fin, _ = flow(f, thin(s0), 0.3, 0.01, 7)
        lo, hi = fin.box()
        back = np.concatenate([0.5 * (lo + hi)[:2], -0.5 * (lo + hi)[2:4],
                               0.5 * (lo + hi)[4:6], -0.5 * (lo + hi)[6:8]])
        fin2, _ = flow(f, thin(back), 0.3, 0.01, 7)
        lo2, hi2 = fin2.box()
        flipped = np.concatenate([s0[:2], -s0[2:4], s0[4:6], -s0[6:8]])
        assert np.all(lo2 - 1e-9 <= flipped) and np.all(flipped <= hi2 + 1e-9)


class TestSoundnessAgainstReference:
    def _reference(self, f_np, s0, t_grid):
        sol = solve_ivp(f_np, (0.0, t_grid[-1]), s0, method="DOP853",
                        rtol=1e-13, atol=1e-14, dense_output=True)
        return sol.sol

    @pytest.mark.slow
    def test_reference_inside_whole_step_enclosures(self):
        f = nbody_field(2)

        def f_np(t, s):
            lo, hi = f.eval(s, s)
            return 0.5 * (lo + hi)

        rng = np.random.default_rng(11)
        for _ in range(20):
            s0 = rng.uniform(-0.5, 0.5, 8)
            s0[0] += 1.5
            s0[4] -= 1.5
            _, steps = flow(f, thin(s0), 0.2, 0.01, 6)
            ref = self._reference(f_np, s0, [0.2])
            for rec in steps:
                for t in np.linspace(rec.t_prev, rec.t_k, 4):
                    x = ref(t)
                    assert np.all(rec.whole[0] <= x + 1e-9)
                    assert np.all(x - 1e-9 <= rec.whole[1])
                x_end = ref(rec.t_k)
                assert np.all(rec.tight[0] - 1e-10 <= x_end)
                assert np.all(x_end <= rec.tight[1] + 1e-10)

    def test_transition_columns_against_finite_differences(self):
        f = nbody_field(2)

        def f_np(t, s):
            lo, hi = f.eval(s, s)
            return 0.5 * (lo + hi)

        s0 = np.array([0.8, 0.1, -0.1, 0.6, -0.8, -0.1, 0.1, -0.6])
        T = 0.25
        fin, _ = flow(f, thin(s0, transition=8), T, 0.01, 6)
        tl, th = fin.transition_box()
        eps = 1e-6
        for k in range(8):
            e = np.zeros(8)
            e[k] = eps
            up = solve_ivp(f_np, (0, T), s0 + e, method="DOP853",
                           rtol=1e-12, atol=1e-13).y[:, -1]
            dn = solve_ivp(f_np, (0, T), s0 - e, method="DOP853",
                           rtol=1e-12, atol=1e-13).y[:, -1]
            fd = (up - dn) / (2 * eps)
            assert np.all(tl[:, k] - 1e-4 <= fd)
            assert np.all(fd <= th[:, k] + 1e-4)


class TestSetPropagation:
    def test_subdivision_refines(self):
        # a box fat in two directions, quartered along exactly those, so the
        # four pieces tile it; the hulled results must refine the unsplit run
        f = nbody_field(2)
        s0 = np.array([1.0, 0, 0, 0.7, -1.0, 0, 0, -0.7])
        rad = np.zeros(8)
        rad[0] = rad[3] = 4e-4
        full = LohnerSet.from_box(s0 - rad, s0 + rad)
        fin, _ = flow(f, full, 0.1, 0.01, 6)
        big_lo, big_hi = fin.box()

        hulled_lo = hulled_hi = None
        for sx in (-1, 1):
            for sy in (-1, 1):
                c = s0.copy()
                c[0] += sx * rad[0] / 2
                c[3] += sy * rad[3] / 2
                r = rad.copy()
                r[0] /= 2
                r[3] /= 2
                sub = LohnerSet.from_box(c - r, c + r)
                sfin, _ = flow(f, sub, 0.1, 0.01, 6)
                sl, sh = sfin.box()
                if hulled_lo is None:
                    hulled_lo, hulled_hi = sl, sh
                else:
                    hulled_lo, hulled_hi = kn.hull(hulled_lo, hulled_hi, sl, sh)
        assert np.all(big_lo <= hulled_lo) and np.all(hulled_hi <= big_hi)

    def test_rough_enclosure_failure_on_huge_step(self):
        with pytest.raises(RoughEnclosureFailure):
            step(HARMONIC, thin([1.0, 0.0]), 5.0, 5)


class TestEightRegression:
    def test_first_step_diameter(self):
        # regression target, measured once on the reference setup
        f = nbody_field(3, kind="split")
        _, rec = step(f, thin(eight_state()), 0.01, 7)
        assert np.max(kn.diam(*rec.tight)) <= 1e-10

    def test_halving_the_step_shrinks_the_enclosure(self):
        f = nbody_field(3, kind="split")
        _, rec_big = step(f, thin(eight_state()), 0.01, 7)
        _, rec_small = step(f, thin(eight_state()), 0.005, 7)
        assert (np.max(kn.diam(*rec_small.tight))
                < np.max(kn.diam(*rec_big.tight)))
