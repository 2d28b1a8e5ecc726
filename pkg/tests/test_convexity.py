import math

import pytest

from choreocert.convexity import graph_derivatives, resolve_condition
from choreocert.errors import NotAGraph, StepTooCoarse
from choreocert.interval import Interval


def thin(x):
    return Interval.point(x)


def circle_derivatives(t):
    """Time derivatives of (cos t, sin t) up to third order."""
    return (thin(-math.sin(t)), thin(math.cos(t)),
            thin(-math.cos(t)), thin(-math.sin(t)),
            thin(math.sin(t)), thin(-math.cos(t)))


class TestGraphDerivatives:
    def test_circle_second_derivative_identity(self):
        # on the unit circle y(x) has y'' = -1 / y^3
        t = math.pi / 2 + 0.1
        gd = graph_derivatives(*circle_derivatives(t), axis="y_of_x")
        y = math.sin(t)
        assert gd.second.contains(-1.0 / y ** 3) or \
            abs(gd.second.mid() + 1.0 / y ** 3) < 1e-12

    def test_straight_line(self):
        # x = t, y = 2t: slope 2, higher derivatives zero
        ds = (thin(1.0), thin(2.0), thin(0.0), thin(0.0), thin(0.0), thin(0.0))
        gd = graph_derivatives(*ds, axis="y_of_x")
        assert gd.slope == Interval.point(2.0)
        assert gd.second == Interval.point(0.0)
        assert gd.third == Interval.point(0.0)

    def test_mirror_axis_swaps_roles(self):
        t = 0.3
        gd = graph_derivatives(*circle_derivatives(t), axis="x_of_y")
        # x(y) on the circle: x'' = -1 / x^3
        x = math.cos(t)
        assert abs(gd.second.mid() + 1.0 / x ** 3) < 1e-12

    def test_not_a_graph_when_rate_straddles_zero(self):
        ds = (Interval(-0.1, 0.1), thin(1.0), thin(0.0), thin(0.0),
              thin(0.0), thin(0.0))
        with pytest.raises(NotAGraph):
            graph_derivatives(*ds, axis="y_of_x")

    def test_third_derivative_against_finite_differences(self):
        # numeric third graph derivative of y(x) for the circle at t0
        t0 = 1.1

        def yppp_fd():
            def ypp(t):
                gd = graph_derivatives(*circle_derivatives(t), axis="y_of_x")
                return gd.second.mid()
            eps = 1e-5
            dx_dt = -math.sin(t0)
            return (ypp(t0 + eps) - ypp(t0 - eps)) / (2 * eps) / dx_dt

        gd = graph_derivatives(*circle_derivatives(t0), axis="y_of_x")
        assert abs(gd.third.mid() - yppp_fd()) < 1e-5


class TestConditionLogic:
    def test_straight_line_fails_conditions(self):
        # degenerate flat curve: second derivative is exactly zero, so the
        # nonvanishing-curvature condition cannot hold on either axis
        ds = (thin(1.0), thin(2.0), thin(0.0), thin(0.0), thin(0.0), thin(0.0))
        with pytest.raises(StepTooCoarse):
            resolve_condition(ds, inflection_step=False)

    def test_mirror_fallback(self):
        # x rate straddles zero but y rate does not: the mirror axis resolves
        t = math.pi / 2
        ds = (Interval(-0.01, 0.01), thin(1.0),
              thin(-1.0), thin(0.0), thin(0.0), thin(-1.0))
        gd, condition = resolve_condition(ds, inflection_step=False)
        assert gd.axis == "x_of_y"
        assert condition == "curvature"

    def test_inflection_route(self):
        # second derivative contains zero, third excludes it
        ds = (thin(-0.7), thin(1.0), thin(0.0), Interval(-0.05, 0.05),
              thin(0.0), thin(-5.0))
        gd, condition = resolve_condition(ds, inflection_step=True)
        assert condition == "inflection"
        assert gd.second.contains_zero()
        assert not gd.third.contains_zero()

    def test_inflection_requires_monotone_second(self):
        ds = (thin(-0.7), thin(1.0), thin(0.0), Interval(-0.05, 0.05),
              thin(0.0), Interval(-1.0, 1.0))
        with pytest.raises(StepTooCoarse):
            resolve_condition(ds, inflection_step=True)
