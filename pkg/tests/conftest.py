import warnings

import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _quiet_sampler_warnings():
    # low-ESS warnings are informative in production but drown the test log;
    # the tests that care about them assert on them explicitly
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*ESS.*", category=RuntimeWarning)
        yield


def tail_exponent(density_fn, frange, side, window=0.10, inner=1e-4):
    """Log-log slope of the cumulative tail of a density over the outer window.

    The tail is integrated from its own endpoint outward so that tiny tail
    masses are accumulated without cancellation; the regression points are
    geometrically spaced across the outer ``window`` fraction of the range.
    """
    lo, hi = frange
    width = hi - lo
    eps_grid = np.linspace(0.0, window * 1.2 * width, 12001)
    xs = lo + eps_grid if side == "low" else hi - eps_grid
    dens = density_fn(xs)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1])
                                           * np.abs(np.diff(xs)))])
    eps_pts = np.geomspace(inner * width, window * width, 40)
    tail = np.interp(eps_pts, eps_grid, cum)
    return float(np.polyfit(np.log(eps_pts), np.log(np.clip(tail, 1e-300, None)), 1)[0])
