"""Bottom profiles.

A Bathymetry bundles vectorized evaluators for xi and its first three
derivatives (the operator needs xi_x and xi_xx; the symbolic expansion of
the forcing term also touches xi_xxx), plus an amplitude scale used by
configuration validation.  Analytic families are evaluated in closed form;
the Lagrangian solver relies on that to evaluate xi exactly at mapped
points instead of interpolating grid samples.

Only periodic profiles are supported.  A non-periodic bounded bottom (a
step between different far-field levels) cannot be represented on the
torus without an artificial jump; use a smoothed periodic stand-in.
"""

import numpy as np

from .grid import Field, PeriodicInterpolant

__all__ = ["Bathymetry", "flat", "sinusoidal", "gaussian_bump", "fourier",
           "from_samples"]

# wrapped-sum images; tails beyond 3 periods are below double precision for
# every width admitted by the config validator (width <= L/8)
_IMAGES = range(-3, 4)


class Bathymetry:
    """Bottom profile with exact derivative evaluators up to order 3."""

    def __init__(self, xi, xi_x, xi_xx, xi_xxx, amplitude: float,
                 label: str = "custom"):
        self.xi = xi
        self.xi_x = xi_x
        self.xi_xx = xi_xx
        self.xi_xxx = xi_xxx
        self.amplitude = float(amplitude)
        self.label = label

    def __repr__(self):
        return f"Bathymetry({self.label}, amplitude={self.amplitude:.3g})"

    def __add__(self, other: "Bathymetry") -> "Bathymetry":
        return Bathymetry(
            lambda x: self.xi(x) + other.xi(x),
            lambda x: self.xi_x(x) + other.xi_x(x),
            lambda x: self.xi_xx(x) + other.xi_xx(x),
            lambda x: self.xi_xxx(x) + other.xi_xxx(x),
            self.amplitude + other.amplitude,
            f"{self.label}+{other.label}",
        )

    def scaled(self, factor: float) -> "Bathymetry":
        factor = float(factor)
        return Bathymetry(
            lambda x: factor * self.xi(x),
            lambda x: factor * self.xi_x(x),
            lambda x: factor * self.xi_xx(x),
            lambda x: factor * self.xi_xxx(x),
            abs(factor) * self.amplitude,
            f"{factor:g}*{self.label}",
        )


def flat() -> Bathymetry:
    def zero(x):
        return np.zeros_like(np.asarray(x, dtype=float))
    return Bathymetry(zero, zero, zero, zero, 0.0, "flat")


def sinusoidal(L: float, k: int, amp: float) -> Bathymetry:
    """xi = amp * sin(2 pi k x / L); k integer so the profile is periodic."""
    k = int(k)
    kap = 2.0 * np.pi * k / L
    return Bathymetry(
        lambda x: amp * np.sin(kap * np.asarray(x, dtype=float)),
        lambda x: amp * kap * np.cos(kap * np.asarray(x, dtype=float)),
        lambda x: -amp * kap ** 2 * np.sin(kap * np.asarray(x, dtype=float)),
        lambda x: -amp * kap ** 3 * np.cos(kap * np.asarray(x, dtype=float)),
        abs(amp),
        f"sinusoidal(k={k}, amp={amp:g})",
    )


def gaussian_bump(L: float, center: float, width: float,
                  height: float) -> Bathymetry:
    """Periodized Gaussian bump: sum of images over neighboring periods."""
    if width <= 0:
        raise ValueError("gaussian bump width must be positive")
    w2 = width * width

    def terms(x):
        x = np.asarray(x, dtype=float)
        for m in _IMAGES:
            r = x - center + m * L
            yield r, np.exp(-r * r / (2.0 * w2))

    def xi(x):
        return height * sum(e for _, e in terms(x))

    def xi_x(x):
        return height * sum(-(r / w2) * e for r, e in terms(x))

    def xi_xx(x):
        return height * sum((r * r / w2 ** 2 - 1.0 / w2) * e for r, e in terms(x))

    def xi_xxx(x):
        return height * sum((3.0 * r / w2 ** 2 - r ** 3 / w2 ** 3) * e
                            for r, e in terms(x))

    return Bathymetry(xi, xi_x, xi_xx, xi_xxx, abs(height),
                      f"gaussian-bump(center={center:g}, width={width:g}, "
                      f"height={height:g})")


def fourier(L: float, cos_coeffs, sin_coeffs) -> Bathymetry:
    """Band-limited profile sum_m a_m cos(2 pi m x/L) + b_m sin(2 pi m x/L),
    m = 1..len(coeffs).  Used for seeded perturbation directions."""
    a = np.asarray(cos_coeffs, dtype=float)
    b = np.asarray(sin_coeffs, dtype=float)
    if a.shape != b.shape:
        raise ValueError("cos and sin coefficient lists must match")
    kaps = 2.0 * np.pi * np.arange(1, len(a) + 1) / L

    def make(nu):
        def ev(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            for am, bm, kap in zip(a, b, kaps):
                ph = kap * x
                kn = kap ** nu
                if nu % 4 == 0:
                    out += kn * (am * np.cos(ph) + bm * np.sin(ph))
                elif nu % 4 == 1:
                    out += kn * (-am * np.sin(ph) + bm * np.cos(ph))
                elif nu % 4 == 2:
                    out += kn * (-am * np.cos(ph) - bm * np.sin(ph))
                else:
                    out += kn * (am * np.sin(ph) - bm * np.cos(ph))
            return out
        return ev

    amp = float(np.sum(np.abs(a)) + np.sum(np.abs(b)))
    return Bathymetry(make(0), make(1), make(2), make(3), amp, "fourier")


def from_samples(f: Field) -> Bathymetry:
    """Periodic cubic spline of supplied samples.

    The derivative evaluators come from the spline, so xi_xx is only
    piecewise-continuous and xi_xxx piecewise-constant; convergence studies
    against sampled bottoms report measured orders instead of asserting the
    smooth-case ones.
    """
    interp = PeriodicInterpolant(f)
    amp = float(np.max(np.abs(f.values)))
    return Bathymetry(
        lambda x: interp(x, 0), lambda x: interp(x, 1),
        lambda x: interp(x, 2), lambda x: interp(x, 3),
        amp, "sampled",
    )
