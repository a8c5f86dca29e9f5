"""Single-rate time integrators and the coefficient engine.

The semi-analytic coefficients are entire functions of gamma = -dt/tau
built from the phi family, phi_k(z) = sum_j z^j/(j+k)!.  Every closed form
is evaluated through a complex contour mean (unit circle centered at
gamma), which keeps full accuracy both in the stiff limit and near the
removable singularity at gamma = 0; the phi kernels themselves switch to
a truncated series near z = 0 so contour samples close to the origin do
not lose digits either.

Integrators share a small duck-typed "system" interface:

    lam                per-DOF stiff rates (0 on classically stepped DOFs)
    rhs_full(y, t)     complete right-hand side
    rhs_semi(y, t)     F = rhs_full + lam*y (stiff diagonal removed)
    rhs_nonstiff(y, t) transport part only        (LSIMEX)
    stiff_gpart(y, t)  G with N(y) = -lam*y + G(y) (LSIMEX)
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

_FACT = [math.factorial(k) for k in range(40)]


def phi_k(z, k, series_cutoff=0.2, terms=26):
    """phi_k evaluated on complex input, stable for any magnitude."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < series_cutoff

    if small.any():
        zs = z[small]
        acc = np.zeros_like(zs)
        for j in range(terms - 1, -1, -1):
            acc = acc * zs + 1.0 / _FACT[j + k]
        out[small] = acc
    if (~small).any():
        zb = z[~small]
        acc = np.exp(zb)
        for m in range(k):
            acc = (acc - 1.0 / _FACT[m]) / zb
        out[~small] = acc
    return out


def exp_moment(z, k):
    """I_k(z) = integral_0^1 e^{z(1-u)} u^k du = k! phi_{k+1}(z)."""
    return _FACT[k] * phi_k(z, k + 1)


def half_moment(z, k):
    """integral_0^{1/2} e^{z(1/2-u)} u^k du = (1/2)^{k+1} I_k(z/2)."""
    return 0.5 ** (k + 1) * exp_moment(0.5 * z, k)


def phi_eval(f, gamma, npoints=32):
    """Contour mean of an analytic coefficient function at real gamma.

    Samples the upper half of the 64-point unit circle centered at gamma
    and averages the real part; symmetry supplies the lower half.
    """
    theta = np.pi * (np.arange(1, npoints + 1) - 0.5) / npoints
    z = gamma + np.exp(1j * theta)
    return float(np.mean(np.real(f(z))))


# ---------------------------------------------------------------------------
# Adams-Bashforth family

# Lagrange polynomials through the history points 0,-1,..,-(s-1), expanded
# in powers of u; row i gives the monomial mix of l_i.
_LAGRANGE_MIX = {
    1: [[1.0]],
    2: [[1.0, 1.0], [0.0, -1.0]],
    3: [[1.0, 1.5, 0.5], [0.0, -2.0, -1.0], [0.0, 0.5, 0.5]],
}

CLASSICAL_FULL = {1: (1.0,), 2: (1.5, -0.5), 3: (23 / 12, -16 / 12, 5 / 12)}
CLASSICAL_HALF = {1: (0.5,), 2: (5 / 8, -1 / 8), 3: (17 / 24, -7 / 24, 1 / 12)}


def saab_full_function(order, i):
    mix = _LAGRANGE_MIX[order][i]
    def f(z):
        return sum(ck * exp_moment(z, k) for k, ck in enumerate(mix))
    return f


def saab_half_function(order, i):
    mix = _LAGRANGE_MIX[order][i]
    def f(z):
        return sum(ck * half_moment(z, k) for k, ck in enumerate(mix))
    return f


def saab_coefficients(order, gamma):
    """Full-step and half-step semi-analytic AB coefficients at gamma
    together with their classical limits."""
    if order not in (1, 2, 3):
        raise ConfigError(f"SAAB order {order} unsupported (1, 2, or 3)")
    full = np.array([phi_eval(saab_full_function(order, i), gamma)
                     for i in range(order)])
    half = np.array([phi_eval(saab_half_function(order, i), gamma)
                     for i in range(order)])
    return (full, half,
            np.array(CLASSICAL_FULL[order]), np.array(CLASSICAL_HALF[order]))


# ---------------------------------------------------------------------------
# Runge-Kutta tableaus

@dataclass(frozen=True)
class SarkTableau:
    """Explicit base RK tableau adapted semi-analytically."""

    name: str
    c: tuple
    a: tuple          # ((i, j, value), ...)
    b: tuple

    def __post_init__(self):
        cs = self.c
        if len(set(cs)) != len(cs):
            raise ConfigError(
                "SARK needs distinct stage times for the Lagrange update")

    def a_entry(self, i, j):
        for ii, jj, v in self.a:
            if (ii, jj) == (i, j):
                return v
        return 0.0

    def atilde_function(self, i, j):
        ci = self.c[i]
        aij = self.a_entry(i, j)
        def f(z):
            return aij * phi_k(ci * z, 1)
        return f

    def btilde_function(self, i):
        # Lagrange polynomial through the stage times, exponential-weighted
        others = [self.c[j] for j in range(len(self.c)) if j != i]
        denom = np.prod([self.c[i] - cj for cj in others])
        poly = np.poly1d(np.poly(others) / denom)
        mix = poly.coefficients[::-1]
        def f(z):
            return sum(ck * exp_moment(z, k) for k, ck in enumerate(mix))
        return f

    def coefficients(self, gamma):
        s = len(self.c)
        at = {(i, j): phi_eval(self.atilde_function(i, j), gamma)
              for i, j, _ in self.a}
        bt = np.array([phi_eval(self.btilde_function(i), gamma)
                       for i in range(s)])
        return at, bt


SARK_CLASSICAL = SarkTableau(
    name="classical_rk3",
    c=(0.0, 0.5, 1.0),
    a=((1, 0, 0.5), (2, 0, -1.0), (2, 1, 2.0)),
    b=(1 / 6, 2 / 3, 1 / 6),
)

SARK_ADAPTED = SarkTableau(
    name="adapted_rk3",
    c=(0.0, 1 / 3, 3 / 4),
    a=((1, 0, 1 / 3), (2, 0, -3 / 16), (2, 1, 15 / 16)),
    b=(1 / 6, 3 / 10, 8 / 15),
)

SARK_TABLEAUS = {"classical": SARK_CLASSICAL, "adapted": SARK_ADAPTED}


# Third-order low-storage IMEX pair: explicit subdiagonal plus accumulated
# weights, implicit diagonal+subdiagonal, stiffly accurate and L-stable.
_RT97 = math.sqrt(97.0)

@dataclass(frozen=True)
class LsimexTableau:
    c: tuple
    b: tuple
    a_sub: tuple      # explicit a_{i,i-1}
    ah_sub: tuple     # implicit a~_{i,i-1}
    ah_diag: tuple    # implicit a~_{i,i}

    @property
    def stages(self):
        return len(self.c)


LSIMEX_TABLEAU = LsimexTableau(
    c=(0.0, 0.5, (17.0 - _RT97) / 24.0, 1.0),
    b=(0.0, (13.0 - _RT97) / 18.0, (31.0 - _RT97) / 36.0, (_RT97 - 7.0) / 12.0),
    a_sub=(0.0, 0.5, (17.0 - _RT97) / 24.0, (5.0 + _RT97) / 18.0),
    ah_sub=(0.0, 0.0, (5.0 - _RT97) / 12.0, (31.0 - _RT97) / 36.0),
    ah_diag=(0.0, 0.5, (7.0 + _RT97) / 24.0, (_RT97 - 7.0) / 12.0),
)

# Carpenter-Kennedy five-stage fourth-order low-storage RK.
LSERK_A = (0.0,
           -567301805773.0 / 1357537059087.0,
           -2404267990393.0 / 2016746695238.0,
           -3550918686646.0 / 2091501179385.0,
           -1275806237668.0 / 842570457699.0)
LSERK_B = (1432997174477.0 / 9575080441755.0,
           5161836677717.0 / 13612068292357.0,
           1720146321549.0 / 2090206949498.0,
           3134564353537.0 / 4481467310338.0,
           2277821191437.0 / 14882151754819.0)
LSERK_C = (0.0,
           1432997174477.0 / 9575080441755.0,
           2526269341429.0 / 6820363962896.0,
           2006345519317.0 / 3224310063776.0,
           2802321613138.0 / 2924317926251.0)


# ---------------------------------------------------------------------------
# per-DOF coefficient tables

def _per_dof(fn, lam, dt):
    """Evaluate a scalar gamma-function per DOF, caching over the (few)
    distinct stiff rates."""
    gammas = -dt * lam
    out = np.empty_like(gammas)
    for g in np.unique(gammas):
        out[gammas == g] = fn(g)
    return out


class SaabIntegrator:
    """Semi-analytic Adams-Bashforth with order ramp-up.

    History may be seeded exactly (list of F values at t0-dt, t0-2dt) to
    skip the ramp in convergence studies.
    """

    def __init__(self, system, dt, order=3):
        if order not in (1, 2, 3):
            raise ConfigError(f"SAAB order {order} unsupported")
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.sys = system
        self.dt = dt
        self.order = order
        lam = system.lam
        self.expfac = np.exp(-dt * lam)
        self.coeffs = {}
        for o in range(1, order + 1):
            self.coeffs[o] = np.stack([
                _per_dof(lambda g, i=i, o=o: phi_eval(saab_full_function(o, i), g),
                         lam, dt)
                for i in range(o)])
        self.history = []
        self.t = None
        self.y = None

    def start(self, y0, t0=0.0, history=None):
        self.y = np.array(y0, dtype=float, copy=True)
        self.t = t0
        self.history = [self.sys.rhs_semi(self.y, t0)]
        if history:
            self.history += [np.asarray(h, dtype=float) for h in history]
        self.history = self.history[:self.order]
        return self

    def step(self):
        o = min(self.order, len(self.history))
        coef = self.coeffs[o]
        acc = coef[0] * self.history[0]
        for i in range(1, o):
            acc += coef[i] * self.history[i]
        self.y = self.expfac * self.y + self.dt * acc
        self.t += self.dt
        f_new = self.sys.rhs_semi(self.y, self.t)
        self.history = [f_new] + self.history[:self.order - 1]
        return self.y

    def run(self, nsteps):
        for _ in range(nsteps):
            self.step()
        return self.y


class SarkIntegrator:
    """Semi-analytic Runge-Kutta (three stages, order three)."""

    def __init__(self, system, dt, tableau=SARK_ADAPTED):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.sys = system
        self.dt = dt
        self.tab = tableau
        lam = system.lam
        self.at = {(i, j): _per_dof(
            lambda g, i=i, j=j: phi_eval(tableau.atilde_function(i, j), g),
            lam, dt) for i, j, _ in tableau.a}
        self.bt = [_per_dof(
            lambda g, i=i: phi_eval(tableau.btilde_function(i), g), lam, dt)
            for i in range(len(tableau.c))]
        self.efac = {ci: np.exp(-dt * ci * lam) for ci in tableau.c}
        self.t = None
        self.y = None

    def start(self, y0, t0=0.0):
        self.y = np.array(y0, dtype=float, copy=True)
        self.t = t0
        return self

    def step(self):
        tab, dt, t, y = self.tab, self.dt, self.t, self.y
        fs = [self.sys.rhs_semi(y, t)]
        for i in range(1, len(tab.c)):
            acc = np.zeros_like(y)
            for j in range(i):
                if (i, j) in self.at:
                    acc += self.at[(i, j)] * fs[j]
            yi = self.efac[tab.c[i]] * y + dt * acc
            fs.append(self.sys.rhs_semi(yi, t + tab.c[i] * dt))
        acc = self.bt[0] * fs[0]
        for i in range(1, len(fs)):
            acc += self.bt[i] * fs[i]
        self.y = self.efac[1.0] * y + dt * acc
        self.t = t + dt
        return self.y

    def run(self, nsteps):
        for _ in range(nsteps):
            self.step()
        return self.y


class LsimexIntegrator:
    """Low-storage IMEX with a closed-form node-wise implicit solve.

    The stiff part keeps the collision structure N(y) = -lam*y + G(y) with
    G independent of the stiff DOFs, so every implicit stage reduces to a
    diagonal update.
    """

    def __init__(self, system, dt, tableau=LSIMEX_TABLEAU):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.sys = system
        self.dt = dt
        self.tab = tableau
        lam = system.lam
        self.denoms = []
        for d in tableau.ah_diag:
            den = 1.0 + d * dt * lam
            if np.any(den == 0.0):
                raise NumericalError("singular LSIMEX stage: 1 + a~_ii dt/tau = 0")
            self.denoms.append(den)
        self.t = None
        self.y = None

    def start(self, y0, t0=0.0):
        self.y = np.array(y0, dtype=float, copy=True)
        self.t = t0
        return self

    def step(self):
        sys_, tab, dt = self.sys, self.tab, self.dt
        lam = sys_.lam
        q = self.y.copy()
        kn = kl = None
        for i in range(tab.stages):
            if i == 0:
                stage = q.copy()
            else:
                stage = (q + (tab.ah_sub[i] - tab.b[i - 1]) * dt * kn
                           + (tab.a_sub[i] - tab.b[i - 1]) * dt * kl)
            # KN = N(stage + d dt KN), exact because G ignores stiff DOFs
            g = sys_.stiff_gpart(stage, self.t + tab.c[i] * dt)
            kn = (-lam * stage + g) / self.denoms[i]
            ys = stage + tab.ah_diag[i] * dt * kn
            kl = sys_.rhs_nonstiff(ys, self.t + tab.c[i] * dt)
            if tab.b[i] != 0.0:
                q += tab.b[i] * dt * (kn + kl)
        self.y = q
        self.t += dt
        return self.y

    def run(self, nsteps):
        for _ in range(nsteps):
            self.step()
        return self.y


class LserkIntegrator:
    """Five-stage fourth-order low-storage explicit RK (reference scheme)."""

    def __init__(self, system, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.sys = system
        self.dt = dt
        self.t = None
        self.y = None
        self._res = None

    def start(self, y0, t0=0.0):
        self.y = np.array(y0, dtype=float, copy=True)
        self.t = t0
        self._res = np.zeros_like(self.y)
        return self

    def step(self):
        y, res, dt = self.y, self._res, self.dt
        for a, b, c in zip(LSERK_A, LSERK_B, LSERK_C):
            rhs = self.sys.rhs_full(y, self.t + c * dt)
            res *= a
            res += dt * rhs
            y += b * res
        self.t += dt
        return y

    def run(self, nsteps):
        for _ in range(nsteps):
            self.step()
        return self.y


INTEGRATORS = {
    "lserk": lambda sys_, dt: LserkIntegrator(sys_, dt),
    "saab1": lambda sys_, dt: SaabIntegrator(sys_, dt, order=1),
    "saab2": lambda sys_, dt: SaabIntegrator(sys_, dt, order=2),
    "saab3": lambda sys_, dt: SaabIntegrator(sys_, dt, order=3),
    "sark": lambda sys_, dt: SarkIntegrator(sys_, dt, SARK_ADAPTED),
    "sark_classical": lambda sys_, dt: SarkIntegrator(sys_, dt, SARK_CLASSICAL),
    "lsimex": lambda sys_, dt: LsimexIntegrator(sys_, dt),
}


def make_integrator(name, system, dt):
    try:
        factory = INTEGRATORS[name]
    except KeyError:
        raise ConfigError(
            f"unknown integrator {name!r}; options: {sorted(INTEGRATORS)}")
    return factory(system, dt)
