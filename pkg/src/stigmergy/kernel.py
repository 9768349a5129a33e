"""Distance-attenuation kernel derived from a three-phase synaptic model.

Phase I turns a dendritic voltage waveform into a glutamate concentration
(sigmoid release) and integrates the resulting microdomain calcium.  Phase II
spreads the rate of change of that calcium along a 1-D line of microdomains
with the damped wave (telegraph) equation.  Phase III maps the peak local
concentration to a slow inward current.  Normalising the current profile
gives the interaction kernel ``D(d)`` used by the learning model.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from stigmergy.errors import ConfigError, KernelConstructionError, NumericalInstabilityError

# Relative slack used when checking the CFL bound, so that dt == dx / v passes.
_CFL_SLACK = 1e-12


@dataclasses.dataclass(frozen=True)
class StimulusWaveform:
    """Square pulse train standing in for the dendritic voltage (mV, ms)."""

    pulse_amplitude: float = 30.0
    pulse_width: float = 2.0
    pulse_period: float = 10.0
    pulse_count: int = 5
    rest_level: float = -65.0

    def __post_init__(self):
        if not self.pulse_width > 0:
            raise ConfigError("pulse_width must be positive")
        if self.pulse_period < self.pulse_width:
            raise ConfigError("pulse_period must be >= pulse_width")
        if self.pulse_count < 1:
            raise ConfigError("pulse_count must be >= 1")
        if not self.pulse_amplitude > self.rest_level:
            raise ConfigError("pulse_amplitude must exceed rest_level")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        in_train = (t >= 0) & (t < self.pulse_count * self.pulse_period)
        in_pulse = np.mod(t, self.pulse_period) < self.pulse_width
        return np.where(in_train & in_pulse, self.pulse_amplitude, self.rest_level)


@dataclasses.dataclass(frozen=True)
class GluParams:
    t_max: float = 1.0
    v_base: float = 2.0
    k_n: float = 5.0

    def __post_init__(self):
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive")
        if not self.k_n > 0:
            raise ConfigError("k_n must be positive")


@dataclasses.dataclass(frozen=True)
class CalciumParams:
    v_ca: float = 20.0
    k_ca: float = 0.5
    hill_exp: float = 2.0
    tau_ca: float = 10.0
    ca_eq: float = 0.1

    def __post_init__(self):
        if not (self.v_ca > 0 and self.k_ca > 0 and self.tau_ca > 0):
            raise ConfigError("v_ca, k_ca and tau_ca must be positive")
        if self.hill_exp < 1:
            raise ConfigError("hill_exp must be >= 1")
        if self.ca_eq < 0:
            raise ConfigError("ca_eq must be non-negative")


@dataclasses.dataclass(frozen=True)
class TelegraphParams:
    """Grid and coefficients for the damped wave equation.

    Lengths share units with inter-synapse distances.
    """

    tau_d: float = 2.0
    d_coef: float = 2.0
    dx: float = 0.1
    dt: float = 0.1
    domain_len: float = 40.0
    duration: float = 60.0

    def __post_init__(self):
        for name in ("tau_d", "d_coef", "dx", "dt", "domain_len", "duration"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.dt > self.max_dt * (1 + _CFL_SLACK):
            raise ConfigError(
                f"CFL violated: dt={self.dt} > dx/speed={self.max_dt}")
        if self.n_cells < 16:
            raise ConfigError("domain_len / dx must be >= 16 grid cells")

    @property
    def speed(self):
        return math.sqrt(self.d_coef / self.tau_d)

    @property
    def max_dt(self):
        return self.dx / self.speed

    @property
    def n_cells(self):
        return int(round(self.domain_len / self.dx))

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    def refined(self, factor=2):
        """Same physics on a grid with dx and dt divided by ``factor``."""
        return dataclasses.replace(self, dx=self.dx / factor, dt=self.dt / factor)


@dataclasses.dataclass(frozen=True)
class RegulationParams:
    k_i: float = 1.0
    i_th: float = 0.5

    def __post_init__(self):
        if not self.k_i > 0:
            raise ConfigError("k_i must be positive")
        if self.i_th < 0:
            raise ConfigError("i_th must be non-negative")


@dataclasses.dataclass(frozen=True, eq=False)
class KernelTable:
    """Tabulated attenuation on a uniform grid ``0 .. d_th``."""

    distances: np.ndarray
    values: np.ndarray
    d_th: float

    def __post_init__(self):
        distances = np.array(self.distances, dtype=float)
        values = np.array(self.values, dtype=float)
        if distances.ndim != 1 or distances.shape != values.shape or len(distances) < 2:
            raise ConfigError("distances and values must be equal-length 1-D arrays")
        if distances[0] != 0 or np.any(np.diff(distances) <= 0):
            raise ConfigError("distances must start at 0 and increase")
        distances.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "distances", distances)
        object.__setattr__(self, "values", values)
        # evenly spaced tables allow direct indexing instead of a search
        steps = np.diff(distances)
        step = float(distances[-1] / (len(distances) - 1))
        uniform = bool(np.all(np.abs(steps - step) <= 1e-9 * step))
        object.__setattr__(self, "_step", step if uniform else None)

    def __call__(self, d):
        return kernel_eval(self, d)

    def __eq__(self, other):
        if not isinstance(other, KernelTable):
            return NotImplemented
        return (self.d_th == other.d_th
                and np.array_equal(self.distances, other.distances)
                and np.array_equal(self.values, other.values))

    __hash__ = None


@dataclasses.dataclass(frozen=True, eq=False)
class TelegraphField:
    """Solution ``c[n, m]`` at time ``t[n]`` and position ``x[m]``."""

    x: np.ndarray
    t: np.ndarray
    c: np.ndarray
    params: TelegraphParams


def glu_concentration(v_d, p: GluParams):
    """Sigmoid glutamate release for dendritic voltage ``v_d``."""
    v_d = np.asarray(v_d, dtype=float)
    # exp argument clipped so extreme voltages saturate without overflow warnings
    z = np.clip(-(v_d - p.v_base) / p.k_n, -700.0, 700.0)
    out = p.t_max / (1.0 + np.exp(z))
    return float(out) if out.ndim == 0 else out


def _hill_drive(glu, c: CalciumParams):
    tn = np.power(glu, c.hill_exp)
    return c.v_ca * tn / (c.k_ca ** c.hill_exp + tn)


def calcium_trace(waveform: StimulusWaveform, g: GluParams, c: CalciumParams,
                  dt: float, duration: float, ca0: float | None = None):
    """Integrate microdomain calcium driven by the waveform.

    Each step treats the Hill drive as constant and advances the linear
    relaxation exactly (exponential Euler), so pure relaxation and
    constant-drive fixed points are reproduced to rounding error.

    Returns an array of ``round(duration / dt) + 1`` samples, starting at
    ``ca0`` (default ``c.ca_eq``).
    """
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if dt > c.tau_ca / 10:
        raise ConfigError(f"dt={dt} exceeds tau_ca/10={c.tau_ca / 10}")
    if duration < 0:
        raise ConfigError("duration must be non-negative")
    n_steps = int(round(duration / dt))
    times = dt * np.arange(n_steps + 1)
    drive = _hill_drive(glu_concentration(waveform(times), g), c)
    decay = math.exp(-dt / c.tau_ca)
    trace = np.empty(n_steps + 1)
    trace[0] = c.ca_eq if ca0 is None else ca0
    targets = c.ca_eq + c.tau_ca * drive
    for n in range(n_steps):
        trace[n + 1] = targets[n] + (trace[n] - targets[n]) * decay
    return trace


def calcium_fixed_point(glu: float, c: CalciumParams) -> float:
    """Steady-state calcium under constant glutamate."""
    return c.ca_eq + c.tau_ca * float(_hill_drive(glu, c))


def telegraph_solve(source, p: TelegraphParams) -> TelegraphField:
    """Solve ``tau_d c_tt + c_t = D c_xx + b`` on the half-line ``[0, L]``.

    ``source[n]`` is the rate ``b(x0, t_n)`` injected at ``x = 0``. The
    origin is reflecting (mirror ghost node) and ``x = L`` is held at zero.
    Central differences in space and time; the field starts at rest.
    """
    source = np.asarray(source, dtype=float)
    n_steps, n_cells = p.n_steps, p.n_cells
    if source.shape != (n_steps + 1,):
        raise ConfigError(
            f"source has {source.size} samples, expected {n_steps + 1}")
    if p.dt > p.max_dt * (1 + _CFL_SLACK):
        raise ConfigError("CFL violated")

    dx, dt = p.dx, p.dt
    lam = p.d_coef / dx ** 2
    a_next = p.tau_d / dt ** 2 + 0.5 / dt
    a_prev = p.tau_d / dt ** 2 - 0.5 / dt
    a_now = 2 * p.tau_d / dt ** 2
    # origin node carries half a cell, so a point source lands as 2 b / dx
    inject = 2.0 / dx

    c = np.zeros((n_steps + 1, n_cells + 1))
    prev = np.zeros(n_cells + 1)
    now = c[0]
    lap = np.empty(n_cells + 1)
    for n in range(n_steps):
        lap[1:-1] = now[2:] - 2 * now[1:-1] + now[:-2]
        lap[0] = 2 * (now[1] - now[0])
        lap[-1] = 0.0
        rhs = lam * lap + a_now * now - a_prev * prev
        rhs[0] += inject * source[n]
        nxt = c[n + 1]
        nxt[:] = rhs / a_next
        nxt[-1] = 0.0
        if not np.isfinite(nxt).all():
            raise NumericalInstabilityError(f"non-finite field at step {n + 1}")
        prev, now = now, nxt
    x = dx * np.arange(n_cells + 1)
    t = dt * np.arange(n_steps + 1)
    return TelegraphField(x=x, t=t, c=c, params=p)


def _damped_accumulate(rate, p: TelegraphParams):
    """Discrete solution of ``tau_d M'' + M' = rate`` from rest.

    Uses the same time stencil as :func:`telegraph_solve`.
    """
    dt = p.dt
    a_next = p.tau_d / dt ** 2 + 0.5 / dt
    a_prev = p.tau_d / dt ** 2 - 0.5 / dt
    a_now = 2 * p.tau_d / dt ** 2
    out = np.zeros(len(rate))
    prev = 0.0
    for n in range(len(rate) - 1):
        out[n + 1] = (rate[n] + a_now * out[n] - a_prev * prev) / a_next
        prev = out[n]
    return out


def mass_balance(field: TelegraphField, source):
    """Grid mass, injected mass and far-boundary outflow per time step.

    Mass is the trapezoid sum of the field.  Injected and outflow are the
    source and boundary flux pushed through the damped accumulation the
    scheme applies, so ``mass == injected - outflow`` up to rounding.
    """
    p = field.params
    c = field.c
    mass = p.dx * (0.5 * c[:, 0] + c[:, 1:-1].sum(axis=1))
    flux = p.d_coef * c[:, -2] / p.dx
    injected = _damped_accumulate(np.asarray(source, dtype=float), p)
    outflow = _damped_accumulate(flux, p)
    return mass, injected, outflow


def regulation_current(ca, p: RegulationParams):
    """Slow inward current, ``k_i ln(ca - i_th)`` once that log is positive."""
    y = np.asarray(ca, dtype=float) - p.i_th
    safe = np.where(y > 1, y, 1.0)
    out = np.where(y > 1, p.k_i * np.log(safe), 0.0)
    return float(out) if out.ndim == 0 else out


def peak_profile(waveform: StimulusWaveform, g: GluParams, c: CalciumParams,
                 t: TelegraphParams):
    """Peak-over-time concentration at every grid position."""
    trace = calcium_trace(waveform, g, c, t.dt, t.duration)
    rate = np.gradient(trace, t.dt)
    field = telegraph_solve(rate, t)
    return field.x, field.c.max(axis=0)


def _tabulate(x, values, d_th):
    inside = x < d_th
    distances = np.append(x[inside], d_th)
    vals = np.append(values[inside], 0.0)
    return KernelTable(distances=distances, values=np.clip(vals, 0.0, 1.0), d_th=d_th)


def build_diffusion_kernel(waveform: StimulusWaveform, g: GluParams, c: CalciumParams,
                           t: TelegraphParams, r: RegulationParams,
                           d_th: float) -> KernelTable:
    """Run the three phases and normalise the current profile to ``D(0) = 1``."""
    if not 0 < d_th < t.domain_len:
        raise ConfigError("d_th must lie inside the telegraph domain")
    x, peak = peak_profile(waveform, g, c, t)
    current = regulation_current(peak, r)
    if not current[0] > 0:
        raise KernelConstructionError(
            f"no regulation current at the origin (peak={peak[0]:.6g}, i_th={r.i_th})")
    return _tabulate(x, current / current[0], d_th)


def build_gaussian_kernel(sigma: float, d_th: float, spacing: float = 0.1) -> KernelTable:
    """SOM-style Gaussian neighbourhood ``exp(-d^2 / 2 sigma^2)`` cut at ``d_th``."""
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    if not d_th > 0 or not spacing > 0:
        raise ConfigError("d_th and spacing must be positive")
    n = int(math.floor(d_th / spacing + 1e-9))
    x = spacing * np.arange(n + 1)
    return _tabulate(x, np.exp(-x ** 2 / (2 * sigma ** 2)), d_th)


def kernel_eval(k: KernelTable, d):
    """Linear interpolation of the table; exactly zero at and past ``d_th``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be non-negative")
    if k._step is not None:
        v = k.values
        u = np.minimum(d / k._step, len(v) - 1)
        with np.errstate(invalid="ignore"):
            i = np.minimum(u.astype(np.intp), len(v) - 2)
        out = v[i] + (v[i + 1] - v[i]) * (u - i)
    else:
        out = np.interp(d, k.distances, k.values)
    out = np.where((d >= k.d_th) | (d > k.distances[-1]), 0.0, out)
    return float(out) if out.ndim == 0 else out
