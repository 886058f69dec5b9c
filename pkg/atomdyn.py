# atomdyn.py
"""Dinamica interna dell'atomo a due livelli.

Equazioni di Bloch ottiche, stato stazionario, g_A^(2)(tau) del singolo
atomo e campionamento dei tempi di emissione con il metodo dei salti
quantistici (tempo di attesa sulla probabilità di sopravvivenza).

Convenzioni
-----------
* gamma = 2 beta (allargamento puramente radiativo)
* u = rho_eg + rho_ge, v = i(rho_ge - rho_eg), w = rho_ee - rho_gg
* Omega' = sqrt(Omega^2 + Delta^2)
"""

from __future__ import annotations

import cmath
import math
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from models import AtomCorrelation, AtomParams, BlochState, ConfigError, NumericFailure

# ------------------------------------------------------------------
# 1) Tolleranze dell'integratore
# ------------------------------------------------------------------
ODE_METHOD = "DOP853"
RTOL = 1e-10
ATOL = 1e-12
JUMP_RTOL = 1e-9
JUMP_XTOL = 1e-12  # relativa alla durata
# la sopravvivenza può risalire al più di questo prima di dichiarare fallimento
MONOTONE_TOL = 1e-8

Envelope = Callable[[float], float]


class ConstantEnvelope:
    """Inviluppo costante: abilita il propagatore esatto 2x2."""

    def __init__(self, level: float = 1.0):
        if not 0.0 <= level <= 1.0:
            raise ConfigError("envelope", f"livello {level} fuori da [0, 1]")
        self.level = float(level)

    def __call__(self, t):
        if np.ndim(t):
            return np.full(np.shape(t), self.level)
        return self.level

    def __repr__(self):
        return f"<ConstantEnvelope {self.level:g}>"


# ------------------------------------------------------------------
# 2) Equazioni di Bloch e stato stazionario
# ------------------------------------------------------------------
def bloch_derivative(s: BlochState, p: AtomParams) -> BlochState:
    """Restituisce (du/dt, dv/dt, dw/dt) come BlochState."""
    return BlochState(
        -p.beta * s.u + p.delta * s.v,
        -p.delta * s.u - p.beta * s.v - p.omega * s.w,
        p.omega * s.v - p.gamma * (s.w + 1.0),
    )


def _bloch_rhs(beta: float, delta: float, omega_t: Callable[[float], float]):
    def rhs(t, y):
        om = omega_t(t)
        u, v, w = y[0], y[1], y[2]
        return [
            -beta * u + delta * v,
            -delta * u - beta * v - om * w,
            om * v - 2.0 * beta * (w + 1.0),
        ]

    return rhs


def steady_state(p: AtomParams) -> BlochState:
    """Punto fisso in forma chiusa delle equazioni di Bloch."""
    damp = p.beta ** 2 + p.delta ** 2
    den = 2.0 * damp + p.omega ** 2
    w = -2.0 * damp / den
    v = 2.0 * p.omega * p.beta / den
    u = 2.0 * p.omega * p.delta / den
    return BlochState(u, v, w)


def generalized_rabi(p: AtomParams) -> float:
    return math.hypot(p.omega, p.delta)


# ------------------------------------------------------------------
# 3) Correlazione del singolo atomo
# ------------------------------------------------------------------
def _check_tau_grid(tau: np.ndarray) -> None:
    if tau.ndim != 1 or tau.size == 0:
        raise ConfigError("tau_grid", "serve una griglia 1D non vuota")
    if tau[0] != 0.0:
        raise ConfigError("tau_grid", "la griglia deve partire da 0")
    if np.any(np.diff(tau) < 0):
        raise ConfigError("tau_grid", "la griglia deve essere crescente")


def excited_population(p: AtomParams, envelope: Envelope | None, t_grid) -> np.ndarray:
    """rho_ee(t) partendo dallo stato fondamentale, con Omega(t) = omega * envelope(t)."""
    t = np.asarray(t_grid, dtype=float)
    _check_tau_grid(t)
    if t[-1] == 0.0:
        return np.zeros_like(t)
    env = envelope if envelope is not None else ConstantEnvelope()
    rhs = _bloch_rhs(p.beta, p.delta, lambda s: p.omega * env(s))
    sol = solve_ivp(rhs, (0.0, t[-1]), [0.0, 0.0, -1.0], method=ODE_METHOD,
                    t_eval=t, rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise NumericFailure(f"integrazione di Bloch fallita: {sol.message}")
    return 0.5 * (1.0 + sol.y[2])


def bloch_trajectory(p: AtomParams, t_grid) -> np.ndarray:
    """Componenti (u, v, w) sulla griglia, partendo da (0, 0, -1); forma (3, n)."""
    t = np.asarray(t_grid, dtype=float)
    _check_tau_grid(t)
    if t[-1] == 0.0:
        return np.tile([[0.0], [0.0], [-1.0]], (1, t.size))
    rhs = _bloch_rhs(p.beta, p.delta, lambda s: p.omega)
    sol = solve_ivp(rhs, (0.0, t[-1]), [0.0, 0.0, -1.0], method=ODE_METHOD,
                    t_eval=t, rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise NumericFailure(f"integrazione di Bloch fallita: {sol.message}")
    return sol.y


def g2_atom(p: AtomParams, tau_grid) -> AtomCorrelation:
    """g_A^(2)(tau) = rho_ee(tau) / rho_ee^ss con ripreparazione nello stato fondamentale."""
    tau = np.asarray(tau_grid, dtype=float)
    _check_tau_grid(tau)
    rho_ss = steady_state(p).excited_population
    if rho_ss <= 0.0:
        raise NumericFailure("correlazione non definita: rho_ee stazionaria nulla (omega = 0)")
    rho = excited_population(p, None, tau)
    # rumore numerico attorno a zero
    g2 = np.clip(rho / rho_ss, 0.0, None)
    return AtomCorrelation(tau, g2)


def g2_atom_closed_form(p: AtomParams, tau):
    """Forma chiusa in risonanza per pilotaggio forte (Omega > beta/2)."""
    if p.delta != 0.0:
        raise ConfigError("atom.delta", "la forma chiusa richiede delta = 0")
    if p.omega <= 0.5 * p.beta:
        raise ConfigError("atom.omega", "la forma chiusa richiede omega > beta/2")
    mu = math.sqrt(p.omega ** 2 - 0.25 * p.beta ** 2)
    a = 1.5 * p.beta
    tau = np.asarray(tau, dtype=float)
    value = 1.0 - np.exp(-a * tau) * (np.cos(mu * tau) + (a / mu) * np.sin(mu * tau))
    return float(value) if value.ndim == 0 else value


# ------------------------------------------------------------------
# 4) Salti quantistici
# ------------------------------------------------------------------
class _ConstantPropagator:
    """exp(M s) applicato a (1, 0) per M costante, via Cayley-Hamilton.

    M = [[0, i Om/2], [i Om/2, i Delta - beta]], quindi
    c_g(s) = s0(s) e c_e(s) = s1(s) * i Om/2.
    """

    def __init__(self, p: AtomParams, level: float):
        self.half = 0.5 * p.omega * level
        tr = complex(-p.beta, p.delta)
        det = self.half ** 2
        root = cmath.sqrt(tr * tr - 4.0 * det)
        self.a = 0.5 * (tr + root)
        self.b = 0.5 * (tr - root)
        scale = abs(self.a) + abs(self.b) + 1e-300
        self.degenerate = abs(self.a - self.b) < 1e-7 * scale

    def amplitudes(self, s):
        s = np.asarray(s, dtype=float)
        a, b = self.a, self.b
        if self.degenerate:
            ea = np.exp(a * s)
            s0 = ea * (1.0 - a * s)
            s1 = s * ea
        else:
            ea, eb = np.exp(a * s), np.exp(b * s)
            s0 = (a * eb - b * ea) / (a - b)
            s1 = (ea - eb) / (a - b)
        return s0, 1j * self.half * s1

    def survival(self, s):
        if np.ndim(s) == 0:
            return self._survival_scalar(float(s))
        cg, ce = self.amplitudes(s)
        return np.abs(cg) ** 2 + np.abs(ce) ** 2

    def _survival_scalar(self, s: float) -> float:
        # percorso scalare per brentq
        a, b = self.a, self.b
        if self.degenerate:
            ea = cmath.exp(a * s)
            s0 = ea * (1.0 - a * s)
            s1 = s * ea
        else:
            ea, eb = cmath.exp(a * s), cmath.exp(b * s)
            s0 = (a * eb - b * ea) / (a - b)
            s1 = (ea - eb) / (a - b)
        return abs(s0) ** 2 + (self.half * abs(s1)) ** 2


def _amplitude_rhs(p: AtomParams, envelope: Envelope):
    beta, delta, omega = p.beta, p.delta, p.omega

    def rhs(t, y):
        h = 0.5 * omega * envelope(t)
        return [
            -h * y[3],
            h * y[2],
            -h * y[1] - beta * y[2] - delta * y[3],
            h * y[0] + delta * y[2] - beta * y[3],
        ]

    return rhs


def survival_trace(p: AtomParams, envelope: Envelope | None, t_grid):
    """Evoluzione senza salti da (1, 0): restituisce (P(t), |c_e(t)|^2)."""
    t = np.asarray(t_grid, dtype=float)
    _check_tau_grid(t)
    env = envelope if envelope is not None else ConstantEnvelope()
    if t[-1] == 0.0:
        return np.ones_like(t), np.zeros_like(t)
    sol = solve_ivp(_amplitude_rhs(p, env), (0.0, t[-1]), [1.0, 0.0, 0.0, 0.0],
                    method=ODE_METHOD, t_eval=t, rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise NumericFailure(f"evoluzione non hermitiana fallita: {sol.message}")
    y = sol.y
    ce2 = y[2] ** 2 + y[3] ** 2
    return y[0] ** 2 + y[1] ** 2 + ce2, ce2


def _sample_constant(p: AtomParams, level: float, duration: float, rng) -> np.ndarray:
    prop = _ConstantPropagator(p, level)
    survival = prop._survival_scalar
    xtol = JUMP_XTOL * duration
    times = []
    t = 0.0
    while t < duration:
        r = rng.random()
        remaining = duration - t
        if survival(remaining) >= r:
            break
        s = brentq(lambda x: survival(x) - r, 0.0, remaining, xtol=xtol)
        t += s
        if t >= duration:
            break
        times.append(t)
    return np.asarray(times, dtype=float)


def _sample_ode(p: AtomParams, envelope: Envelope, duration: float, rng) -> np.ndarray:
    rhs = _amplitude_rhs(p, envelope)
    times = []
    t = 0.0
    while t < duration:
        r = rng.random()

        def crossing(s, y, r=r):
            return y[0] ** 2 + y[1] ** 2 + y[2] ** 2 + y[3] ** 2 - r

        crossing.terminal = True
        crossing.direction = -1

        sol = solve_ivp(rhs, (t, duration), [1.0, 0.0, 0.0, 0.0], method=ODE_METHOD,
                        rtol=JUMP_RTOL, atol=ATOL, events=crossing)
        if sol.status == -1:
            raise NumericFailure(f"integrazione del salto fallita: {sol.message}")
        survival = np.sum(sol.y ** 2, axis=0)
        if np.any(np.diff(survival) > MONOTONE_TOL):
            raise NumericFailure("sopravvivenza non monotona: passo dell'integratore troppo largo")
        if sol.status != 1 or not len(sol.t_events[0]):
            break
        t = float(sol.t_events[0][0])
        if t >= duration:
            break
        times.append(t)
    return np.asarray(times, dtype=float)


def sample_emission_times(p: AtomParams, envelope: Envelope | None, duration: float,
                          rng: np.random.Generator) -> np.ndarray:
    """Tempi di emissione crescenti in [0, duration) con il metodo dei salti.

    Ogni salto riporta l'atomo nello stato fondamentale (1, 0) e si estrae
    un nuovo numero uniforme r; il salto avviene quando P(t) scende a r.
    """
    if not duration > 0:
        raise ConfigError("duration", "deve essere > 0")
    if p.omega == 0.0:
        return np.empty(0, dtype=float)
    if envelope is None:
        envelope = ConstantEnvelope()
    if isinstance(envelope, ConstantEnvelope):
        if envelope.level == 0.0:
            return np.empty(0, dtype=float)
        return _sample_constant(p, envelope.level, duration, rng)
    return _sample_ode(p, envelope, duration, rng)


def photons_per_transit(p: AtomParams, envelope: Envelope | None, length: float) -> float:
    """Numero atteso di emissioni 2 beta * integrale di rho_ee su [0, length]."""
    env = envelope if envelope is not None else ConstantEnvelope()
    if p.omega == 0.0 or length <= 0:
        return 0.0
    bloch = _bloch_rhs(p.beta, p.delta, lambda s: p.omega * env(s))

    def rhs(t, y):
        du, dv, dw = bloch(t, y)
        return [du, dv, dw, p.beta * (1.0 + y[2])]

    sol = solve_ivp(rhs, (0.0, length), [0.0, 0.0, -1.0, 0.0], method=ODE_METHOD,
                    rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise NumericFailure(f"integrazione di Bloch fallita: {sol.message}")
    return float(sol.y[3, -1])
