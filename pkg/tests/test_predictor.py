import numpy as np
import pytest

from looptrack.ekf import EvolutionMatrix, FilterConfig, Observation, track
from looptrack.errors import DegenerateMotionError, InvalidInputError
from looptrack.predictor import observe_phase, predict_horizon


def circle_states(n, radius=1.0, delta=0.05, rate=20.0, center=(0.0, 0.0), phase=0.0):
    ts = np.arange(n) / rate
    ang = phase + delta * np.arange(n)
    pos = np.asarray(center) + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return list(zip(ts, pos)), pos


class TestObservePhase:
    def test_exact_circle(self):
        states, _ = circle_states(20, delta=0.05)
        ev, last, speed = observe_phase(states)
        assert ev.c == pytest.approx(np.cos(0.05), abs=1e-9)
        assert ev.s == pytest.approx(np.sin(0.05), abs=1e-9)
        assert np.allclose(last, states[-1][1] - states[-2][1])
        chord = 2 * np.sin(0.025)
        assert speed == pytest.approx(chord * 20.0, rel=1e-9)

    def test_straight_line(self):
        ts = np.arange(10) / 10.0
        pos = np.outer(np.arange(10, dtype=float), [0.5, 0.2])
        ev, last, speed = observe_phase(list(zip(ts, pos)))
        assert ev.c == pytest.approx(1.0, abs=1e-12)
        assert ev.s == pytest.approx(0.0, abs=1e-12)

    def test_window_too_small(self):
        states, _ = circle_states(3)
        with pytest.raises(InvalidInputError):
            observe_phase(states)

    def test_stationary(self):
        states = [(float(i), np.array([1.0, 1.0])) for i in range(6)]
        with pytest.raises(DegenerateMotionError):
            observe_phase(states)


class TestPredictHorizon:
    def test_straight_continuation(self):
        ev = EvolutionMatrix(1.0, 0.0)
        hz = predict_horizon((0.0, np.zeros(2)), ev, np.array([1.0, 0.0]), 3, dt=1.0)
        assert np.allclose(hz.points, [[1, 0], [2, 0], [3, 0]])
        assert np.allclose(hz.times, [1.0, 2.0, 3.0])

    def test_full_loop_closure(self):
        delta = 2 * np.pi / 100
        states, pos = circle_states(10, radius=1.0, delta=delta)
        ev, last, _ = observe_phase(states)
        hz = predict_horizon(states[-1], ev, last, 100, dt=0.05)
        assert np.linalg.norm(hz.points[-1] - pos[-1]) < 1e-6

    def test_matches_analytic_circle(self):
        delta, n, m = 0.07, 30, 10
        states, _ = circle_states(n, radius=2.0, delta=delta, center=(3.0, -1.0))
        ev, last, _ = observe_phase(states)
        hz = predict_horizon(states[-1], ev, last, m, dt=0.05)
        ang = delta * (np.arange(1, m + 1) + n - 1)
        expected = np.asarray([3.0, -1.0]) + 2.0 * np.column_stack([np.cos(ang), np.sin(ang)])
        assert np.max(np.linalg.norm(hz.points - expected, axis=1)) < 1e-9

    def test_displacement_norms_constant(self):
        states, _ = circle_states(12, radius=3.0, delta=0.2)
        ev, last, _ = observe_phase(states)
        hz = predict_horizon(states[-1], ev, last, 25, dt=0.1)
        steps = np.diff(np.vstack([hz.anchor, hz.points]), axis=0)
        norms = np.linalg.norm(steps, axis=1)
        assert np.allclose(norms, np.linalg.norm(last), rtol=1e-12)

    def test_semigroup_property(self):
        states, _ = circle_states(10, radius=1.5, delta=0.11)
        ev, last, _ = observe_phase(states)
        m = 6
        hz2m = predict_horizon(states[-1], ev, last, 2 * m, dt=0.05)
        hzm = predict_horizon(states[-1], ev, last, m, dt=0.05)
        # re-anchor at waypoint m with the rotated displacement
        d_m = hzm.points[-1] - hzm.points[-2]
        hz_tail = predict_horizon((hzm.times[-1], hzm.points[-1]), ev, d_m, m, dt=0.05)
        assert np.max(np.abs(hz_tail.points - hz2m.points[m:])) < 1e-10

    def test_bad_args(self):
        ev = EvolutionMatrix(1.0, 0.0)
        with pytest.raises(InvalidInputError):
            predict_horizon((0.0, np.zeros(2)), ev, np.array([1.0, 0.0]), 0, dt=1.0)
        with pytest.raises(InvalidInputError):
            predict_horizon((0.0, np.zeros(2)), ev, np.zeros(2), 3, dt=1.0)
        with pytest.raises(InvalidInputError):
            predict_horizon((0.0, np.zeros(2)), ev, np.array([1.0, 0.0]), 3, dt=0.0)


class TestBeatsDeadReckoning:
    def test_noisy_circle_vs_straight_line(self):
        # filtered states consumed at a coarser cadence (every 8th sample) so
        # the observation chords carry curvature signal above the noise; both
        # methods get the same anchor, displacement and m=10 horizon
        radius, speed, rate, m = 5.0, 2.0, 20.0, 10
        stride, nwin = 8, 12
        sigma = 0.05 * radius
        period_samples = int(2 * np.pi * radius / speed * rate)
        wins = 0
        trials = 30
        for seed in range(trials):
            rng = np.random.default_rng(1000 + seed)
            n = period_samples + 50
            ts = np.arange(n) / rate
            ang = speed / radius * ts
            truth = radius * np.column_stack([np.cos(ang), np.sin(ang)])
            noisy = truth + rng.normal(scale=sigma, size=truth.shape)
            obs = [Observation(t, p) for t, p in zip(ts, noisy)]
            cfg = FilterConfig(window_len=10, q_std=0.05, r_std=sigma)
            filtered = track(obs, cfg)
            cut = n - m * stride  # hold out the last m strided steps
            states = [(s.t, s.pos) for s in filtered[:cut]][-nwin * stride::stride]
            ev, last, _ = observe_phase(states)
            hz = predict_horizon(states[-1], ev, last, m, dt=stride / rate)
            target = truth[cut - 1 + stride * np.arange(1, m + 1)]
            pred_err = np.linalg.norm(hz.points - target, axis=1).mean()
            dead = states[-1][1] + np.outer(np.arange(1, m + 1), last)
            dead_err = np.linalg.norm(dead - target, axis=1).mean()
            wins += pred_err < dead_err
        assert wins >= 0.9 * trials
