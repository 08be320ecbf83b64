import math

import numpy as np
import pytest

from kpderev import (
    EstimatorSpec,
    NumericsError,
    StftConfig,
    TFGrid,
    analyze,
    estimate,
    fcp_process,
    have_native,
    image_method,
    kron_expand,
    kpfcp_process,
    render_scene,
    speech_like,
    stacked_regressors,
)
from kpderev.fcp import FcpBinState, FcpParams
from kpderev.kpfcp import KpfcpBinState, KpfcpParams
from kpderev.rls import rls_update
from kpderev.room import RoomScene

from conftest import cnormal

BACKENDS = ["python"] + (["native"] if have_native() else [])


def test_initial_state_expands_to_unit_filter():
    params = KpfcpParams(p=3, k1=5, k2=4)
    state = KpfcpBinState(params)
    g = kron_expand(state.g1_blocks(), state.g2_blocks())
    expected = np.zeros(params.k, complex)
    expected[0] = 1.0
    np.testing.assert_array_equal(g, expected)


def test_params_validation():
    with pytest.raises(ValueError, match="rank bound"):
        KpfcpParams(p=6, k1=5, k2=9)
    with pytest.raises(ValueError):
        KpfcpParams(alpha1=0.0)
    with pytest.raises(ValueError):
        KpfcpParams(p=0)


def test_projection_identity_holds_along_trajectory(rng):
    # efficient output term equals the expanded filter applied to history
    params = KpfcpParams(p=2, k1=3, k2=3)
    state = KpfcpBinState(params)
    hist = np.zeros(params.k, complex)
    for _ in range(50):
        y = complex(*rng.standard_normal(2))
        s = complex(*rng.standard_normal(2))
        state.step(y, s, abs(y) ** 2 + 0.1)
        hist[1:] = hist[:-1]
        hist[0] = s
        s2, s1 = stacked_regressors(hist, state.g1_blocks(), state.g2_blocks())
        g = kron_expand(state.g1_blocks(), state.g2_blocks())
        ref = np.vdot(g, hist)
        assert abs(np.vdot(state.g1, s2) - ref) < 1e-10 * max(1.0, abs(ref))
        assert abs(np.vdot(state.g2, s1) - ref) < 1e-10 * max(1.0, abs(ref))


def test_zero_first_bank_updates_both_banks(rng):
    # with g1 = 0 the first error is the raw observation; after g1 moves,
    # the second projection is nonzero, so g2 moves too (sequential order)
    params = KpfcpParams(p=2, k1=3, k2=3)
    state = KpfcpBinState(params)
    state.g1[:] = 0.0
    g2_before = state.g2.copy()
    for _ in range(3):
        state.step(complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2)), 1.0)
    assert np.any(state.g1 != 0)
    assert np.abs(state.g2 - g2_before).max() > 1e-12


def test_first_bank_matches_weighted_ls_with_pinned_second_bank(rng):
    # drive only the first-bank update; its stacked filter solves the
    # regularized weighted LS over the projected regressors
    params = KpfcpParams(p=2, k1=3, k2=4, alpha1=1.0)
    state = KpfcpBinState(params)
    n1 = params.p * params.k1
    hist = np.zeros(params.k, complex)
    mat = np.eye(n1, dtype=complex)
    rhs = state.g1.copy()
    for _ in range(60):
        y = complex(*rng.standard_normal(2))
        s = complex(*rng.standard_normal(2))
        hist[1:] = hist[:-1]
        hist[0] = s
        s2, _ = stacked_regressors(hist, state.g1_blocks(), state.g2_blocks())
        err = y - np.vdot(state.g1, s2)
        rls_update(state.phi2_inv, state.g1, s2, err, 1.0, 1.0)
        mat += np.outer(s2, s2.conj())
        rhs += s2 * np.conj(y)
        np.testing.assert_allclose(state.g1, np.linalg.solve(mat, rhs), atol=1e-8)


def test_scalar_config_follows_two_stage_recursion(rng):
    # P = K1 = K2 = 1: each bank update is an exact scalar RLS, applied twice
    params = KpfcpParams(p=1, k1=1, k2=1)
    state = KpfcpBinState(params)
    g1, g2 = 1 + 0j, 1 + 0j
    p2, p1 = 1 + 0j, 1 + 0j
    alpha = params.alpha1
    for _ in range(100):
        y = complex(*rng.standard_normal(2))
        s = complex(*rng.standard_normal(2))
        lam = abs(y) ** 2 + 0.1
        out = state.step(y, s, lam)

        s2 = np.conj(g2) * s
        e1 = y - np.conj(g1) * s2
        u = p2 * s2
        den = alpha * lam + (np.conj(s2) * u).real
        g1 = g1 + (u / den) * np.conj(e1)
        p2 = (p2 - (u / den) * np.conj(u)) / alpha
        s1 = np.conj(g1) * s
        e2 = y - np.conj(g2) * s1
        u = p1 * s1
        den = alpha * lam + (np.conj(s1) * u).real
        g2 = g2 + (u / den) * np.conj(e2)
        p1 = (p1 - (u / den) * np.conj(u)) / alpha
        expected = s + y - np.conj(g2) * s1
        assert abs(out - expected) < 1e-12
    assert abs(state.g1[0] - g1) < 1e-12
    assert abs(state.g2[0] - g2) < 1e-12


def test_pinned_second_bank_reduces_to_full_filter(rng):
    # P=1, K2=1, second bank held at unity: the first-bank recursion is the
    # full-filter algorithm; outputs coincide
    k = 6
    kp = KpfcpParams(p=1, k1=k, k2=1)
    state = KpfcpBinState(kp)
    ref = FcpBinState(FcpParams(k=k))
    hist = np.zeros(k, complex)
    for _ in range(80):
        y = complex(*rng.standard_normal(2))
        s = complex(*rng.standard_normal(2))
        lam = abs(y) ** 2 + 0.1
        out_ref = ref.step(y, s, lam)

        hist[1:] = hist[:-1]
        hist[0] = s
        s2, _ = stacked_regressors(hist, state.g1_blocks(), state.g2_blocks())
        err = y - np.vdot(state.g1, s2)
        rls_update(state.phi2_inv, state.g1, s2, err, kp.alpha1, lam)
        s1_scalar = np.vdot(state.g1, hist)  # s1 with K2=1 is one projection
        out = s + y - np.conj(state.g2[0]) * s1_scalar
        assert abs(out - out_ref) < 1e-12 * max(1.0, abs(out_ref))
    np.testing.assert_allclose(state.g1, ref.g, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_grid_gives_zero_output(backend):
    cfg = StftConfig()
    zero = TFGrid(np.zeros((12, cfg.bins), complex), cfg)
    out = kpfcp_process(zero, zero, KpfcpParams(p=2, k1=3, k2=3), backend=backend)
    assert np.all(out.data == 0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_identity_estimate_is_fixed_point(rng, backend):
    cfg = StftConfig()
    y = TFGrid(cnormal(rng, 25, cfg.bins) * 0.2, cfg)
    s = TFGrid(y.data.copy(), cfg)
    out = kpfcp_process(y, s, KpfcpParams(p=2, k1=4, k2=3), backend=backend)
    np.testing.assert_array_equal(out.data, y.data)


@pytest.mark.parametrize("backend", BACKENDS)
def test_streaming_causality(rng, backend):
    cfg = StftConfig()
    y = TFGrid(cnormal(rng, 40, cfg.bins) * 0.2, cfg)
    s = TFGrid(y.data * 0.8 + cnormal(rng, 40, cfg.bins) * 0.02, cfg)
    params = KpfcpParams(p=2, k1=3, k2=3)
    full = kpfcp_process(y, s, params, backend=backend)
    cut = 17
    part = kpfcp_process(
        TFGrid(y.data[:cut].copy(), cfg), TFGrid(s.data[:cut].copy(), cfg),
        params, backend=backend,
    )
    np.testing.assert_array_equal(full.data[:cut], part.data)


def test_backends_agree(rng):
    if not have_native():
        pytest.skip("compiled kernels not built")
    cfg = StftConfig()
    y = TFGrid(cnormal(rng, 60, cfg.bins) * 0.2, cfg)
    s = TFGrid(y.data * 0.85 + cnormal(rng, 60, cfg.bins) * 0.03, cfg)
    params = KpfcpParams(p=3, k1=4, k2=5)
    a = kpfcp_process(y, s, params, backend="python")
    b = kpfcp_process(y, s, params, backend="native")
    scale = np.abs(a.data).max()
    assert np.abs(a.data - b.data).max() < 1e-10 * max(1.0, scale)


def test_native_worker_count_is_observation_equivalent(rng):
    if not have_native():
        pytest.skip("compiled kernels not built")
    cfg = StftConfig()
    y = TFGrid(cnormal(rng, 30, cfg.bins) * 0.2, cfg)
    s = TFGrid(y.data * 0.9, cfg)
    params = KpfcpParams(p=2, k1=3, k2=3)
    one = kpfcp_process(y, s, params, backend="native", workers=1)
    many = kpfcp_process(y, s, params, backend="native", workers=8)
    np.testing.assert_array_equal(one.data, many.data)


def test_inverses_stay_hermitian_long_run(rng):
    params = KpfcpParams(p=2, k1=3, k2=3)
    state = KpfcpBinState(params)
    for i in range(10_000):
        y = complex(*rng.standard_normal(2))
        s = complex(*rng.standard_normal(2))
        state.step(y, s, max(abs(y) ** 2, 1e-10))
        if i % 2000 == 1999:
            for phi in (state.phi1_inv, state.phi2_inv):
                assert np.abs(phi - phi.conj().T).max() <= 1e-8
                assert np.all(np.isfinite(phi))


@pytest.mark.parametrize("backend", BACKENDS)
def test_numerics_error_carries_position(rng, backend):
    from kpderev import _backend
    from kpderev.kpfcp import _process_python

    t_frames, f_bins = 4, 6
    y = cnormal(rng, t_frames, f_bins)
    s = np.zeros_like(y)
    lam = np.zeros((t_frames, f_bins))
    params = KpfcpParams(p=2, k1=3, k2=3)
    with pytest.raises(NumericsError) as exc:
        if backend == "python":
            with np.errstate(all="ignore"):
                _process_python(y, s, lam, params)
        else:
            _backend.run_native(
                "kpfcp", y, s, lam,
                dict(p=2, k1=3, k2=3, alpha1=0.95, alpha2=0.95), workers=2,
            )
    assert exc.value.frame == 0
    assert 0 <= exc.value.bin_index < f_bins


@pytest.mark.slow
def test_reverberation_suppression_on_noiseless_scene(rng):
    scene = RoomScene((6.0, 5.0, 3.0), (3.8, 2.9, 1.4), (3.0, 2.5, 1.5), 0.3)
    rir = image_method(scene)
    clean = speech_like(2.0, rng=rng)
    rendered = render_scene(clean, rir, math.inf)
    y = analyze(rendered.observed)
    truth = analyze(rendered.direct_truth)
    s_nn = estimate(EstimatorSpec("oracle", 0.0, 0), y, truth)
    half = y.frames // 2
    base = np.sum(np.abs(y.data[half:] - truth.data[half:]) ** 2)
    for out in (
        kpfcp_process(y, s_nn, KpfcpParams(p=3)),
        fcp_process(y, s_nn, FcpParams(k=81)),
    ):
        resid = np.sum(np.abs(out.data[half:] - truth.data[half:]) ** 2)
        assert resid < base
