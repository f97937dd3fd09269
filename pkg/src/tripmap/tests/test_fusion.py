"""
Static map fusion tests.

"""

import numpy as np
import pytest
from tripmap.completion import OBSERVED
from tripmap.completion import LocalTerrainMap
from tripmap.fusion import FusionSettings
from tripmap.fusion import StaticTerrainMap
from tripmap.fusion import collision_logit
from tripmap.fusion import gate_and_update
from tripmap.fusion import kalman_update
from tripmap.fusion import snapshot
from tripmap.grid import GridSpec


def flat_local(spec, h_max=0.0, n_z=1.0, r_step=0.0, r_coll=0.0, sigma=0.02):
    local = LocalTerrainMap.empty(spec)
    local.provenance[...] = OBSERVED
    local.h_max[...] = h_max
    local.h_min[...] = h_max
    local.n_z[...] = n_z
    local.r_step[...] = r_step
    local.r_incl[...] = 0.0
    local.r_coll[...] = r_coll
    local.sigma_o[...] = sigma
    local.sigma_h[...] = sigma
    return local


def test_kalman_update_properties():
    rng = np.random.default_rng(2)
    num = 10000
    mean = rng.uniform(-2.0, 2.0, num)
    var = rng.uniform(1.0e-4, 1.0, num)
    value = rng.uniform(-2.0, 2.0, num)
    noise = rng.uniform(1.0e-4, 1.0, num)
    process = 1.0e-3
    post_mean, post_var = kalman_update((mean, var), (value, noise), process)
    assert np.all(post_var <= var + process + 1.0e-15)
    assert np.all(post_var <= noise + 1.0e-15)
    low = np.minimum(mean, value) - 1.0e-12
    high = np.maximum(mean, value) + 1.0e-12
    assert np.all((post_mean >= low) & (post_mean <= high))


def test_new_cells_are_seeded_from_measurement():
    static_map = StaticTerrainMap(0.1)
    spec = GridSpec(0.1, (0.3, 0.2))
    local = flat_local(spec, h_max=0.4, r_coll=0.9, sigma=0.5)
    mask = gate_and_update(local, static_map)
    assert not mask.any()
    assert len(static_map) == 6
    cell = static_map.cell(2, 1)
    assert cell is not None
    assert cell.h_max_hat == 0.4
    assert cell.var_hmax == 0.25
    assert cell.var_nz == 0.25
    assert cell.update_count == 1
    assert abs(cell.r_coll_hat - 0.9) < 1.0e-12
    small = StaticTerrainMap(0.1)
    gate_and_update(flat_local(spec, sigma=0.01), small)
    assert small.cell(0, 0).var_hmax == small.settings.var_init


def test_rejected_cells_are_unchanged():
    static_map = StaticTerrainMap(0.1)
    spec = GridSpec(0.1, (0.3, 0.3))
    for _ in range(5):
        gate_and_update(flat_local(spec), static_map)
    before = static_map.gather(np.arange(3), np.full(3, 1))
    wall = flat_local(spec, h_max=1.5, n_z=0.0, r_step=1.0, r_coll=1.0)
    mask = gate_and_update(wall, static_map)
    assert mask.all()
    after = static_map.gather(np.arange(3), np.full(3, 1))
    for key in before:
        if key == "rejections":
            continue
        assert np.array_equal(before[key], after[key]), key
    assert np.all(after["rejections"] == 1)
    assert static_map.cell(0, 0).last_rejected
    gate_and_update(flat_local(spec), static_map)
    assert not static_map.cell(0, 0).last_rejected
    assert static_map.cell(0, 0).rejections == 0


def test_open_gate_accepts_everything():
    spec = GridSpec(0.1, (0.3, 0.3))
    wall = flat_local(spec, h_max=1.5, n_z=0.0, r_step=1.0, r_coll=1.0)
    gated = StaticTerrainMap(0.1)
    opened = StaticTerrainMap(0.1, settings=FusionSettings(tau_m=np.inf))
    overridden = StaticTerrainMap(0.1)
    for static_map in (gated, opened, overridden):
        gate_and_update(flat_local(spec), static_map)
    assert gate_and_update(wall, gated).all()
    assert not gate_and_update(wall, opened).any()
    assert not gate_and_update(wall, overridden, tau_m=np.inf).any()
    assert opened.cell(1, 1).update_count == 2
    assert np.array_equal(
        snapshot(opened).layers["h_max"], snapshot(overridden).layers["h_max"]
    )


def test_collision_log_odds_commute():
    """
    Accumulated collision log-odds do not depend on the order of the
    measurements: each of 10,000 cells sees the same risks in its own
    random order.

    """
    rng = np.random.default_rng(8)
    num, steps = 100, 20
    risks = rng.uniform(0.0, 1.0, (num, num, steps))
    order = rng.permuted(np.tile(np.arange(steps), (num, num, 1)), axis=2)
    shuffled = np.take_along_axis(risks, order, axis=2)
    spec = GridSpec(0.1, (num * 0.1, num * 0.1))
    settings = FusionSettings(tau_m=np.inf)
    forward = StaticTerrainMap(0.1, settings=settings)
    permuted = StaticTerrainMap(0.1, settings=settings)
    for step in range(steps):
        local = flat_local(spec)
        local.r_coll[...] = risks[:, :, step]
        gate_and_update(local, forward)
        local.r_coll[...] = shuffled[:, :, step]
        gate_and_update(local, permuted)
    expected = collision_logit(risks).sum(axis=2)
    g_y, g_x = np.mgrid[0:num, 0:num]
    for static_map in (forward, permuted):
        got = static_map.gather(g_x.reshape(-1), g_y.reshape(-1))
        logodds = got["coll_logodds"].reshape(num, num)
        assert np.all(np.abs(logodds - expected) < 1.0e-9)


def random_state(rng, num):
    state = {
        "mean_h_max": rng.uniform(-1.0, 1.0, num),
        "mean_n_z": rng.uniform(0.0, 1.0, num),
        "mean_r_step": rng.uniform(0.0, 1.0, num),
        "mean_r_incl": rng.uniform(0.0, 0.25, num),
        "coll_logodds": rng.normal(0.0, 3.0, num),
        "update_count": rng.integers(1, 50, num),
        "rejections": rng.integers(0, 5, num),
    }
    state["mean_h_min"] = state["mean_h_max"] - rng.uniform(0.0, 0.5, num)
    for name in ("h_max", "h_min", "n_z", "r_step", "r_incl"):
        state[f"var_{name}"] = 10.0 ** rng.uniform(-5.0, -1.0, num)
    return state


def test_rejected_measurements_leave_cells_bit_identical():
    rng = np.random.default_rng(14)
    num = 100
    spec = GridSpec(0.1, (num * 0.1, num * 0.1))
    static_map = StaticTerrainMap(0.1, settings=FusionSettings(tau_m=1.0))
    g_y, g_x = (idx.reshape(-1) for idx in np.mgrid[0:num, 0:num])
    static_map.scatter(g_x, g_y, random_state(rng, num * num))
    before = static_map.gather(g_x, g_y)
    local = flat_local(spec)
    for name in ("n_z", "r_step", "r_incl", "r_coll", "sigma_o", "sigma_h"):
        getattr(local, name)[...] = rng.uniform(0.0, 1.0, spec.shape)
    local.h_min[...] = rng.uniform(-1.0, 1.0, spec.shape)
    local.h_max[...] = local.h_min + rng.uniform(0.0, 0.5, spec.shape)
    mask = gate_and_update(local, static_map).reshape(-1)
    after = static_map.gather(g_x, g_y)
    assert 1000 < mask.sum() < num * num
    for key in before:
        if key == "rejections":
            continue
        assert np.array_equal(before[key][mask], after[key][mask]), key
        if key.startswith("var_"):
            assert not np.array_equal(before[key][~mask], after[key][~mask])
    assert np.array_equal(
        after["rejections"][mask], before["rejections"][mask] + 1
    )
    assert np.all(after["rejections"][~mask] == 0)
    assert np.array_equal(
        after["update_count"][~mask], before["update_count"][~mask] + 1
    )


def test_min_and_max_heights_swap_with_their_variances():
    static_map = StaticTerrainMap(0.1)
    spec = GridSpec(0.1, (0.1, 0.1))
    zeros = np.zeros(1, dtype=np.int64)
    state = static_map.gather(zeros, zeros)
    state["mean_h_max"][:] = 0.1
    state["var_h_max"][:] = 1.0e-4
    state["mean_h_min"][:] = 0.0
    state["var_h_min"][:] = 1.0
    state["mean_n_z"][:] = 1.0
    state["mean_r_step"][:] = 0.0
    state["update_count"][:] = 3
    static_map.scatter(zeros, zeros, state)
    mask = gate_and_update(flat_local(spec, h_max=1.0, sigma=0.1), static_map)
    assert not mask.any()
    process = static_map.settings.process_var
    low = kalman_update((0.1, 1.0e-4), (1.0, 0.1**2), process)
    high = kalman_update((0.0, 1.0), (1.0, 0.1**2), process)
    assert high[0] > low[0]
    cell = static_map.cell(0, 0)
    assert (cell.h_max_hat, cell.var_hmax) == high
    assert (cell.h_min_hat, cell.var_hmin) == low


def test_gate_lapses_after_repeated_rejections():
    """
    A cell first seeded from a passing obstacle is rejected a bounded
    number of times, then takes the ground back; a gate without a lapse
    keeps rejecting.

    """
    spec = GridSpec(0.1, (0.3, 0.3))
    wall = flat_local(
        spec, h_max=1.2, n_z=0.0, r_step=1.0, r_coll=1.0, sigma=0.3
    )
    lapsing = StaticTerrainMap(0.1, settings=FusionSettings(tau_m=1.0))
    closed = StaticTerrainMap(
        0.1, settings=FusionSettings(tau_m=1.0, max_rejections=None)
    )
    limit = lapsing.settings.max_rejections
    for static_map in (lapsing, closed):
        gate_and_update(wall, static_map)
    for step in range(limit):
        assert gate_and_update(flat_local(spec), lapsing).all()
        assert gate_and_update(flat_local(spec), closed).all()
        assert lapsing.cell(1, 1).rejections == step + 1
    assert not gate_and_update(flat_local(spec), lapsing).any()
    assert gate_and_update(flat_local(spec), closed).all()
    cell = lapsing.cell(1, 1)
    assert cell.rejections == 0 and cell.update_count == 2
    assert cell.h_max_hat < 0.05 and cell.n_z_hat > 0.95
    assert not gate_and_update(flat_local(spec), lapsing).any()
    assert closed.cell(1, 1).h_max_hat == 1.2
    assert closed.cell(1, 1).rejections == limit + 1


def test_tiles_cover_negative_indices():
    static_map = StaticTerrainMap(0.1, tile_size=4)
    spec = GridSpec(0.1, (0.8, 0.8), origin=(-0.5, -0.4))
    gate_and_update(flat_local(spec, h_max=0.2), static_map)
    assert len(static_map) == 64
    assert set(static_map.tiles) == {
        (-2, -1),
        (-1, -1),
        (0, -1),
        (-2, 0),
        (-1, 0),
        (0, 0),
    }
    cell = static_map.cell_at(-0.45, -0.35)
    assert cell is not None
    assert abs(cell.o[0] + 0.45) < 1.0e-9 and abs(cell.o[1] + 0.35) < 1.0e-9
    assert static_map.cell_at(-0.55, 0.0) is None
    window = static_map.populated_window()
    assert window.shape == (8, 8)
    assert np.allclose(window.origin, (-0.5, -0.4))
    snap = snapshot(static_map)
    assert snap.populated.all()
    assert np.allclose(snap.layer("h_max"), 0.2)


def test_gather_scatter_round_trip():
    static_map = StaticTerrainMap(0.1, tile_size=3)
    g_x = np.array([-4, 0, 5, 7])
    g_y = np.array([2, -1, 0, 7])
    state = static_map.gather(g_x, g_y)
    assert not state["update_count"].any()
    state["mean_h_max"] = np.array([1.0, 2.0, 3.0, 4.0])
    state["update_count"] = np.array([1, 2, 0, 4])
    static_map.scatter(g_x, g_y, state)
    again = static_map.gather(g_x, g_y)
    assert np.array_equal(again["mean_h_max"], state["mean_h_max"])
    assert len(static_map) == 3
    populated_x, populated_y = static_map.populated_indices()
    assert list(zip(populated_y, populated_x)) == [(-1, 0), (2, -4), (7, 7)]


def test_misaligned_window_rejected():
    static_map = StaticTerrainMap(0.1)
    shifted = flat_local(GridSpec(0.1, (0.2, 0.2), (0.05, 0.0)))
    with pytest.raises(ValueError):
        gate_and_update(shifted, static_map)
    with pytest.raises(ValueError):
        gate_and_update(flat_local(GridSpec(0.2, (0.2, 0.2))), static_map)


def test_snapshot_of_empty_map():
    snap = snapshot(StaticTerrainMap(0.1))
    assert not snap.populated.any()
    assert np.isnan(snap.layer("r_coll")).all()
    with pytest.raises(KeyError):
        snap.layer("height")
