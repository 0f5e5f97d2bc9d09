import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zakotfs.channel import ChannelConfig, FilterConfig, support_box
from zakotfs.ddcore import DDGrid, DDTaps, apply_operator, cross_ambiguity, inverse_zak, point_pulsone
from zakotfs.frames import (
    SpreadPilot,
    ambiguity_purity_check,
    build_chirp_pilot,
    build_do_frame,
    build_pp_frame,
    build_sp_frame,
    energy_split,
    find_chirp_root,
    qam,
    qam_hard_demod,
    qam_modulate,
    random_bits,
    scaled_pilot,
    sp_data_component,
    sp_pilot_component,
)

G = DDGrid(11, 13)
G31 = DDGrid(31, 37)
K31, L31 = support_box(G31, ChannelConfig(), FilterConfig())


def energy(x):
    return float(np.sum(np.abs(x) ** 2))


# --- constellations ----------------------------------------------------------

def test_qpsk_label_zero():
    assert qam_modulate([0, 0], qam(4))[0] == pytest.approx((1 + 1j) / np.sqrt(2))


@pytest.mark.parametrize("order", [4, 16, 64, 256])
def test_constellation_unit_energy_and_distinct(order):
    pts = qam(order).points
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert np.unique(np.round(pts, 12)).size == order


@pytest.mark.parametrize("order", [4, 16, 256])
def test_gray_adjacency(order):
    c = qam(order)
    step = 2 / c.scale
    pts = c.points
    for a in range(order):
        for b in range(order):
            d = pts[b] - pts[a]
            if abs(abs(d) - step) < 1e-9 and min(abs(d.real), abs(d.imag)) < 1e-9:
                assert bin(a ^ b).count("1") == 1


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([4, 16, 64, 256]), st.integers(0, 2**32 - 1))
def test_modulation_round_trip(order, seed):
    c = qam(order)
    bits = random_bits(60 * c.bits_per_symbol, np.random.default_rng(seed))
    np.testing.assert_array_equal(qam_hard_demod(qam_modulate(bits, c), c), bits)


def test_hard_demod_slices_to_nearest():
    c = qam(16)
    rng = np.random.default_rng(0)
    s = qam_modulate(random_bits(400, rng), c)
    noisy = s + 0.3 / c.scale * (rng.uniform(-1, 1, s.size) + 1j * rng.uniform(-1, 1, s.size))
    np.testing.assert_allclose(qam_modulate(qam_hard_demod(noisy, c), c), s)
    # far outside the grid still maps to the corner point
    assert qam_modulate(qam_hard_demod([10 + 10j], c), c)[0] == pytest.approx(c.points[0])


def test_qam_errors():
    with pytest.raises(ValueError):
        qam(8)
    with pytest.raises(ValueError):
        qam_modulate([0, 1, 1], qam(4))


# --- energies ------------------------------------------------------------------

def test_energy_split_ten_db():
    b = energy_split(10.0)
    assert b.e_d == pytest.approx(10.0)
    assert b.e_p == pytest.approx(3.16227766, rel=1e-8)
    assert b.e_do == pytest.approx(13.16227766, rel=1e-8)
    assert b.noise_var == 1.0


def test_energy_split_alpha():
    b = energy_split(10.0, SpreadPilot(0.5))
    assert b.e_d == pytest.approx(b.e_p) == pytest.approx(b.e_do / 2)
    assert b.e_do == pytest.approx(energy_split(10.0).e_do)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.3, -0.2])
def test_alpha_out_of_range(alpha):
    with pytest.raises(ValueError):
        SpreadPilot(alpha)


# --- frames ------------------------------------------------------------------

def symbols(grid, order=4, seed=0):
    c = qam(order)
    return qam_modulate(random_bits(grid.MN * c.bits_per_symbol, np.random.default_rng(seed)), c)


def test_do_frame_zero_and_single_symbol():
    assert not np.any(build_do_frame(np.zeros(G.MN), 2.0, G))
    s = np.zeros(G.MN, dtype=complex)
    s[4 * G.N + 7] = 1j
    x = build_do_frame(s, 3.0, G)
    np.testing.assert_allclose(x, np.sqrt(3.0) * 1j * inverse_zak(point_pulsone(G, 4, 7)))
    with pytest.raises(ValueError):
        build_do_frame(np.ones(G.MN - 1), 1.0, G)


def test_pp_frame_energy_and_origin_impulse_train():
    x = build_pp_frame(G, 0, 0, 2.5)
    assert energy(x) == pytest.approx(G.MN * 2.5)
    assert np.count_nonzero(np.abs(x) > 1e-12) == G.N
    assert np.all(np.abs(x[:: G.M]) > 0)
    with pytest.raises(ValueError):
        build_pp_frame(G, G.M, 0, 1.0)


def test_pp_frame_reveals_shifted_channel():
    x = build_pp_frame(G31, 5, 9, 1.0)
    y = apply_operator(DDTaps.delta(2, -3, 0.4 - 0.3j), x)
    A = cross_ambiguity(y, x, np.arange(8), np.arange(-6, 7)).values
    i, j = np.unravel_index(np.argmax(np.abs(A)), A.shape)
    assert (i, j - 6) == (2, -3)
    assert abs(A[i, j]) == pytest.approx(0.5, rel=1e-12)


def test_chirp_pilot_ambiguity():
    u = find_chirp_root(G31, K31, L31)
    p = build_chirp_pilot(G31, u)
    assert energy(p) == pytest.approx(1.0)
    dk, dl = np.arange(-K31, K31 + 1), np.arange(-2 * L31, 2 * L31 + 1)
    A = cross_ambiguity(p, p, dk, dl).values
    assert A[K31, 2 * L31] == pytest.approx(np.mean(np.abs(p) ** 2))
    A[K31, 2 * L31] = 0
    assert np.max(np.abs(A)) <= 1e-9


def test_chirp_even_length_variant():
    g = DDGrid(8, 6)
    p = build_chirp_pilot(g, 5)
    A = np.abs(cross_ambiguity(p, p, np.arange(g.MN), [0, 5, 10]).values)
    # ambiguity line l = u*k, so (1, 5) carries full magnitude and (1, 0) none
    assert A[1, 1] == pytest.approx(A[0, 0]) and A[1, 0] < 1e-12


def test_chirp_rejects_bad_root():
    with pytest.raises(ValueError):
        build_chirp_pilot(G31, 31)


def test_purity_check_outcomes():
    good = build_chirp_pilot(G31, find_chirp_root(G31, K31, L31))
    assert ambiguity_purity_check(good, K31, L31)
    assert ambiguity_purity_check(build_pp_frame(G31, 0, 0, 1.0), K31, L31)
    bad = ambiguity_purity_check(build_chirp_pilot(G31, 1), K31, L31)
    assert not bad
    # the offender lies on the chirp's ambiguity line l = u*k
    wk, wl = bad.worst_shift
    assert wk != 0 and wl == wk
    assert bad.worst_ratio == pytest.approx(1.0)


def test_sp_frame_energies_and_limits():
    s = symbols(G31)
    pilot = build_chirp_pilot(G31, find_chirp_root(G31, K31, L31))
    for alpha in (0.3, 0.5, 0.9):
        b = energy_split(15.0, SpreadPilot(alpha))
        d, p = sp_data_component(s, b, G31), sp_pilot_component(pilot, b)
        assert energy(d) + energy(p) == pytest.approx(G31.MN * b.e_do, rel=1e-9)
        np.testing.assert_allclose(build_sp_frame(s, b, pilot, G31, K31, L31), d + p)
    # alpha close to one: the frame is the DO frame at e_d (4-QAM has constant rms)
    b = energy_split(15.0, SpreadPilot(1 - 1e-12))
    x = build_sp_frame(s, b, pilot, G31, K31, L31)
    ref = build_do_frame(s, b.e_do, G31)
    assert np.linalg.norm(x - ref) <= 1e-5 * np.linalg.norm(ref)
    b = energy_split(15.0, SpreadPilot(1e-12))
    x = build_sp_frame(s, b, pilot, G31, K31, L31)
    ref = scaled_pilot(pilot, b.e_do)
    assert np.linalg.norm(x - ref) <= 1e-5 * np.linalg.norm(ref)


def test_sp_frame_refuses_impure_pilot():
    with pytest.raises(ValueError, match="not a delta"):
        build_sp_frame(symbols(G31), energy_split(10, SpreadPilot(0.5)),
                       build_chirp_pilot(G31, 1), G31, K31, L31)


def test_equal_energy_fairness():
    b = energy_split(12.0)
    s = symbols(G31)
    do = build_do_frame(s, b.e_do, G31)
    pp = build_pp_frame(G31, 0, 0, b.e_do)
    assert energy(do) == pytest.approx(G31.MN * b.e_do, rel=1e-9)
    assert energy(pp) == pytest.approx(G31.MN * b.e_do, rel=1e-9)


def test_data_and_pilot_nearly_orthogonal():
    pilot = build_chirp_pilot(G31, find_chirp_root(G31, K31, L31))
    b = energy_split(10, SpreadPilot(0.5))
    ratios = []
    for seed in range(200):
        d = sp_data_component(symbols(G31, seed=seed), b, G31)
        ratios.append(abs(np.vdot(d, pilot)) / (np.linalg.norm(d) * np.linalg.norm(pilot)))
    assert np.mean(np.array(ratios) <= 3 / math.sqrt(G31.MN)) >= 0.99
