import numpy as np
import pytest

from hrris_covert.channel import (
    LINKS, ArraySpec, ChannelError, ChannelSet, FadingSpec, SceneGeometry, build_channel_set,
    dbm_to_watts, los_matrix, path_loss, rician_matrix, ula_steering, upa_steering,
)


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss(1.0, 2.2, -30.0) == pytest.approx(1e-3, rel=1e-15)

    def test_ten_metres(self):
        assert path_loss(10.0, 2.0, -30.0) == pytest.approx(1e-5, rel=1e-14)

    def test_alice_to_surface(self):
        assert path_loss(51.0, 2.2, -30.0) == pytest.approx(1e-3 * 51.0 ** -2.2, rel=1e-14)

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_non_positive_distance(self, d):
        with pytest.raises(ChannelError):
            path_loss(d, 2.0)

    def test_monotone(self):
        d = np.linspace(0.5, 200, 500)
        assert np.all(np.diff(path_loss(d, 2.8)) < 0)


class TestSteering:
    def test_single_element(self):
        assert np.array_equal(ula_steering(0.7, 1), [1])

    def test_broadside(self):
        assert np.allclose(ula_steering(0.0, 4), np.ones(4), atol=0)

    def test_endfire_half_wavelength(self):
        assert np.allclose(ula_steering(1.0, 2, 0.5), [1, -1], atol=1e-15)

    def test_zero_count(self):
        with pytest.raises(ChannelError):
            ula_steering(0.1, 0)

    def test_upa_single(self):
        assert np.array_equal(upa_steering(0.3, 0.2, 1, 1), [1])

    def test_upa_broadside(self):
        assert np.allclose(upa_steering(0, 0, 2, 2), np.ones(4), atol=0)

    def test_upa_degenerates_to_ula(self):
        assert np.allclose(upa_steering(0.4, 0.9, 2, 1), ula_steering(0.4, 2))

    def test_upa_is_kronecker(self):
        v = upa_steering(0.3, -0.6, 3, 4)
        assert np.allclose(v, np.kron(ula_steering(0.3, 3), ula_steering(-0.6, 4)))

    def test_upa_zero_dims(self):
        with pytest.raises(ChannelError):
            upa_steering(0, 0, 0, 3)

    @pytest.mark.parametrize("s", [-1.0, -0.37, 0.0, 0.5, 1.0])
    def test_unit_modulus(self, s):
        assert np.allclose(np.abs(upa_steering(s, s / 2, 5, 7)), 1.0, atol=1e-15)
        assert ula_steering(s, 9)[0] == 1


class TestRician:
    def test_pure_los_limit(self):
        los = np.outer(ula_steering(0.2, 3), ula_steering(-0.4, 2).conj())
        h = rician_matrix(3, 2, 300.0, los, 2.5e-7, seed=7, stream_id=1)
        assert np.allclose(h, np.sqrt(2.5e-7) * los, rtol=1e-12, atol=1e-20)

    def test_rayleigh_energy(self):
        # kappa = 0 (linear) is -inf dB; use a vanishing factor instead
        rows, cols, gain = 2, 3, 4e-6
        los = np.ones((rows, cols))
        energy = [np.sum(np.abs(rician_matrix(rows, cols, -400.0, los, gain, 99, s)) ** 2)
                  for s in range(100_000)]
        assert np.mean(energy) / (rows * cols * gain) == pytest.approx(1.0, abs=0.02)

    def test_deterministic(self):
        los = np.ones((4, 4))
        a = rician_matrix(4, 4, 3.0, los, 1.0, seed=5, stream_id=2)
        b = rician_matrix(4, 4, 3.0, los, 1.0, seed=5, stream_id=2)
        c = rician_matrix(4, 4, 3.0, los, 1.0, seed=5, stream_id=3)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_shape_mismatch(self):
        with pytest.raises(ChannelError):
            rician_matrix(2, 2, 3.0, np.ones((2, 3)), 1.0, 0, 0)


class TestChannelSet:
    def test_default_scene(self):
        geo = SceneGeometry()
        assert geo.distance("ar") == pytest.approx(51.0)
        assert geo.distance("rb") == pytest.approx(np.sqrt(5.0))
        arrays = ArraySpec(ris_rows=5, ris_cols=4)
        ch = build_channel_set(geo, arrays, FadingSpec(rician_k_db=300.0, seed=1), -80.0)
        assert ch.sigma_b_sq == pytest.approx(1e-11)
        for link in LINKS:
            h = getattr(ch, "h_" + link)
            gain = path_loss(geo.distance(link), geo.pathloss_exponents[link], -30.0)
            # pure LOS: every entry has modulus sqrt(gain)
            assert np.allclose(np.abs(h), np.sqrt(gain), rtol=1e-10)

    def test_dimensions(self):
        arrays = ArraySpec(n_alice=3, n_bob=2, n_willie=5, ris_rows=2, ris_cols=3)
        ch = build_channel_set(SceneGeometry(), arrays, FadingSpec(seed=3))
        assert ch.h_ar.shape == (6, 3)
        assert ch.h_ab.shape == (2, 3)
        assert ch.h_rb.shape == (2, 6)
        assert ch.h_aw.shape == (5, 3)
        assert ch.h_rw.shape == (5, 6)

    def test_scalar_system(self):
        arrays = ArraySpec(n_alice=1, n_bob=1, n_willie=1, ris_rows=1, ris_cols=1)
        ch = build_channel_set(SceneGeometry(), arrays, FadingSpec(seed=3))
        for link in LINKS:
            assert getattr(ch, "h_" + link).shape == (1, 1)

    def test_deterministic(self):
        args = (SceneGeometry(), ArraySpec(), FadingSpec(seed=2**63 + 5), -80.0)
        a, b = build_channel_set(*args), build_channel_set(*args)
        for link in LINKS:
            assert np.array_equal(getattr(a, "h_" + link), getattr(b, "h_" + link))

    def test_energy_scales_with_chi0(self):
        # E||H||^2 = gain * rows * cols; every link here has ~1e5 i.i.d. entries,
        # so one realisation per chi0 is a 1e5-sample Monte-Carlo estimate
        arrays = ArraySpec(n_alice=320, n_bob=320, n_willie=320, ris_rows=16, ris_cols=20)
        ca = build_channel_set(SceneGeometry(chi0_db=-30.0), arrays, FadingSpec(seed=1))
        cb = build_channel_set(SceneGeometry(chi0_db=-20.0), arrays, FadingSpec(seed=2))
        geo = SceneGeometry()
        for link in LINKS:
            ha, hb = getattr(ca, "h_" + link), getattr(cb, "h_" + link)
            assert ha.size >= 100_000
            gain = path_loss(geo.distance(link), geo.pathloss_exponents[link], -30.0)
            assert np.mean(np.abs(ha) ** 2) / gain == pytest.approx(1.0, rel=0.03)
            assert np.sum(np.abs(hb) ** 2) / np.sum(np.abs(ha) ** 2) == pytest.approx(10.0, rel=0.03)

    def test_new_link_does_not_perturb_others(self):
        # streams are keyed per link, so each matrix depends only on its own id
        geo, arrays, fading = SceneGeometry(), ArraySpec(), FadingSpec(seed=11)
        ch = build_channel_set(geo, arrays, fading)
        los = los_matrix("rb", geo, arrays)
        gain = path_loss(geo.distance("rb"), 2.8)
        again = rician_matrix(*los.shape, 3.0, los, gain, 11, 1)
        assert np.array_equal(ch.h_rb, again)

    def test_unequal_noise_rejected(self):
        z = np.zeros((1, 1))
        with pytest.raises(ChannelError):
            ChannelSet(z, z, z, z, z, sigma_b_sq=1.0, sigma_w_sq=2.0)
        ChannelSet(z, z, z, z, z, sigma_b_sq=1.0, sigma_w_sq=2.0, allow_unequal_noise=True)

    def test_non_finite_rejected(self):
        z = np.zeros((1, 1))
        with pytest.raises(ChannelError):
            ChannelSet(z * np.nan, z, z, z, z, sigma_b_sq=1.0)

    def test_co_located_nodes(self):
        with pytest.raises(ChannelError):
            SceneGeometry(bob_pos=(51.0, 0.0))

    def test_negative_exponent(self):
        with pytest.raises(ChannelError):
            SceneGeometry(pathloss_exponents={"ar": 2, "rb": -1, "ab": 3, "aw": 3, "rw": 3})

    def test_dbm(self):
        assert dbm_to_watts(-30.0) == pytest.approx(1e-6)
        assert dbm_to_watts(30.0) == pytest.approx(1.0)


def test_specs_survive_pickling():
    import pickle
    geo = SceneGeometry()
    fad = FadingSpec(rician_k_db={"ar": 1.0, "rb": 2.0, "ab": 3.0, "aw": 4.0, "rw": 5.0}, seed=9)
    for obj, name in ((geo, "pathloss_exponents"), (fad, "rician_k_db")):
        back = pickle.loads(pickle.dumps(obj))
        assert back == obj
        with pytest.raises(TypeError):
            getattr(back, name)["ar"] = 0.0
