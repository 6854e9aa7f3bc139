"""Geometric Rician channel synthesis for the Alice / surface / Bob / Willie scene.

All five links are drawn from one root seed with a fixed stream id per link,
so the realisation of any link never depends on which other links exist.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

LINKS = ("ar", "rb", "ab", "aw", "rw")
STREAM_IDS = {name: i for i, name in enumerate(LINKS)}

DEFAULT_POSITIONS = {
    "alice": (0.0, 0.0),
    "ris": (51.0, 0.0),
    "bob": (50.0, 2.0),
    "willie": (30.0, 5.0),
}
DEFAULT_EXPONENTS = {"ar": 2.2, "rb": 2.8, "ab": 4.2, "aw": 4.2, "rw": 2.8}


class ChannelError(ValueError):
    """Invalid channel geometry, array or fading parameters."""


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


class _FrozenMappings:
    """Pickle support for dataclasses holding read-only mapping fields."""

    def __getstate__(self):
        return {k: dict(v) if isinstance(v, MappingProxyType) else v
                for k, v in self.__dict__.items()}

    def __setstate__(self, state):
        for k, v in state.items():
            object.__setattr__(self, k, MappingProxyType(v) if isinstance(v, dict) else v)


@dataclass(frozen=True)
class SceneGeometry(_FrozenMappings):
    alice_pos: tuple[float, float] = DEFAULT_POSITIONS["alice"]
    ris_pos: tuple[float, float] = DEFAULT_POSITIONS["ris"]
    bob_pos: tuple[float, float] = DEFAULT_POSITIONS["bob"]
    willie_pos: tuple[float, float] = DEFAULT_POSITIONS["willie"]
    pathloss_exponents: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_EXPONENTS))
    chi0_db: float = -30.0

    def __post_init__(self):
        exps = dict(self.pathloss_exponents)
        missing = set(LINKS) - set(exps)
        if missing:
            raise ChannelError(f"missing path-loss exponents for links {sorted(missing)}")
        extra = set(exps) - set(LINKS)
        if extra:
            raise ChannelError(f"unknown links {sorted(extra)}")
        for name, a in exps.items():
            if not np.isfinite(a) or a <= 0:
                raise ChannelError(f"path-loss exponent for {name!r} must be > 0, got {a}")
        object.__setattr__(self, "pathloss_exponents", MappingProxyType(exps))
        for name in ("alice_pos", "ris_pos", "bob_pos", "willie_pos"):
            p = tuple(float(v) for v in getattr(self, name))
            if len(p) != 2:
                raise ChannelError(f"{name} must be a 2-D coordinate")
            object.__setattr__(self, name, p)
        for link in LINKS:
            if self.distance(link) <= 0:
                raise ChannelError(f"nodes of link {link!r} are co-located")
        if not np.isfinite(self.chi0_db):
            raise ChannelError("chi0_db must be finite")

    def endpoints(self, link: str) -> tuple[tuple[float, float], tuple[float, float]]:
        """(transmitter, receiver) positions of a link."""
        pos = {"a": self.alice_pos, "r": self.ris_pos,
               "b": self.bob_pos, "w": self.willie_pos}
        return pos[link[0]], pos[link[1]]

    def distance(self, link: str) -> float:
        tx, rx = self.endpoints(link)
        return float(np.hypot(rx[0] - tx[0], rx[1] - tx[1]))


@dataclass(frozen=True)
class ArraySpec:
    n_alice: int = 4
    n_bob: int = 4
    n_willie: int = 4
    ris_rows: int = 10
    ris_cols: int = 10
    element_spacing: float = 0.5

    def __post_init__(self):
        for name in ("n_alice", "n_bob", "n_willie", "ris_rows", "ris_cols"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ChannelError(f"{name} must be an integer >= 1, got {v}")
        if self.element_spacing <= 0:
            raise ChannelError("element_spacing must be positive")

    @property
    def n_elements(self) -> int:
        return self.ris_rows * self.ris_cols

    @classmethod
    def for_elements(cls, n: int, **kwargs) -> "ArraySpec":
        """UPA with `n` elements, as square as the factorisation of `n` allows."""
        if n < 1:
            raise ChannelError("surface needs at least one element")
        rows = int(np.floor(np.sqrt(n)))
        while n % rows:
            rows -= 1
        return cls(ris_rows=rows, ris_cols=n // rows, **kwargs)


@dataclass(frozen=True)
class FadingSpec(_FrozenMappings):
    rician_k_db: float | Mapping[str, float] = 3.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.rician_k_db, Mapping):
            k = dict(self.rician_k_db)
            if set(k) != set(LINKS):
                raise ChannelError(f"per-link Rician factors must cover exactly {LINKS}")
            object.__setattr__(self, "rician_k_db", MappingProxyType(k))
            values = k.values()
        else:
            values = [self.rician_k_db]
        for v in values:
            if not np.isfinite(v):
                raise ChannelError("rician_k_db must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise ChannelError("seed must be a 64-bit unsigned integer")

    def k_db(self, link: str) -> float:
        if isinstance(self.rician_k_db, Mapping):
            return float(self.rician_k_db[link])
        return float(self.rician_k_db)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """The five link matrices plus noise powers (watts).

    Shapes: h_ar (N, Na), h_ab (Nb, Na), h_rb (Nb, N), h_aw (Nw, Na), h_rw (Nw, N).
    """
    h_ar: np.ndarray
    h_ab: np.ndarray
    h_rb: np.ndarray
    h_aw: np.ndarray
    h_rw: np.ndarray
    sigma_b_sq: float
    sigma_w_sq: float | None = None
    sigma_r_sq: float | None = None
    allow_unequal_noise: bool = False

    def __post_init__(self):
        mats = {}
        for name in ("h_ar", "h_ab", "h_rb", "h_aw", "h_rw"):
            m = np.array(getattr(self, name), dtype=complex, ndmin=2)
            if m.ndim != 2:
                raise ChannelError(f"{name} must be a matrix")
            if not np.all(np.isfinite(m)):
                raise ChannelError(f"{name} has non-finite entries")
            m.setflags(write=False)
            mats[name] = m
            object.__setattr__(self, name, m)
        n, na = mats["h_ar"].shape
        nb = mats["h_ab"].shape[0]
        nw = mats["h_aw"].shape[0]
        expected = {"h_ab": (nb, na), "h_rb": (nb, n), "h_aw": (nw, na), "h_rw": (nw, n)}
        for name, shape in expected.items():
            if mats[name].shape != shape:
                raise ChannelError(f"{name} has shape {mats[name].shape}, expected {shape}")
        if self.sigma_w_sq is None:
            object.__setattr__(self, "sigma_w_sq", self.sigma_b_sq)
        if self.sigma_r_sq is None:
            object.__setattr__(self, "sigma_r_sq", self.sigma_b_sq)
        for name in ("sigma_b_sq", "sigma_w_sq", "sigma_r_sq"):
            v = float(getattr(self, name))
            if not v > 0:
                raise ChannelError(f"{name} must be positive")
            object.__setattr__(self, name, v)
        if not self.allow_unequal_noise and not (
                self.sigma_b_sq == self.sigma_w_sq == self.sigma_r_sq):
            raise ChannelError("noise powers must be equal unless allow_unequal_noise is set")

    @property
    def n_elements(self) -> int:
        return self.h_ar.shape[0]

    @property
    def n_alice(self) -> int:
        return self.h_ar.shape[1]

    @property
    def n_bob(self) -> int:
        return self.h_ab.shape[0]

    @property
    def n_willie(self) -> int:
        return self.h_aw.shape[0]


def path_loss(d, alpha, chi0_db=-30.0):
    """Linear power gain chi0 * d**(-alpha), with `d` in metres."""
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise ChannelError("distance must be positive")
    gain = db_to_linear(chi0_db) * d ** (-float(alpha))
    return float(gain) if gain.ndim == 0 else gain


def ula_steering(sin_angle: float, count: int, spacing: float = 0.5) -> np.ndarray:
    if count < 1:
        raise ChannelError("array needs at least one element")
    if abs(sin_angle) > 1:
        raise ChannelError("|sin_angle| must not exceed 1")
    k = np.arange(count)
    return np.exp(1j * 2 * np.pi * spacing * k * sin_angle)


def upa_steering(az_sin: float, el_sin: float, rows: int, cols: int,
                 spacing: float = 0.5) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ChannelError("UPA dimensions must be >= 1")
    return np.kron(ula_steering(az_sin, rows, spacing), ula_steering(el_sin, cols, spacing))


def rician_matrix(rows, cols, rician_k_db, los_matrix, gain, seed, stream_id):
    """sqrt(gain) * (sqrt(k/(1+k)) LOS + sqrt(1/(1+k)) W), W ~ CN(0, 1) i.i.d.

    The scattered part is drawn from a generator keyed on (seed, stream_id).
    """
    los = np.asarray(los_matrix, dtype=complex)
    if los.shape != (rows, cols):
        raise ChannelError(f"LOS matrix shape {los.shape} does not match ({rows}, {cols})")
    if not gain > 0:
        raise ChannelError("gain must be positive")
    kappa = float(db_to_linear(rician_k_db))
    rng = np.random.default_rng([int(seed), int(stream_id)])
    w = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    if np.isinf(kappa):
        return np.sqrt(gain) * los
    return np.sqrt(gain) * (np.sqrt(kappa / (1 + kappa)) * los + np.sqrt(1 / (1 + kappa)) * w)


def _sin_from(src, dst) -> float:
    # Arrays lie along the y axis; broadside points along x.
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    return dy / np.hypot(dx, dy)


def _steering(node: str, sin_angle: float, arrays: ArraySpec) -> np.ndarray:
    if node == "r":
        return upa_steering(sin_angle, 0.0, arrays.ris_rows, arrays.ris_cols,
                            arrays.element_spacing)
    count = {"a": arrays.n_alice, "b": arrays.n_bob, "w": arrays.n_willie}[node]
    return ula_steering(sin_angle, count, arrays.element_spacing)


def los_matrix(link: str, geometry: SceneGeometry, arrays: ArraySpec) -> np.ndarray:
    tx, rx = geometry.endpoints(link)
    a_rx = _steering(link[1], _sin_from(rx, tx), arrays)
    a_tx = _steering(link[0], _sin_from(tx, rx), arrays)
    return np.outer(a_rx, a_tx.conj())


def build_channel_set(geometry: SceneGeometry, arrays: ArraySpec, fading: FadingSpec,
                      noise_dbm: float = -80.0) -> ChannelSet:
    mats = {}
    for link in LINKS:
        los = los_matrix(link, geometry, arrays)
        gain = path_loss(geometry.distance(link), geometry.pathloss_exponents[link],
                         geometry.chi0_db)
        mats["h_" + link] = rician_matrix(*los.shape, fading.k_db(link), los, gain,
                                          fading.seed, STREAM_IDS[link])
    return ChannelSet(sigma_b_sq=float(dbm_to_watts(noise_dbm)), **mats)
