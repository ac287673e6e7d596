"""Extended Hubbard model of DB sites in second quantization.

Orbitals are ordered site-major with spin-up before spin-down, so orbital
``2*i + s`` is site ``i`` with spin ``s`` (0 up, 1 down). A basis state is the
integer whose bit ``k`` is the occupation of orbital ``k``; fermionic signs
follow this order.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.linalg import eigh

from ..errors import CapacityError, DomainError, ProjectionError
from ..manifest import write_text_atomic
from .defines import HUBBARD_DIM_CAP
from .model import DeviceLayout, MaterialParams, screened_coulomb
from .qubit import pauli_coefficients

__all__ = [
    "HubbardParams",
    "FockBasis",
    "build_basis",
    "full_basis",
    "hop",
    "build_hamiltonian",
    "Spectrum",
    "ground_and_spectrum",
    "dump_triplets",
    "EffectiveQubitCoefficients",
    "configuration_states",
    "project_to_qubits",
]

logger = logging.getLogger(__name__)

_SYMMETRY_TOL = 1e-12


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HubbardParams:
    """Parameters of the extended Hubbard Hamiltonian, all in eV.

    ``w_intersite`` is either a site matrix (n, n), taken spin-independent, or the
    full spin tensor (n, 2, n, 2). ``v_bias`` is read from its upper triangle:
    the bias operator is ½·Σ_{i<j} V_ij (n_i − n_j) summed over spin.
    """

    n_sites: int
    e_os: float
    eta: np.ndarray
    t_hop: np.ndarray
    u_onsite: np.ndarray
    w_intersite: np.ndarray
    v_bias: np.ndarray = field(default=None)

    def __post_init__(self):
        n = int(self.n_sites)
        if n < 1:
            raise DomainError(f"n_sites must be >= 1, got {self.n_sites}")
        object.__setattr__(self, "n_sites", n)
        eta = np.broadcast_to(np.asarray(self.eta, dtype=float), (n,))
        u = np.broadcast_to(np.asarray(self.u_onsite, dtype=float), (n,))
        t = np.asarray(self.t_hop, dtype=float)
        w = np.asarray(self.w_intersite, dtype=float)
        v = np.zeros((n, n)) if self.v_bias is None else np.asarray(self.v_bias, dtype=float)
        if t.shape != (n, n) or v.shape != (n, n):
            raise DomainError(f"t_hop and v_bias must be ({n}, {n}), got {t.shape} and {v.shape}")
        if w.shape == (n, n):
            w = np.repeat(np.repeat(w[:, None, :, None], 2, axis=1), 2, axis=3)
        if w.shape != (n, 2, n, 2):
            raise DomainError(f"w_intersite must be ({n}, {n}) or ({n}, 2, {n}, 2), got {w.shape}")
        for name, arr in (("eta", eta), ("u_onsite", u), ("t_hop", t), ("w_intersite", w), ("v_bias", v)):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} has non-finite entries")
        if not math.isfinite(self.e_os):
            raise DomainError(f"e_os must be finite, got {self.e_os}")
        if np.max(np.abs(t - t.T)) > _SYMMETRY_TOL or np.any(t < 0):
            raise DomainError("t_hop must be symmetric and non-negative")
        if np.max(np.abs(w - w.transpose(2, 3, 0, 1))) > _SYMMETRY_TOL or np.any(w < 0):
            raise DomainError("w_intersite must be symmetric and non-negative")
        object.__setattr__(self, "eta", _readonly(eta))
        object.__setattr__(self, "u_onsite", _readonly(u))
        object.__setattr__(self, "t_hop", _readonly(t))
        object.__setattr__(self, "w_intersite", _readonly(w))
        object.__setattr__(self, "v_bias", _readonly(v))

    @classmethod
    def from_layout(
        cls,
        layout: DeviceLayout,
        material: MaterialParams,
        t_tunnel: float,
        eta: float = 0.0,
        u0: Optional[float] = None,
        v_bias: Optional[np.ndarray] = None,
    ) -> "HubbardParams":
        """Hubbard parameters of a layout: T on every pair, screened Coulomb W between all sites."""
        n = layout.n_sites
        t = np.zeros((n, n))
        for a, b in layout.pairs:
            t[a, b] = t[b, a] = t_tunnel
        w = np.zeros((n, n))
        iu = np.triu_indices(n, 1)
        w[iu] = screened_coulomb(layout.distances[iu], material.eps_surface)
        w = w + w.T
        return cls(
            n_sites=n,
            e_os=material.neutral_db_level,
            eta=np.full(n, eta),
            t_hop=t,
            u_onsite=np.full(n, material.onsite_shift if u0 is None else u0),
            w_intersite=w,
            v_bias=v_bias,
        )

    def permuted(self, order: list[int]) -> "HubbardParams":
        """The same Hamiltonian with sites relabeled so that new site k is old site ``order[k]``."""
        idx = np.asarray(order)
        return HubbardParams(
            n_sites=self.n_sites,
            e_os=self.e_os,
            eta=self.eta[idx],
            t_hop=self.t_hop[np.ix_(idx, idx)],
            u_onsite=self.u_onsite[idx],
            w_intersite=self.w_intersite[idx][:, :, idx],
            v_bias=_relabel_bias(self.v_bias, idx),
        )


def _relabel_bias(v: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # Keep ½·V_ij(n_i − n_j) invariant: an antisymmetric full matrix relabels cleanly.
    full = np.triu(v, 1) - np.triu(v, 1).T
    relabeled = full[np.ix_(idx, idx)]
    return np.triu(relabeled, 1)


@dataclass(frozen=True)
class FockBasis:
    """Occupation basis of a fixed (electron count, S_z) sector, or of the whole Fock space."""

    n_sites: int
    states: np.ndarray
    n_electrons: Optional[int] = None
    sz: Optional[float] = None

    @property
    def dimension(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def index(self, state: int) -> int:
        pos = int(np.searchsorted(self.states, state))
        if pos >= len(self.states) or self.states[pos] != state:
            raise KeyError(state)
        return pos

    def occupations(self) -> np.ndarray:
        """Array (dim, n_sites, 2) of orbital occupations."""
        n_orb = 2 * self.n_sites
        bits = (self.states[:, None] >> np.arange(n_orb)) & 1
        return bits.reshape(-1, self.n_sites, 2)


def _check_sector(n_sites: int, n_electrons: int, sz: float) -> tuple[int, int]:
    if not 0 <= n_electrons <= 2 * n_sites:
        raise DomainError(f"n_electrons must lie in [0, {2 * n_sites}], got {n_electrons}")
    twice = 2.0 * sz
    if abs(twice - round(twice)) > 1e-9:
        raise DomainError(f"sz must be a multiple of 1/2, got {sz}")
    n_up2 = n_electrons + round(twice)
    if n_up2 % 2:
        raise DomainError(f"sz={sz} is incompatible with {n_electrons} electrons")
    n_up = n_up2 // 2
    n_down = n_electrons - n_up
    if not (0 <= n_up <= n_sites and 0 <= n_down <= n_sites):
        raise DomainError(f"sz={sz} is unreachable with {n_electrons} electrons on {n_sites} sites")
    return n_up, n_down


def build_basis(n_sites: int, n_electrons: int, sz: float) -> FockBasis:
    """Basis of the sector with ``n_electrons`` electrons and total spin projection ``sz``.

    Raises:
        DomainError: If the electron count and ``sz`` are incompatible.
        CapacityError: If the sector exceeds the dense dimension cap.

    """
    n_up, n_down = _check_sector(n_sites, n_electrons, sz)
    dim = math.comb(n_sites, n_up) * math.comb(n_sites, n_down)
    if dim > HUBBARD_DIM_CAP:
        raise CapacityError(f"sector dimension {dim} exceeds cap {HUBBARD_DIM_CAP}; restrict the sector")
    states = []
    for ups in combinations(range(n_sites), n_up):
        up_bits = sum(1 << (2 * i) for i in ups)
        for downs in combinations(range(n_sites), n_down):
            states.append(up_bits | sum(1 << (2 * i + 1) for i in downs))
    return FockBasis(n_sites=n_sites, states=np.array(sorted(states), dtype=np.int64), n_electrons=n_electrons, sz=sz)


def full_basis(n_sites: int) -> FockBasis:
    """All 4**n_sites occupation states, every sector included."""
    dim = 4**n_sites
    if dim > HUBBARD_DIM_CAP:
        raise CapacityError(f"Fock space dimension {dim} exceeds cap {HUBBARD_DIM_CAP}")
    return FockBasis(n_sites=n_sites, states=np.arange(dim, dtype=np.int64))


def _parity_below(state: int, orbital: int) -> int:
    return bin(state & ((1 << orbital) - 1)).count("1") & 1


def hop(state: int, target: int, source: int) -> Optional[tuple[int, int]]:
    """Apply c†_target c_source; returns (new_state, sign) or None when the result vanishes."""
    if not (state >> source) & 1:
        return None
    if target != source and (state >> target) & 1:
        return None
    sign = _parity_below(state, source)
    state ^= 1 << source
    sign ^= _parity_below(state, target)
    state |= 1 << target
    return state, -1 if sign else 1


def build_hamiltonian(params: HubbardParams, basis: FockBasis) -> np.ndarray:
    """Dense extended Hubbard Hamiltonian on ``basis``.

    H = Σ(E_os+η_i)n_iσ − Σ T_ij c†_iσ c_jσ + Σ U_i n_i↑n_i↓ + Σ_{i<j} W_iσjσ' n_iσ n_jσ' + V̂
    """
    if params.n_sites != basis.n_sites:
        raise DomainError(f"params describe {params.n_sites} sites, basis has {basis.n_sites}")
    n = params.n_sites
    occ = basis.occupations().astype(float)
    n_site = occ.sum(axis=2)

    diag = np.sum((params.e_os + params.eta) * n_site, axis=1)
    diag += np.sum(params.u_onsite * occ[:, :, 0] * occ[:, :, 1], axis=1)
    w = params.w_intersite
    for i, j in combinations(range(n), 2):
        diag += np.einsum("ks,kt,st->k", occ[:, i, :], occ[:, j, :], w[i, :, j, :])
        if params.v_bias[i, j]:
            diag += 0.5 * params.v_bias[i, j] * (n_site[:, i] - n_site[:, j])

    H = np.diag(diag)
    hops = [(i, j) for i in range(n) for j in range(n) if i != j and params.t_hop[i, j] != 0.0]
    for col, state in enumerate(basis.states.tolist()):
        for i, j in hops:
            for spin in (0, 1):
                result = hop(state, 2 * i + spin, 2 * j + spin)
                if result is None:
                    continue
                new_state, sign = result
                H[basis.index(new_state), col] -= params.t_hop[i, j] * sign
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    vectors: np.ndarray
    max_residual: float


def ground_and_spectrum(H: np.ndarray) -> Spectrum:
    """Full dense spectrum, eigenvalues ascending.

    Raises:
        CapacityError: If the matrix is larger than the dense cap.

    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {H.shape}")
    if H.shape[0] > HUBBARD_DIM_CAP:
        raise CapacityError(f"dimension {H.shape[0]} exceeds cap {HUBBARD_DIM_CAP}; restrict to a sector")
    energies, vectors = eigh(H)
    residual = np.linalg.norm(H @ vectors - vectors * energies, axis=0)
    max_residual = float(residual.max()) if residual.size else 0.0
    scale = max(float(np.linalg.norm(H, 2)), 1.0) if H.size else 1.0
    if max_residual > 1e-10 * scale:
        logger.warning("eigenpair residual %.3g exceeds 1e-10·‖H‖", max_residual)
    return Spectrum(energies=energies, vectors=vectors, max_residual=max_residual)


def dump_triplets(H: np.ndarray, path: str | os.PathLike[str], threshold: float = 0.0) -> None:
    """Write the non-zero entries of ``H`` as ``row,col,value_ev`` lines."""
    rows, cols = np.nonzero(np.abs(H) > threshold)
    lines = ["row,col,value_ev"]
    lines.extend(f"{r},{c},{float(H[r, c])!r}" for r, c in zip(rows.tolist(), cols.tolist()))
    write_text_atomic(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class EffectiveQubitCoefficients:
    """Pauli expansion of the Hubbard Hamiltonian restricted to the charge configurations.

    Qubit ``p`` is pair ``p``; its state 0 has the excess electron on the left site.
    """

    identity: float
    x: tuple[float, ...]
    z: tuple[float, ...]
    zz: np.ndarray
    """Upper-triangular (N, N) matrix of Z_p Z_q coefficients."""

    leakage: float
    """Norm of the couplings out of the configuration subspace."""

    residual: float
    """Norm of the restricted operator outside the span of 𝟙, X_p, Z_p, Z_pZ_q."""

    matrix: np.ndarray
    """The restricted 2^N × 2^N operator itself."""

    @property
    def n_qubits(self) -> int:
        return len(self.x)


def configuration_states(n_pairs: int) -> list[int]:
    """Pair-major occupation states of the charge configurations, in qubit-index order.

    Each pair holds two spin-up electrons and one spin-down excess electron, which sits
    on the left site for qubit state 0 and on the right site for state 1.
    """
    states = []
    for k in range(2**n_pairs):
        state = 0
        for p in range(n_pairs):
            bit = (k >> (n_pairs - 1 - p)) & 1
            left, right = 2 * p, 2 * p + 1
            state |= 1 << (2 * left) | 1 << (2 * right)
            state |= 1 << (2 * (right if bit else left) + 1)
        states.append(state)
    return states


def project_to_qubits(params: HubbardParams, layout: DeviceLayout) -> EffectiveQubitCoefficients:
    """Restrict the Hubbard Hamiltonian to one excess electron per pair and expand in Paulis.

    Sites are relabeled pair by pair (left then right), the Hamiltonian is built on the
    3-electrons-per-pair sector and the 2^N charge configurations are extracted.

    Raises:
        ProjectionError: If a site is unpaired or any hopping connects different pairs.

    """
    if params.n_sites != layout.n_sites:
        raise ProjectionError(f"params describe {params.n_sites} sites, layout has {layout.n_sites}")
    pair_of = layout.pair_of_site()
    unpaired = [i for i in range(layout.n_sites) if i not in pair_of]
    if unpaired:
        raise ProjectionError(f"sites {unpaired} belong to no pair")
    for i, j in zip(*np.nonzero(params.t_hop)):
        if pair_of[int(i)] != pair_of[int(j)]:
            raise ProjectionError(f"hopping T[{i},{j}]={params.t_hop[i, j]:.3g} eV couples different pairs")

    n_pairs = layout.n_pairs
    order = [site for pair in layout.pairs for site in pair]
    relabeled = params.permuted(order)
    basis = build_basis(params.n_sites, 3 * n_pairs, 0.5 * n_pairs)
    H = build_hamiltonian(relabeled, basis)
    sub = [basis.index(s) for s in configuration_states(n_pairs)]
    outside = np.setdiff1d(np.arange(basis.dimension), sub)
    leakage = float(np.linalg.norm(H[np.ix_(outside, sub)])) if outside.size else 0.0
    restricted = H[np.ix_(sub, sub)]

    coeffs = pauli_coefficients(restricted, n_pairs)
    x = tuple(coeffs.get(_label(n_pairs, {p: "X"}), 0.0) for p in range(n_pairs))
    z = tuple(coeffs.get(_label(n_pairs, {p: "Z"}), 0.0) for p in range(n_pairs))
    zz = np.zeros((n_pairs, n_pairs))
    for p, q in combinations(range(n_pairs), 2):
        zz[p, q] = coeffs.get(_label(n_pairs, {p: "Z", q: "Z"}), 0.0)
    identity = coeffs.get("I" * n_pairs, 0.0)
    kept = {"I" * n_pairs}
    kept.update(_label(n_pairs, {p: a}) for p in range(n_pairs) for a in "XZ")
    kept.update(_label(n_pairs, {p: "Z", q: "Z"}) for p, q in combinations(range(n_pairs), 2))
    residual = math.sqrt(sum(c * c for label, c in coeffs.items() if label not in kept) * 2**n_pairs)
    if leakage > 1e-12 or residual > 1e-12:
        logger.warning("projection leaves leakage %.3g and residual %.3g", leakage, residual)
    zz.setflags(write=False)
    return EffectiveQubitCoefficients(
        identity=float(identity), x=x, z=z, zz=zz, leakage=leakage, residual=residual, matrix=restricted
    )


def _label(n: int, ops: dict[int, str]) -> str:
    return "".join(ops.get(p, "I") for p in range(n))
