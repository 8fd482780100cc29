"""Dense complexified Clifford algebra with the conjugation map and Spin^C helpers.

Blades are indexed by bit masks: bit ``i`` set means generator ``e_{i+1}`` is a
factor.  Generators square to ``-1``, so for real vectors ``v * v = -|v|^2``.

Every :class:`Multivector` carries an arbitrary leading batch shape, which is how
grid fields are stored: ``coeffs.shape == batch + (2**d,)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import NotARealVector, NotARotation, NotSpinC, SignatureMismatch

MAX_DIM = 12
_TABLE_DIM = 8


@dataclass(frozen=True)
class Signature:
    """Tangent rank ``n`` and normal rank ``m``; generators ``1..n`` are tangent."""

    n: int
    m: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 0:
            raise ValueError(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        if self.n + self.m > MAX_DIM:
            raise ValueError(f"dimension {self.n + self.m} exceeds {MAX_DIM}")

    @property
    def d(self) -> int:
        return self.n + self.m

    @property
    def size(self) -> int:
        return 1 << self.d


def _popcount(x):
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


def _sign_row(a: int, d: int) -> np.ndarray:
    """Sign of ``e_A e_B`` for fixed mask ``a`` and every mask ``b``."""
    b = np.arange(1 << d, dtype=np.int64)
    swaps = np.zeros_like(b)
    shifted = a >> 1
    while shifted:
        swaps += _popcount(shifted & b)
        shifted >>= 1
    # each shared generator contributes e_i e_i = -1
    swaps += _popcount(a & b)
    return np.where(swaps % 2 == 0, 1.0, -1.0)


@lru_cache(maxsize=None)
def sign_table(d: int) -> np.ndarray:
    """``table[a, b]`` is the sign of ``e_A e_B = table[a, b] * e_{A xor B}``."""
    table = np.stack([_sign_row(a, d) for a in range(1 << d)])
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def blade_grades(d: int) -> np.ndarray:
    grades = _popcount(np.arange(1 << d))
    grades.setflags(write=False)
    return grades


@lru_cache(maxsize=None)
def _tau_signs(d: int) -> np.ndarray:
    k = blade_grades(d)
    signs = np.where((k * (k + 1) // 2) % 2 == 0, 1.0, -1.0)
    signs.setflags(write=False)
    return signs


def _product(a: np.ndarray, b: np.ndarray, d: int) -> np.ndarray:
    size = 1 << d
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (size,)
    out = np.zeros(shape, dtype=np.result_type(a, b, np.complex128))
    table = sign_table(d) if d <= _TABLE_DIM else None
    r = np.arange(size)
    for i in range(size):
        ai = a[..., i]
        if not np.any(ai):
            continue
        j = i ^ r
        signs = table[i, j] if table is not None else _sign_row(i, d)[j]
        out += ai[..., None] * (signs * b[..., j])
    return out


class Multivector:
    """Element (or batch of elements) of the complexified algebra ``Cl_{n+m}``."""

    __slots__ = ("sig", "coeffs")

    def __init__(self, sig: Signature, coeffs):
        coeffs = np.array(coeffs, dtype=np.complex128)
        if coeffs.shape[-1:] != (sig.size,):
            raise ValueError(f"expected trailing axis {sig.size}, got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("multivector coefficients must be finite")
        coeffs.setflags(write=False)
        self.sig = sig
        self.coeffs = coeffs

    @classmethod
    def _wrap(cls, sig: Signature, coeffs: np.ndarray) -> "Multivector":
        # skips copy and validation for internal results
        obj = cls.__new__(cls)
        coeffs.setflags(write=False)
        obj.sig = sig
        obj.coeffs = coeffs
        return obj

    # construction helpers

    @classmethod
    def scalar(cls, sig: Signature, value=1.0, batch: tuple = ()) -> "Multivector":
        c = np.zeros(batch + (sig.size,), dtype=np.complex128)
        c[..., 0] = value
        return cls._wrap(sig, c)

    @classmethod
    def zeros(cls, sig: Signature, batch: tuple = ()) -> "Multivector":
        return cls._wrap(sig, np.zeros(batch + (sig.size,), dtype=np.complex128))

    @classmethod
    def blade(cls, sig: Signature, *generators: int, value=1.0) -> "Multivector":
        """Product ``value * e_{g1} e_{g2} ...`` with 1-based generator indices."""
        out = cls.scalar(sig, value)
        for g in generators:
            if not 1 <= g <= sig.d:
                raise ValueError(f"generator e{g} outside 1..{sig.d}")
            out = out * cls._wrap(sig, _unit(sig, 1 << (g - 1)))
        return out

    # basic structure

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    def __getitem__(self, idx) -> "Multivector":
        out = self.coeffs[idx]
        if out.ndim == 0 or out.shape[-1] != self.sig.size:
            raise IndexError("indexing must address batch axes only")
        return Multivector._wrap(self.sig, np.array(out))

    def grade(self, k: int) -> "Multivector":
        mask = blade_grades(self.sig.d) == k
        return Multivector._wrap(self.sig, np.where(mask, self.coeffs, 0.0))

    def even(self) -> "Multivector":
        mask = blade_grades(self.sig.d) % 2 == 0
        return Multivector._wrap(self.sig, np.where(mask, self.coeffs, 0.0))

    def norm(self) -> np.ndarray:
        """Euclidean norm of the coefficient vector (per batch element)."""
        return np.linalg.norm(self.coeffs, axis=-1)

    def tau(self) -> "Multivector":
        return tau(self)

    # arithmetic

    def _check(self, other: "Multivector"):
        if other.sig != self.sig:
            raise SignatureMismatch(f"{self.sig} vs {other.sig}")

    def __add__(self, other):
        if isinstance(other, Multivector):
            self._check(other)
            return Multivector._wrap(self.sig, self.coeffs + other.coeffs)
        c = np.array(self.coeffs)
        c[..., 0] += other
        return Multivector._wrap(self.sig, c)

    __radd__ = __add__

    def __neg__(self):
        return Multivector._wrap(self.sig, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return mv_product(self, other)
        return Multivector._wrap(self.sig, self.coeffs * _as_batch_scalar(other))

    def __rmul__(self, other):
        return Multivector._wrap(self.sig, self.coeffs * _as_batch_scalar(other))

    def __truediv__(self, other):
        return Multivector._wrap(self.sig, self.coeffs / _as_batch_scalar(other))

    def allclose(self, other, atol: float = 1e-12) -> bool:
        if isinstance(other, Multivector):
            self._check(other)
            other = other.coeffs
        else:
            other = Multivector.scalar(self.sig, other).coeffs
        return bool(np.all(np.abs(self.coeffs - other) <= atol))

    def __repr__(self):
        if self.batch_shape:
            return f"Multivector({self.sig}, batch={self.batch_shape})"
        terms = []
        for mask, c in enumerate(self.coeffs):
            if c != 0:
                terms.append(f"({c:.6g}){blade_name(mask)}")
        return " + ".join(terms) if terms else "0"

    # serialization

    def to_json(self) -> dict:
        if self.batch_shape:
            raise ValueError("to_json serializes a single multivector")
        return {
            "n": self.sig.n,
            "m": self.sig.m,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, payload) -> "Multivector":
        if isinstance(payload, str):
            payload = json.loads(payload)
        sig = Signature(int(payload["n"]), int(payload["m"]))
        pairs = np.asarray(payload["coeffs"], dtype=float)
        if pairs.shape != (sig.size, 2):
            raise ValueError(f"expected {sig.size} [re, im] pairs, got shape {pairs.shape}")
        return cls(sig, pairs[:, 0] + 1j * pairs[:, 1])


def _as_batch_scalar(x):
    x = np.asarray(x)
    return x[..., None] if x.ndim else x


def _unit(sig: Signature, mask: int) -> np.ndarray:
    c = np.zeros(sig.size, dtype=np.complex128)
    c[mask] = 1.0
    return c


def blade_name(mask: int) -> str:
    if mask == 0:
        return "1"
    return "e" + "".join(str(i + 1) for i in range(mask.bit_length()) if mask >> i & 1)


def mv_product(a: Multivector, b: Multivector) -> Multivector:
    """Geometric product ``a b`` with ``e_i e_j = -e_j e_i`` and ``e_i e_i = -1``."""
    if a.sig != b.sig:
        raise SignatureMismatch(f"{a.sig} vs {b.sig}")
    return Multivector._wrap(a.sig, _product(a.coeffs, b.coeffs, a.sig.d))


def tau(a: Multivector) -> Multivector:
    """Grade sign ``(-1)^k``, blade reversal and complex conjugation."""
    return Multivector._wrap(a.sig, _tau_signs(a.sig.d) * np.conj(a.coeffs))


def cl_inner(x1: Multivector, x2: Multivector) -> Multivector:
    """Algebra-valued pairing ``<<x1, x2>> = tau(x2) x1``."""
    if x1.sig != x2.sig:
        raise SignatureMismatch(f"{x1.sig} vs {x2.sig}")
    return mv_product(tau(x2), x1)


def vector_embed(sig: Signature, v) -> Multivector:
    """Grade-1 injection; ``v`` may carry a batch shape ``(..., d)``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1:] != (sig.d,):
        raise ValueError(f"vector needs {sig.d} components, got shape {v.shape}")
    c = np.zeros(v.shape[:-1] + (sig.size,), dtype=np.complex128)
    for i in range(sig.d):
        c[..., 1 << i] = v[..., i]
    return Multivector._wrap(sig, c)


@lru_cache(maxsize=None)
def _vector_masks(d: int) -> np.ndarray:
    return np.array([1 << i for i in range(d)])


def extract_real_vector(a: Multivector, tol: float = 1e-9) -> np.ndarray:
    """Return the real grade-1 part, refusing anything that is not a real vector.

    Raises:
        NotARealVector: a non-vector coefficient or an imaginary vector part
            exceeds ``tol``; the message names the worst coefficient.
    """
    d = a.sig.d
    masks = _vector_masks(d)
    junk = np.array(a.coeffs)
    junk[..., masks] = 1j * junk[..., masks].imag
    mags = np.abs(junk)
    worst = float(mags.max()) if mags.size else 0.0
    if worst > tol:
        flat = int(np.argmax(mags))
        where = np.unravel_index(flat, mags.shape)
        blade = blade_name(int(where[-1]))
        node = tuple(int(i) for i in where[:-1])
        raise NotARealVector(
            f"coefficient {a.coeffs[where]:.3e} on blade {blade}"
            + (f" at batch index {node}" if node else "")
            + f" exceeds tol {tol:g}",
            magnitude=worst,
        )
    return np.ascontiguousarray(a.coeffs[..., masks].real)


class SpinCElement:
    """Unit element ``g s`` of Spin^C: even ``g`` in Spin, ``s`` a unit complex phase.

    Validation is numerical: evenness, ``tau(x) x == 1`` and the adjoint action
    sending every generator to a real vector.  ``value`` may be batched.
    """

    __slots__ = ("value",)

    def __init__(self, value: Multivector, tol: float = 1e-12):
        odd = value.coeffs[..., blade_grades(value.sig.d) % 2 == 1]
        if odd.size and np.abs(odd).max() > tol:
            raise NotSpinC(f"odd-grade part of size {np.abs(odd).max():.3e}")
        defect = unit_defect(value)
        if defect.size and defect.max() > tol:
            raise NotSpinC(f"tau(x) x differs from 1 by {defect.max():.3e}")
        inv = tau(value)
        for i in range(value.sig.d):
            e = Multivector._wrap(value.sig, _unit(value.sig, 1 << i))
            try:
                extract_real_vector(value * e * inv, tol=max(tol, 1e-12) * 10)
            except NotARealVector as exc:
                raise NotSpinC(f"adjoint action does not preserve vectors: {exc}") from exc
        self.value = value

    @property
    def sig(self) -> Signature:
        return self.value.sig

    def inverse(self) -> "SpinCElement":
        out = SpinCElement.__new__(SpinCElement)
        out.value = tau(self.value)
        return out

    def __mul__(self, other):
        out = SpinCElement.__new__(SpinCElement)
        if isinstance(other, SpinCElement):
            out.value = self.value * other.value
            return out
        phase = np.asarray(other, dtype=complex)
        if np.any(np.abs(np.abs(phase) - 1.0) > 1e-12):
            raise NotSpinC("only unit complex phases keep the Spin^C unit invariant")
        out.value = self.value * phase
        return out

    def __repr__(self):
        return f"SpinCElement({self.value!r})"


def unit_defect(x: Multivector) -> np.ndarray:
    """Per-element ``|tau(x) x - 1|`` in coefficient norm."""
    t = mv_product(tau(x), x).coeffs
    t = np.array(t)
    t[..., 0] -= 1.0
    return np.linalg.norm(t, axis=-1)


def adjoint_action(g: SpinCElement, v, tol: float = 1e-9) -> np.ndarray:
    """Rotate real vector(s) ``v`` by ``g v g^{-1}``; the phase of ``g`` cancels."""
    gv = g.value
    x = vector_embed(gv.sig, v)
    return extract_real_vector(gv * x * tau(gv), tol=tol)


def adjoint_matrix(g: SpinCElement) -> np.ndarray:
    """Matrix of the adjoint action; columns are images of the generators."""
    gv = g.value
    d = gv.sig.d
    g_col = Multivector._wrap(gv.sig, gv.coeffs[..., None, :])
    x = vector_embed(gv.sig, np.eye(d))
    images = extract_real_vector(g_col * x * tau(g_col))
    # images[..., i, :] is the image of e_i
    return np.swapaxes(images, -1, -2)


def plane_rotor(sig: Signature, p: int, q: int, theta) -> Multivector:
    """Lift of the rotation taking ``e_p`` towards ``e_q`` by ``theta`` (0-based p, q)."""
    theta = np.asarray(theta, dtype=float)
    c = np.zeros(theta.shape + (sig.size,), dtype=np.complex128)
    c[..., 0] = np.cos(theta / 2)
    mask = (1 << p) | (1 << q)
    # e_p e_q with p < q is the stored blade; swap order otherwise
    c[..., mask] = np.sin(theta / 2) * (1.0 if p < q else -1.0)
    return Multivector._wrap(sig, c)


def spin_lift(R, hint: SpinCElement | None = None, sig: Signature | None = None,
              tol: float = 1e-10) -> SpinCElement:
    """Lift rotation matrix/matrices ``R`` (shape ``(..., d, d)``) into Spin.

    ``R`` is reduced to the identity with Givens rotations, each rotation is
    lifted to a plane rotor and the rotors are multiplied.  Of the two lifts
    ``+-g`` the one closer to ``hint`` is returned; without a hint the scalar
    part is made nonnegative (ties go to the lowest blade with a nonzero
    coefficient being positive).
    """
    R = np.asarray(R, dtype=float)
    d = R.shape[-1]
    if R.shape[-2:] != (d, d):
        raise NotARotation(f"expected square matrices, got shape {R.shape}")
    if sig is None:
        sig = hint.sig if hint is not None else Signature(d, 0)
    if sig.d != d:
        raise NotARotation(f"matrix size {d} does not match algebra dimension {sig.d}")
    orth = np.abs(np.swapaxes(R, -1, -2) @ R - np.eye(d)).max(initial=0.0)
    if orth > tol:
        raise NotARotation(f"R^T R deviates from I by {orth:.3e}")
    det = np.linalg.det(R)
    if np.any(np.abs(det - 1.0) > tol):
        raise NotARotation(f"det R = {np.asarray(det).ravel()[np.argmax(np.abs(det - 1.0))]:.6g}")

    batch = R.shape[:-2]
    work = np.array(R)
    g = Multivector.scalar(sig, 1.0, batch)
    for j in range(d - 1):
        for i in range(j + 1, d):
            a = work[..., j, j]
            b = work[..., i, j]
            theta = -np.arctan2(b, a)
            c, s = np.cos(theta), np.sin(theta)
            rj = work[..., j, :].copy()
            ri = work[..., i, :].copy()
            work[..., j, :] = c[..., None] * rj - s[..., None] * ri
            work[..., i, :] = s[..., None] * rj + c[..., None] * ri
            # work = G R with G the (j, i) plane rotation by theta, so R picks up G^T
            g = g * plane_rotor(sig, j, i, -theta)
    g = _fix_sign(g, hint)
    out = SpinCElement.__new__(SpinCElement)
    out.value = g
    return out


def _fix_sign(g: Multivector, hint: SpinCElement | None) -> Multivector:
    c = g.coeffs
    if hint is not None:
        ref = np.broadcast_to(hint.value.coeffs, c.shape)
        flip = np.sum((np.conj(ref) * c).real, axis=-1) < 0
    else:
        lowest = np.argmax(np.abs(c) > 1e-12, axis=-1)
        pivot = np.take_along_axis(c.real, lowest[..., None], axis=-1)[..., 0]
        scalar = c[..., 0].real
        flip = np.where(np.abs(scalar) > 1e-12, scalar < 0, pivot < 0)
    return Multivector._wrap(g.sig, np.where(flip[..., None], -c, c))


def random_multivector(sig: Signature, rng: np.random.Generator, batch: tuple = ()) -> Multivector:
    """Complex coefficients with unit Euclidean norm per element."""
    c = rng.standard_normal(batch + (sig.size,)) + 1j * rng.standard_normal(batch + (sig.size,))
    c /= np.linalg.norm(c, axis=-1, keepdims=True)
    return Multivector._wrap(sig, c)


def random_spinc(sig: Signature, rng: np.random.Generator, batch: tuple = (),
                 factors: int | None = None) -> SpinCElement:
    """Product of an even number of random unit vectors times a random phase."""
    if factors is None:
        factors = 2 * sig.d
    if factors % 2:
        raise ValueError("Spin elements need an even number of vector factors")
    g = Multivector.scalar(sig, 1.0, batch)
    for _ in range(factors):
        v = rng.standard_normal(batch + (sig.d,))
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        g = g * vector_embed(sig, v)
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi, size=batch))
    out = SpinCElement.__new__(SpinCElement)
    out.value = g * phase
    return out


def random_rotation(d: int, rng: np.random.Generator, batch: tuple = ()) -> np.ndarray:
    """Compose random Givens rotations over every coordinate plane."""
    R = np.broadcast_to(np.eye(d), batch + (d, d)).copy()
    for p in range(d):
        for q in range(p + 1, d):
            G = np.broadcast_to(np.eye(d), batch + (d, d)).copy()
            th = rng.uniform(-np.pi, np.pi, size=batch)
            G[..., p, p] = np.cos(th)
            G[..., q, q] = np.cos(th)
            G[..., q, p] = np.sin(th)
            G[..., p, q] = -np.sin(th)
            R = G @ R
    return R


def generators(sig: Signature) -> list[Multivector]:
    return [Multivector._wrap(sig, _unit(sig, 1 << i)) for i in range(sig.d)]


def bivector(sig: Signature, coeffs, pairs: Sequence[tuple[int, int]] | None = None) -> Multivector:
    """``sum_{a<b} coeffs[..., a, b] e_a e_b`` from an antisymmetric ``(..., d, d)`` array."""
    coeffs = np.asarray(coeffs)
    d = sig.d
    c = np.zeros(coeffs.shape[:-2] + (sig.size,), dtype=np.complex128)
    if pairs is None:
        pairs = [(a, b) for a in range(d) for b in range(a + 1, d)]
    for a, b in pairs:
        c[..., (1 << a) | (1 << b)] += coeffs[..., a, b]
    return Multivector._wrap(sig, c)
