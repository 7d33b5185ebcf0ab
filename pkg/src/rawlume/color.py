"""Polynomial color enhancement and least-squares fitting of its matrix.

A degree-K expansion maps each RGB triple to the fixed list of monomials
r^i g^j b^k (i+j+k <= K), highest-degree block first, optionally ending in a
constant 1; a 3 x term_count matrix then produces the output color. Fitting
minimizes the mean squared error against a target image via damped normal
equations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .raw import RgbImage

# Monomial exponents (i, j, k) for r^i g^j b^k, grouped by total degree.
# Within each block: pure powers first, then mixed terms.
_DEGREE_BLOCKS = {
    1: [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
    2: [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (0, 1, 1), (1, 0, 1)],
    3: [
        (3, 0, 0), (0, 3, 0), (0, 0, 3),
        (1, 2, 0), (0, 1, 2), (1, 0, 2),
        (2, 1, 0), (0, 2, 1), (2, 0, 1),
        (1, 1, 1),
    ],
    4: [
        (4, 0, 0), (0, 4, 0), (0, 0, 4),
        (3, 1, 0), (3, 0, 1), (1, 3, 0), (0, 3, 1), (1, 0, 3), (0, 1, 3),
        (2, 2, 0), (0, 2, 2), (2, 0, 2),
        (2, 1, 1), (1, 2, 1), (1, 1, 2),
    ],
}

GRAM_DAMPING = 1e-8


@dataclass(frozen=True)
class PolySpec:
    """Which polynomial expansion to use: degree in 1..4, optional constant."""

    degree: int = 3
    with_constant: bool = True

    def __post_init__(self):
        if self.degree not in (1, 2, 3, 4):
            raise ValueError(f"degree ∈ 1..4, got {self.degree}")

    @property
    def terms(self) -> list:
        """Exponent triples in expansion order (constant excluded)."""
        out = []
        for k in range(self.degree, 0, -1):
            out.extend(_DEGREE_BLOCKS[k])
        return out

    @property
    def term_count(self) -> int:
        n = len(self.terms)
        return n + 1 if self.with_constant else n


@dataclass
class ColorMatrix:
    """3 x term_count color transform matrix bound to its expansion spec."""

    matrix: np.ndarray
    spec: PolySpec = field(default_factory=PolySpec)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.shape != (3, self.spec.term_count):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match spec "
                f"(expected (3, {self.spec.term_count}))"
            )
        if not np.isfinite(self.matrix).all():
            raise ValueError("matrix entries must be finite")

    def to_json(self) -> str:
        return json.dumps(
            {
                "degree": self.spec.degree,
                "with_constant": self.spec.with_constant,
                "rows": self.matrix.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ColorMatrix":
        d = json.loads(text)
        spec = PolySpec(degree=int(d["degree"]), with_constant=bool(d["with_constant"]))
        return cls(matrix=np.asarray(d["rows"], dtype=np.float64), spec=spec)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "ColorMatrix":
        return cls.from_json(Path(path).read_text())


def identity_matrix(spec: PolySpec) -> ColorMatrix:
    """The matrix reproducing the input exactly (selects r, g, b)."""
    a = np.zeros((3, spec.term_count))
    terms = spec.terms
    for channel, exps in enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1)]):
        a[channel, terms.index(exps)] = 1.0
    return ColorMatrix(matrix=a, spec=spec)


def poly_expand(rgb: np.ndarray, spec: PolySpec) -> np.ndarray:
    """Monomial feature stack of an RGB triple or planar image.

    Input shape (3, ...) -> output shape (term_count, ...), terms in the
    documented order, trailing 1 iff the spec carries a constant.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim < 1 or rgb.shape[0] != 3:
        raise ValueError("expected leading RGB axis of length 3")
    r, g, b = rgb[0], rgb[1], rgb[2]
    feats = [(r**i) * (g**j) * (b**k) for i, j, k in spec.terms]
    if spec.with_constant:
        feats.append(np.ones_like(r))
    return np.stack(feats)


def apply_color(img: RgbImage, matrix, spec: PolySpec | None = None) -> RgbImage:
    """Per-pixel polynomial color transform, clamped to [0, 1] afterwards."""
    if isinstance(matrix, ColorMatrix):
        if spec is not None and spec != matrix.spec:
            raise ValueError("explicit spec conflicts with the matrix's own spec")
        spec = matrix.spec
        a = matrix.matrix
    else:
        if spec is None:
            raise ValueError("a bare matrix needs an explicit PolySpec")
        a = np.asarray(matrix, dtype=np.float64)
        if a.shape != (3, spec.term_count):
            raise ValueError(f"matrix shape {a.shape} does not match spec term count {spec.term_count}")
    if img.color_state != "encoded-srgb":
        raise ValueError(f"color transform expects encoded-srgb input, got {img.color_state!r}")
    feats = poly_expand(img.planes.reshape(3, -1), spec)
    out = np.clip(a @ feats, 0.0, 1.0).reshape(img.planes.shape)
    return RgbImage(planes=out, color_state="encoded-srgb")


def fit_color_lsq(source: RgbImage, target: RgbImage, spec: PolySpec) -> ColorMatrix:
    """Least-squares matrix mapping expanded source pixels onto target pixels.

    Normal equations with a small Tikhonov term on the Gram matrix, so
    near-duplicate features cannot blow up the solve. The damping acts on the
    raw (summed over pixels) Gram; its bias on an exactly representable
    target stays far below 1e-6 in the coefficients.
    """
    if source.planes.shape != target.planes.shape:
        raise ValueError("source and target geometry must match")
    m = source.height * source.width
    if m < spec.term_count:
        raise ValueError(f"need at least {spec.term_count} pixels, got {m}")
    x = poly_expand(source.planes.reshape(3, -1), spec)
    y = target.planes.reshape(3, -1)
    gram = x @ x.T + GRAM_DAMPING * np.eye(spec.term_count)
    rhs = x @ y.T
    try:
        a_t = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"normal equations unsolvable even with damping: {exc}") from exc
    if not np.isfinite(a_t).all():
        raise ValueError("normal equations produced non-finite coefficients")
    return ColorMatrix(matrix=a_t.T, spec=spec)


def fit_residual(source: RgbImage, target: RgbImage, matrix: ColorMatrix) -> float:
    """Mean squared error per sample of the (unclamped) transform."""
    x = poly_expand(source.planes.reshape(3, -1), matrix.spec)
    y = target.planes.reshape(3, -1)
    return float(np.mean((matrix.matrix @ x - y) ** 2))
