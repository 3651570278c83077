"""Quantum t-designs: representation, certification, qubit catalog and POVMs."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NORM_TOL = 1e-12
FRAME_TOL = 1e-9
COMPLETENESS_TOL = 1e-10

GOLDEN = (1 + math.sqrt(5)) / 2

BUILTIN_STRENGTH = {"octahedron": 3, "icosahedron": 5, "icosidodecahedron": 5}


class DesignError(ValueError):
    pass


class DesignSchemaError(DesignError):
    """Design file does not follow the JSON schema."""


class DesignNormError(DesignError):
    """A design vector is not unit length."""


class DesignValidationError(DesignError):
    """Frame-potential or completeness certification failed."""

    def __init__(self, report):
        self.report = report
        super().__init__(report.summary())


class PartitionError(DesignError):
    def __init__(self, message, group=None):
        self.group = group
        super().__init__(message)


@dataclass(frozen=True)
class QuantumDesign:
    """K unit vectors in C^d with a declared strength t.

    ``partition`` optionally splits the indices into M groups of equal size
    ell; each group is meant to form its own rank-one POVM.
    """

    vectors: np.ndarray = field(repr=False)
    strength: int
    partition: tuple[tuple[int, ...], ...] | None = None
    name: str = ""

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.complex128)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DesignSchemaError(f"vectors must be a K x d array, got shape {v.shape}")
        norms = np.linalg.norm(v, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1) > NORM_TOL)
        if bad.size:
            raise DesignNormError(f"vectors {bad.tolist()} are not unit norm")
        if self.strength < 1:
            raise DesignSchemaError(f"strength must be >= 1, got {self.strength}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        if self.partition is not None:
            part = tuple(tuple(int(i) for i in g) for g in self.partition)
            flat = sorted(itertools.chain.from_iterable(part))
            if flat != list(range(len(v))):
                raise PartitionError("partition groups must be disjoint and cover every vector")
            if len({len(g) for g in part}) != 1:
                raise PartitionError("partition groups must have equal size")
            object.__setattr__(self, "partition", part)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def with_partition(self, partition) -> QuantumDesign:
        return QuantumDesign(self.vectors, self.strength, partition, self.name)

    def rotated(self, unitary) -> QuantumDesign:
        u = np.asarray(unitary)
        return QuantumDesign(self.vectors @ u.T, self.strength, self.partition, self.name)


@dataclass(frozen=True)
class DesignPovm:
    """Rank-one POVM with effects weight * |phi_j><phi_j|, weight = d/ell."""

    vectors: np.ndarray = field(repr=False)
    weight: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def effects(self) -> np.ndarray:
        return self.weight * np.einsum("ki,kj->kij", self.vectors, self.vectors.conj())

    def completeness_residual(self) -> float:
        total = self.effects().sum(axis=0)
        return float(np.abs(total - np.eye(self.dim)).max())


@dataclass
class ValidationReport:
    strength: int
    frame_potentials: list[float]
    targets: list[float]
    completeness_residual: float
    tolerance: float = FRAME_TOL

    @property
    def deviations(self) -> list[float]:
        return [abs(f - g) for f, g in zip(self.frame_potentials, self.targets)]

    @property
    def max_deviation(self) -> float:
        return max(self.deviations)

    @property
    def failed_orders(self) -> list[int]:
        return [s for s, dev in enumerate(self.deviations, 1) if dev > self.tolerance]

    @property
    def below_welch(self) -> list[int]:
        """Orders whose frame potential sits below the Welch-type minimum."""
        return [
            s
            for s, (f, g) in enumerate(zip(self.frame_potentials, self.targets), 1)
            if f < g - 1e-10
        ]

    @property
    def completeness_ok(self) -> bool:
        return self.completeness_residual <= COMPLETENESS_TOL

    @property
    def passed(self) -> bool:
        return not self.failed_orders and self.completeness_ok

    def summary(self) -> str:
        if self.passed:
            return f"pass: {self.strength}-design, max deviation {self.max_deviation:.3e}"
        reasons = [f"frame potential s={s}" for s in self.failed_orders]
        if not self.completeness_ok:
            reasons.append(f"completeness residual {self.completeness_residual:.3e}")
        return "fail: " + ", ".join(reasons)


def dimension_factor(d: int, t: int) -> float:
    """D_d^(t) = 1 / C(d+t-1, t), the inverse dimension of the symmetric subspace."""
    if d < 2 or t < 1:
        raise ValueError(f"need d >= 2 and t >= 1, got d={d}, t={t}")
    if d + t > 64:
        raise ValueError(f"d + t = {d + t} exceeds the supported limit of 64")
    return 1.0 / math.comb(d + t - 1, t)


def _overlaps(design: QuantumDesign) -> np.ndarray:
    g = design.vectors.conj() @ design.vectors.T
    return np.abs(g) ** 2


def frame_potential(design: QuantumDesign, s: int) -> float:
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    return float(np.mean(_overlaps(design) ** s))


def validate_design(design: QuantumDesign, strength: int | None = None) -> ValidationReport:
    """Certify ``design`` as a t-design for t = ``strength`` (default: declared)."""
    t = design.strength if strength is None else strength
    ov = _overlaps(design)
    fp = [float(np.mean(ov**s)) for s in range(1, t + 1)]
    targets = [1.0 / math.comb(design.dim + s - 1, s) for s in range(1, t + 1)]
    full = DesignPovm(design.vectors, design.dim / design.size)
    return ValidationReport(t, fp, targets, full.completeness_residual())


def bloch_to_spinor(n) -> np.ndarray:
    """State vector whose density matrix is (I + n.sigma)/2."""
    x, y, z = np.asarray(n, dtype=np.float64) / np.linalg.norm(n)
    theta = math.acos(max(-1.0, min(1.0, z)))
    phi = math.atan2(y, x)
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def _cyclic(points):
    out = []
    for p in points:
        for k in range(3):
            out.append(tuple(np.roll(p, k)))
    return out


def _signed(base):
    """All sign choices on the nonzero entries of ``base``."""
    nz = [i for i, x in enumerate(base) if x != 0]
    out = []
    for signs in itertools.product((1, -1), repeat=len(nz)):
        p = list(base)
        for i, sg in zip(nz, signs):
            p[i] = sg * p[i]
        out.append(tuple(p))
    return out


def builtin_bloch_vertices(name: str) -> np.ndarray:
    """Unit Bloch vectors of the polyhedron ``name``."""
    if name == "octahedron":
        # z+, z-, x+, x-, y+, y-: consecutive pairs are antipodal
        return np.array([[0, 0, 1], [0, 0, -1], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]], float)
    if name == "icosahedron":
        pts = _cyclic(_signed((0.0, 1.0, GOLDEN)))
    elif name == "icosidodecahedron":
        pts = _cyclic(_signed((0.0, 0.0, GOLDEN)))
        pts += _cyclic(_signed((0.5, GOLDEN / 2, GOLDEN**2 / 2)))
    else:
        raise ValueError(f"unknown built-in design {name!r}; choose from {sorted(BUILTIN_STRENGTH)}")
    pts = np.array(sorted(set(pts), reverse=True))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def builtin_design(name: str) -> QuantumDesign:
    if name not in BUILTIN_STRENGTH:
        raise ValueError(f"unknown built-in design {name!r}; choose from {sorted(BUILTIN_STRENGTH)}")
    vectors = np.array([bloch_to_spinor(n) for n in builtin_bloch_vertices(name)])
    return QuantumDesign(vectors, BUILTIN_STRENGTH[name], name=name)


def default_orientations(name: str) -> tuple[np.ndarray, np.ndarray]:
    """The two Bloch directions whose coherence is tracked in the sweeps.

    octahedron: a vertex axis and the bisector of two neighbouring axes.
    icosahedron: the axis through two opposite vertices, and the direction
    orthogonal to it in the plane of one inclined edge.
    icosidodecahedron: the axis through two opposite pentagon centres, and
    one of the ten vertices on the equator of that axis.
    """
    if name == "octahedron":
        return np.array([0.0, 0.0, 1.0]), np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    verts = builtin_bloch_vertices(name)
    if name == "icosahedron":
        z = verts[0]
        dots = verts @ z
        # nearest neighbours of the top vertex have the largest overlap below 1
        nbr = verts[np.argmax(np.where(dots < 1 - 1e-9, dots, -np.inf))]
        x = nbr - (nbr @ z) * z
        return z, x / np.linalg.norm(x)
    if name == "icosidodecahedron":
        # these coordinates rectify the (0, +-phi, +-1) icosahedron, whose
        # vertex directions are the pentagon centres
        z = np.array([0.0, GOLDEN, 1.0]) / math.sqrt(1 + GOLDEN**2)
        equator = verts[np.abs(verts @ z) < 1e-9]
        if len(equator) != 10:
            raise RuntimeError("icosidodecahedron equator should hold 10 vertices")
        return z, equator[0]
    raise ValueError(f"unknown built-in design {name!r}")


def assign_povms(design: QuantumDesign) -> list[DesignPovm]:
    """Rank-one POVMs of the design: one per partition group, or the full set."""
    d = design.dim
    if design.partition is None:
        return [DesignPovm(design.vectors, d / design.size)]
    povms = []
    for m, group in enumerate(design.partition):
        povm = DesignPovm(design.vectors[list(group)], d / len(group))
        res = povm.completeness_residual()
        if res > COMPLETENESS_TOL:
            raise PartitionError(
                f"group {m} {list(group)} is not a resolution of the identity (residual {res:.3e})",
                group=m,
            )
        povms.append(povm)
    return povms


def design_to_dict(design: QuantumDesign) -> dict:
    data = {
        "dim": design.dim,
        "strength": design.strength,
        "vectors": [[[a.real, a.imag] for a in v] for v in design.vectors.tolist()],
    }
    if design.partition is not None:
        data["partition"] = [list(g) for g in design.partition]
    return data


def design_from_dict(data) -> QuantumDesign:
    if not isinstance(data, dict):
        raise DesignSchemaError("design file must hold a JSON object")
    try:
        d = data["dim"]
        t = data["strength"]
        raw = data["vectors"]
    except KeyError as exc:
        raise DesignSchemaError(f"missing key {exc}") from exc
    if not isinstance(d, int) or not isinstance(t, int) or d < 1 or t < 1:
        raise DesignSchemaError("dim and strength must be positive integers")
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DesignSchemaError(f"vectors are not numeric: {exc}") from exc
    if arr.ndim != 3 or arr.shape[1:] != (d, 2) or arr.shape[0] < 1:
        raise DesignSchemaError(f"vectors must have shape (K, {d}, 2), got {arr.shape}")
    partition = data.get("partition")
    if partition is not None and not (
        isinstance(partition, list)
        and all(isinstance(g, list) and all(isinstance(i, int) for i in g) for g in partition)
    ):
        raise DesignSchemaError("partition must be a list of integer lists")
    return QuantumDesign(arr[..., 0] + 1j * arr[..., 1], t, partition)


def load_design(path, validate: bool = True) -> QuantumDesign:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DesignSchemaError(f"{path}: invalid JSON ({exc})") from exc
    design = design_from_dict(data)
    if validate:
        report = validate_design(design)
        if not report.passed:
            raise DesignValidationError(report)
    return design


def save_design(design: QuantumDesign, path) -> None:
    Path(path).write_text(json.dumps(design_to_dict(design)))
