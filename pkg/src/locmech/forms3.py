"""Exterior calculus on Euclidean 3-space over the coordinate basis.

Forms are stored as coefficient functions against the fixed ordered
bases 1; dx, dy, dz; dx^dy, dx^dz, dy^dz; dx^dy^dz.  The musical maps
and the Hodge star are pure coefficient moves (the star follows the
eight-row table below, exact up to sign flips); only the exterior
derivative touches analysis, by central finite differences.

Vector operators are deliberately not written as their textbook
formulas: grad = (d f)#, curl = (star d flat)#, div = star d star flat,
so the classical identities fall out of d and star rather than being
re-asserted.

    star 1          = dx^dy^dz        star dx^dy = dz
    star dx         = dy^dz           star dx^dz = -dy
    star dy         = -dx^dz          star dy^dz = dx
    star dz         = dx^dy           star dx^dy^dz = 1
"""

from dataclasses import dataclass

from .errors import ValidationError
from .exprlang import ScalarExpr, parse_expr

DEFAULT_FD_STEP = 1e-4

_AXES = ("x", "y", "z")
LABELS = {
    0: ("1",),
    1: ("dx", "dy", "dz"),
    2: ("dx^dy", "dx^dz", "dy^dz"),
    3: ("dx^dy^dz",),
}
_LABEL_TO_INDICES = {"1": ()}
for _deg in (1, 2, 3):
    for _lab in LABELS[_deg]:
        _LABEL_TO_INDICES[_lab] = tuple(
            _AXES.index(part[1]) for part in _lab.split("^")
        )
_INDICES_TO_LABEL = {v: k for k, v in _LABEL_TO_INDICES.items()}

HODGE_TABLE = {
    "1": ("dx^dy^dz", 1.0),
    "dx": ("dy^dz", 1.0),
    "dy": ("dx^dz", -1.0),
    "dz": ("dx^dy", 1.0),
    "dx^dy": ("dz", 1.0),
    "dx^dz": ("dy", -1.0),
    "dy^dz": ("dx", 1.0),
    "dx^dy^dz": ("1", 1.0),
}


def _zero(x, y, z):
    return 0.0


def _as_component(c):
    if isinstance(c, ScalarExpr):
        if set(c.variables) - {"x", "y", "z"}:
            raise ValidationError("form components use variables x, y, z")
        if c.variables != ("x", "y", "z"):
            c = parse_expr(c.to_source(), ("x", "y", "z"))
        return c.scalar_fn
    if isinstance(c, str):
        return parse_expr(c, ("x", "y", "z")).scalar_fn
    if isinstance(c, (int, float)):
        value = float(c)
        if value == 0.0:
            return _zero
        return lambda x, y, z: value
    if callable(c):
        return c
    raise ValidationError(f"cannot use {c!r} as a form component")


def _negate(fn):
    if fn is _zero:
        return fn
    return lambda x, y, z: -fn(x, y, z)


class FormField:
    """A differential form of fixed degree with coefficient functions."""

    def __init__(self, degree, components):
        if degree not in LABELS:
            raise ValidationError("degree must be 0, 1, 2, or 3")
        self.degree = degree
        comps = {}
        for label, c in components.items():
            if label not in LABELS[degree]:
                raise ValidationError(
                    f"label {label!r} is not in the degree-{degree} basis"
                )
            comps[label] = _as_component(c)
        self.components = comps

    def component(self, label):
        if label not in LABELS[self.degree]:
            raise ValidationError(
                f"label {label!r} is not in the degree-{self.degree} basis"
            )
        return self.components.get(label, _zero)

    def evaluate(self, p):
        x, y, z = p
        return {lab: self.component(lab)(x, y, z) for lab in LABELS[self.degree]}

    def __repr__(self):
        return f"FormField(degree={self.degree}, {sorted(self.components)})"


class VectorField3:
    def __init__(self, vx, vy, vz):
        self.vx = _as_component(vx)
        self.vy = _as_component(vy)
        self.vz = _as_component(vz)

    def evaluate(self, p):
        x, y, z = p
        return (self.vx(x, y, z), self.vy(x, y, z), self.vz(x, y, z))

    def __repr__(self):
        return "VectorField3(...)"


def basis_form(label, coefficient=1.0):
    for degree, labels in LABELS.items():
        if label in labels:
            return FormField(degree, {label: coefficient})
    raise ValidationError(f"unknown basis label {label!r}")


def flat(v):
    """Index lowering: (vx, vy, vz) -> vx dx + vy dy + vz dz."""
    return FormField(1, {"dx": v.vx, "dy": v.vy, "dz": v.vz})


def sharp(a):
    """Index raising of a one-form; the inverse of flat."""
    if a.degree != 1:
        raise ValidationError("sharp applies to one-forms")
    return VectorField3(a.component("dx"), a.component("dy"), a.component("dz"))


def hodge(a):
    """The star of the fixed table; an involution on every degree here."""
    out_degree = 3 - a.degree
    comps = {}
    for label, fn in a.components.items():
        target, sign = HODGE_TABLE[label]
        comps[target] = fn if sign > 0 else _negate(fn)
    return FormField(out_degree, comps)


def wedge(a, b):
    """Antisymmetrized product; degrees add (empty above 3)."""
    degree = a.degree + b.degree
    if degree > 3:
        raise ValidationError("wedge degree exceeds the dimension")
    terms = {}
    for la, fa in a.components.items():
        ia = _LABEL_TO_INDICES[la]
        for lb, fb in b.components.items():
            ib = _LABEL_TO_INDICES[lb]
            merged = ia + ib
            if len(set(merged)) != len(merged):
                continue
            sign = _sort_parity(merged)
            label = _INDICES_TO_LABEL[tuple(sorted(merged))]
            terms.setdefault(label, []).append((sign, fa, fb))
    comps = {}
    for label, parts in terms.items():
        def comp(x, y, z, _parts=tuple(parts)):
            total = 0.0
            for s, fa, fb in _parts:
                total += s * fa(x, y, z) * fb(x, y, z)
            return total
        comps[label] = comp
    return FormField(degree, comps)


def _sort_parity(indices):
    sign = 1.0
    items = list(indices)
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign


def _partial(fn, axis, h):
    def d(x, y, z):
        p = [x, y, z]
        p[axis] += h
        hi = fn(*p)
        p[axis] -= 2.0 * h
        lo = fn(*p)
        return (hi - lo) / (2.0 * h)
    return d


def ext_d(a, h=DEFAULT_FD_STEP):
    """Exterior derivative by central differences with step h."""
    if a.degree == 3:
        raise ValidationError("top-degree forms have no exterior derivative here")
    terms = {}
    for label, fn in a.components.items():
        idx = _LABEL_TO_INDICES[label]
        for axis in range(3):
            if axis in idx:
                continue
            merged = (axis,) + idx
            sign = _sort_parity(merged)
            target = _INDICES_TO_LABEL[tuple(sorted(merged))]
            terms.setdefault(target, []).append((sign, _partial(fn, axis, h)))
    comps = {}
    for label, parts in terms.items():
        def comp(x, y, z, _parts=tuple(parts)):
            total = 0.0
            for s, dfn in _parts:
                total += s * dfn(x, y, z)
            return total
        comps[label] = comp
    return FormField(a.degree + 1, comps)


def grad(f, h=DEFAULT_FD_STEP):
    """(df)# for a scalar (given as a 0-form, expression, or callable)."""
    if not isinstance(f, FormField):
        f = FormField(0, {"1": f})
    if f.degree != 0:
        raise ValidationError("grad applies to scalars")
    return sharp(ext_d(f, h))


def curl(v, h=DEFAULT_FD_STEP):
    """[star d (v flat)]#."""
    return sharp(hodge(ext_d(flat(v), h)))


def div(v, h=DEFAULT_FD_STEP):
    """star d star (v flat), returned as a plain scalar function."""
    out = hodge(ext_d(hodge(flat(v)), h))
    return out.component("1")


def star_table():
    """The fixed star action on basis labels, signs rendered inline."""
    return {
        label: (target if sign > 0 else f"-{target}")
        for label, (target, sign) in HODGE_TABLE.items()
    }
