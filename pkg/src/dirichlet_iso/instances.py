"""JSON instance files.

Layout (version ``dirichlet-iso/1``)::

    {
      "version": "dirichlet-iso/1",
      "forms": [
        {"labels": [...], "measure": [...],
         "conductances": [[x, y, value], ...],   # each unordered pair once
         "killing": [...]},
        ...                                      # one or two forms
      ],
      "isomorphism": {"s": [...], "tau": {"x0": "y3", ...}},   # optional
      "expected": {"h": [...], "j": {"x0": "y3", ...},          # optional
                   "phi": [...]}
    }

``s`` and ``h`` are indexed like the first form's labels, ``phi`` like the
second form's labels (one value per state). Floats are written with
Python's shortest round-trip representation, so parsing returns the exact
same doubles.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError, ValidationError
from .forms import DirichletForm, StateSpace
from .order_iso import OrderIsomorphism

VERSION = "dirichlet-iso/1"

__all__ = [
    "VERSION",
    "Instance",
    "parse",
    "serialize",
    "load",
    "dump",
    "generate",
    "form_to_dict",
    "form_from_dict",
]


@dataclass(frozen=True, eq=False)
class Instance:
    forms: tuple
    isomorphism: OrderIsomorphism = None
    expected: dict = None
    version: str = VERSION

    @property
    def form1(self):
        return self.forms[0]

    @property
    def form2(self):
        return self.forms[1] if len(self.forms) > 1 else self.forms[0]


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"expected a number, got {value!r}", path)
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError("number must be finite", path)
    return value


def _numbers(values, path, length=None):
    if not isinstance(values, list):
        raise SchemaError("expected a list of numbers", path)
    if length is not None and len(values) != length:
        raise SchemaError(f"expected {length} entries, got {len(values)}", path)
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(values)])


def _require(obj, key, path):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    if key not in obj:
        raise SchemaError(f"missing field {key!r}", path)
    return obj[key]


def form_from_dict(obj, path="form"):
    labels = _require(obj, "labels", path)
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise SchemaError("labels must be a list of strings", f"{path}.labels")
    n = len(labels)
    measure = _numbers(_require(obj, "measure", path), f"{path}.measure", n)
    killing = _numbers(obj.get("killing", [0.0] * n), f"{path}.killing", n)
    try:
        space = StateSpace(tuple(labels), measure)
    except ValidationError as exc:
        raise SchemaError(str(exc), path) from None
    triplets = _require(obj, "conductances", path)
    if not isinstance(triplets, list):
        raise SchemaError("expected a list of [x, y, value] triplets", f"{path}.conductances")
    c = np.zeros((n, n))
    for i, item in enumerate(triplets):
        where = f"{path}.conductances[{i}]"
        if not (isinstance(item, list) and len(item) == 3):
            raise SchemaError("expected [x, y, value]", where)
        x, y, value = item
        for lab in (x, y):
            if lab not in space.index:
                raise SchemaError(f"unknown label {lab!r}", where)
        a, b = space.index[x], space.index[y]
        if a == b:
            raise SchemaError(f"self-loop at {x!r}", where)
        if c[a, b] != 0:
            raise SchemaError(f"duplicate conductance for pair ({x!r}, {y!r})", where)
        value = _number(value, f"{where}[2]")
        if value == 0:
            continue
        c[a, b] = c[b, a] = value
    try:
        return DirichletForm(space, c, killing)
    except ValidationError as exc:
        raise SchemaError(str(exc), path) from None


def form_to_dict(form):
    c = form.conductances
    rows, cols = np.nonzero(np.triu(c, 1))
    labels = form.space.labels
    return {
        "labels": list(labels),
        "measure": [float(v) for v in form.measure],
        "conductances": [
            [labels[a], labels[b], float(c[a, b])] for a, b in zip(rows, cols)
        ],
        "killing": [float(v) for v in form.killing],
    }


def _label_map(obj, source, target, path):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object mapping source labels to target labels", path)
    mapping = np.full(source.n, -1, dtype=int)
    for key, value in obj.items():
        if key not in source.index:
            raise SchemaError(f"unknown source label {key!r}", path)
        if not isinstance(value, str) or value not in target.index:
            raise SchemaError(f"unknown target label {value!r}", f"{path}.{key}")
        mapping[source.index[key]] = target.index[value]
    if np.any(mapping < 0):
        missing = source.labels[int(np.flatnonzero(mapping < 0)[0])]
        raise SchemaError(f"no image given for {missing!r}", path)
    if np.unique(mapping).size != mapping.size:
        raise SchemaError("mapping is not injective", path)
    return mapping


def _label_dict(mapping, source, target):
    return {source.labels[x]: target.labels[y] for x, y in enumerate(mapping)}


def from_dict(obj):
    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object", "$")
    version = _require(obj, "version", "$")
    if version != VERSION:
        raise SchemaError(f"unsupported version {version!r}, expected {VERSION!r}", "$.version")
    raw_forms = _require(obj, "forms", "$")
    if not isinstance(raw_forms, list) or not 1 <= len(raw_forms) <= 2:
        raise SchemaError("expected one or two forms", "$.forms")
    forms = tuple(form_from_dict(f, f"$.forms[{i}]") for i, f in enumerate(raw_forms))
    src, dst = forms[0].space, forms[-1].space
    iso = None
    if obj.get("isomorphism") is not None:
        raw = obj["isomorphism"]
        if src.n != dst.n:
            raise SchemaError("forms have different sizes", "$.isomorphism")
        s = _numbers(_require(raw, "s", "$.isomorphism"), "$.isomorphism.s", src.n)
        tau = _label_map(_require(raw, "tau", "$.isomorphism"), src, dst, "$.isomorphism.tau")
        try:
            iso = OrderIsomorphism(src, dst, s, tau)
        except ValidationError as exc:
            raise SchemaError(str(exc), "$.isomorphism") from None
    expected = None
    if obj.get("expected") is not None:
        raw = obj["expected"]
        expected = {
            "h": _numbers(_require(raw, "h", "$.expected"), "$.expected.h", src.n),
            "j": _label_map(_require(raw, "j", "$.expected"), src, dst, "$.expected.j"),
            "phi": _numbers(_require(raw, "phi", "$.expected"), "$.expected.phi", dst.n),
        }
    return Instance(forms, iso, expected, version)


def to_dict(instance):
    src, dst = instance.form1.space, instance.form2.space
    out = {"version": instance.version, "forms": [form_to_dict(f) for f in instance.forms]}
    if instance.isomorphism is not None:
        U = instance.isomorphism
        out["isomorphism"] = {
            "s": [float(v) for v in U.s],
            "tau": _label_dict(U.tau, src, dst),
        }
    if instance.expected is not None:
        e = instance.expected
        out["expected"] = {
            "h": [float(v) for v in e["h"]],
            "j": _label_dict(np.asarray(e["j"]), src, dst),
            "phi": [float(v) for v in e["phi"]],
        }
    return out


def parse(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    return from_dict(obj)


def serialize(instance):
    return json.dumps(to_dict(instance), indent=2) + "\n"


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(instance, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(instance))


def generate(seed, n_states, n_components=1, with_killing=True, kind="triple"):
    """Deterministic random instance.

    ``kind`` is ``"form"`` (one form), ``"triple"`` (two forms, the order
    isomorphism synthesized from a random ``(h, j, phi)`` and that triple as
    ``expected``) or ``"iso"`` (two independent forms and a random, almost
    surely non-intertwining, order isomorphism).
    """
    from . import generate as gen
    from .factorization import synthesize

    rng = np.random.default_rng(seed)
    if kind == "form":
        return Instance((gen.random_form(rng, n_states, n_components, with_killing),))
    if kind == "triple":
        form1, h, j, phi = gen.random_triple(rng, n_states, n_components, with_killing)
        U, form2 = synthesize(form1, h, j, phi)
        from .invariants import irreducible_decomposition

        phi_values = np.asarray(phi)[irreducible_decomposition(form2).component_index]
        expected = {"h": h, "j": j.mapping, "phi": phi_values}
        return Instance((form1, form2), U, expected)
    if kind == "iso":
        form1 = gen.random_form(rng, n_states, n_components, with_killing, prefix="x")
        form2 = gen.random_form(rng, n_states, n_components, with_killing, prefix="y")
        return Instance((form1, form2), gen.random_iso(rng, form1.space, form2.space))
    raise ValueError(f"unknown instance kind {kind!r}")
