"""Scenario documents: parsing, defaulting and validation.

A scenario is a JSON object. Exactly one of ``process`` (finite
worthwhile-to-move engine) or ``lsp`` (Euclidean proximal solver) selects the
engine. Unknown keys are errors, reported with the path of the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .behavior import AgentProfile, CostModel, satisficing_theta
from .dynamics import ProcessConfig
from .lsp import LspConfig
from .space import (
    Ball,
    Box,
    ConstraintSet,
    FiniteMetricSpace,
    GainFunction,
    Halfspace,
    Intersection,
    builtin_gain,
    validate_metric,
)


class ScenarioError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


TOP_KEYS = {"name", "seed", "space", "gain", "profile", "cost", "process", "lsp", "verify", "ekeland",
            "compare", "output"}
VERIFY_KEYS = {"budget", "shrinking", "time", "residual"}


@dataclass
class Scenario:
    name: str
    engine: str
    space: object
    gain: GainFunction
    profile: Optional[AgentProfile] = None
    cost: Optional[CostModel] = None
    process: Optional[ProcessConfig] = None
    x0: object = 0
    lsp: Optional[LspConfig] = None
    constraint: Optional[ConstraintSet] = None
    verify: dict = field(default_factory=dict)
    ekeland: dict = field(default_factory=dict)
    compare: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def theta(self) -> float:
        if self.engine == "lsp":
            return self.lsp.theta
        opp = self.cost.opportunity
        return satisficing_theta(self.profile, self.gain(self.x0) if opp else None, opp)


class _Errors(list):
    def unknown(self, doc, allowed, path):
        if not isinstance(doc, dict):
            self.append(f"{path}: expected an object")
            return False
        for k in sorted(set(doc) - set(allowed)):
            self.append(f"{path}.{k}: unknown key")
        return True


def _build(cls, doc, path, errs, skip=()):
    names = {f.name for f in fields(cls)} - set(skip)
    if not errs.unknown(doc, names, path):
        return None
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        errs.append(f"{path}: {exc}")
        return None


def _constraint(doc, path, errs) -> Optional[ConstraintSet]:
    if not isinstance(doc, dict) or len(doc) != 1:
        errs.append(f"{path}: expected exactly one of box, ball, halfspace, intersection")
        return None
    (kind, body), = doc.items()
    try:
        if kind == "box":
            errs.unknown(body, {"lower", "upper"}, f"{path}.box")
            return Box(body["lower"], body["upper"])
        if kind == "ball":
            errs.unknown(body, {"center", "radius"}, f"{path}.ball")
            return Ball(body["center"], body["radius"])
        if kind == "halfspace":
            errs.unknown(body, {"normal", "offset"}, f"{path}.halfspace")
            return Halfspace(body["normal"], body["offset"])
        if kind == "intersection":
            parts = [_constraint(d, f"{path}.intersection[{i}]", errs) for i, d in enumerate(body)]
            return Intersection(tuple(parts)) if all(parts) else None
    except KeyError as exc:
        errs.append(f"{path}.{kind}: missing {exc}")
        return None
    except ValueError as exc:
        errs.append(f"{path}.{kind}: {exc}")
        return None
    errs.append(f"{path}: unknown constraint kind {kind!r}")
    return None


def parse_scenario(doc) -> Scenario:
    """Validate a scenario document (dict or JSON text) and fill defaults."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    errs = _Errors()
    if not errs.unknown(doc, TOP_KEYS, "$"):
        raise ScenarioError(errs)
    has_wtm, has_lsp = "process" in doc, "lsp" in doc
    if has_wtm and has_lsp:
        errs.append("$: both 'process' and 'lsp' given; select exactly one engine")
    elif not (has_wtm or has_lsp):
        errs.append("$: one of 'process' or 'lsp' is required")
    if "space" not in doc:
        errs.append("$.space: required")
    if errs:
        raise ScenarioError(errs)

    sc = {"name": doc.get("name", "scenario"), "seed": int(doc.get("seed", 0))}
    sdoc = doc["space"]
    gdoc = doc.get("gain")

    if has_wtm:
        sc["engine"] = "wtm"
        space = gain = None
        if errs.unknown(sdoc, {"points", "dist", "g"}, "$.space"):
            try:
                space = FiniteMetricSpace(sdoc["dist"], sdoc.get("points"))
                report = validate_metric(space)
                for line in report.lines():
                    errs.append(f"$.space.dist: {line}")
            except KeyError:
                errs.append("$.space.dist: required")
            except ValueError as exc:
                errs.append(f"$.space.dist: {exc}")
        table = sdoc.get("g") if isinstance(sdoc, dict) else None
        if gdoc is not None:
            if errs.unknown(gdoc, {"table", "gross", "maintenance"}, "$.gain"):
                table = gdoc.get("table")
                if "gross" in gdoc:
                    table = None
                    try:
                        gain = GainFunction.from_decomposition(gdoc["gross"], gdoc["maintenance"])
                    except (KeyError, ValueError) as exc:
                        errs.append(f"$.gain: {exc}")
        if gain is None and table is not None:
            try:
                gain = GainFunction.from_table(table)
            except ValueError as exc:
                errs.append(f"$.gain: {exc}")
        if gain is None and not any(e.startswith("$.gain") for e in errs):
            errs.append("$.gain: a gain table is required (space.g or gain.table)")
        if space is not None and gain is not None and len(gain) != len(space):
            errs.append("$.gain: length does not match the number of points")
        sc["space"], sc["gain"] = space, gain

        sc["profile"] = _build(AgentProfile, doc.get("profile", {}), "$.profile", errs)
        cdoc = dict(doc.get("cost", {}))
        sc["cost"] = _build(CostModel, cdoc, "$.cost", errs)
        pdoc = dict(doc["process"])
        x0 = pdoc.pop("x0", 0)
        sc["process"] = _build(ProcessConfig, pdoc, "$.process", errs)
        if space is not None and not (isinstance(x0, int) and 0 <= x0 < len(space)):
            errs.append(f"$.process.x0: {x0!r} is not a state index")
        sc["x0"] = x0
        if sc["profile"] is not None and sc["cost"] is not None and gain is not None and not errs:
            try:
                opp = sc["cost"].opportunity
                satisficing_theta(sc["profile"], gain(x0) if opp else None, opp)
            except ValueError as exc:
                errs.append(f"$.profile: {exc}")
        edoc = doc.get("ekeland", {})
        if errs.unknown(edoc, {"theta", "eps", "x0"}, "$.ekeland"):
            sc["ekeland"] = edoc
        cmp = doc.get("compare", {})
        if errs.unknown(cmp, {"radius"}, "$.compare"):
            sc["compare"] = cmp
    else:
        sc["engine"] = "lsp"
        if errs.unknown(sdoc, {"euclidean"}, "$.space") and not isinstance(sdoc.get("euclidean"), int):
            errs.append("$.space.euclidean: dimension must be an integer")
        dim = sdoc.get("euclidean") if isinstance(sdoc, dict) else None
        if gdoc is None:
            errs.append("$.gain: required")
        elif errs.unknown(gdoc, {"builtin", "params", "upper"}, "$.gain"):
            try:
                gain = builtin_gain(gdoc["builtin"], **gdoc.get("params", {}))
                if "upper" in gdoc:
                    gain = GainFunction.smooth(gain.func, gain.grad, gdoc["upper"], gain.name)
                sc["gain"] = gain
            except KeyError:
                errs.append("$.gain.builtin: required")
            except (TypeError, ValueError) as exc:
                errs.append(f"$.gain: {exc}")
        sc["space"] = dim
        ldoc = dict(doc["lsp"])
        x0 = ldoc.pop("x0", None)
        cdoc = ldoc.pop("constraint", None)
        sc["lsp"] = _build(LspConfig, {"seed": sc["seed"], **ldoc}, "$.lsp", errs)
        if cdoc is None:
            errs.append("$.lsp.constraint: required")
        else:
            sc["constraint"] = _constraint(cdoc, "$.lsp.constraint", errs)
        if x0 is None or np.atleast_1d(x0).shape != (dim,):
            errs.append(f"$.lsp.x0: expected a point of dimension {dim}")
        else:
            sc["x0"] = np.atleast_1d(np.asarray(x0, dtype=float))
        if sc.get("constraint") is not None and sc["constraint"].dim != dim:
            errs.append("$.lsp.constraint: dimension differs from the space")
        for key in ("profile", "cost", "ekeland", "compare"):
            if key in doc:
                errs.append(f"$.{key}: not used by the lsp engine")

    vdoc = doc.get("verify", {})
    if errs.unknown(vdoc, VERIFY_KEYS, "$.verify"):
        sc["verify"] = {k: bool(vdoc.get(k, True)) for k in VERIFY_KEYS}
    odoc = doc.get("output", {})
    if errs.unknown(odoc, {"dir", "format"}, "$.output"):
        fmt = odoc.get("format", "csv")
        if fmt not in ("csv", "json"):
            errs.append("$.output.format: must be csv or json")
        sc["output"] = {"dir": odoc.get("dir", "out"), "format": fmt}
    if errs:
        raise ScenarioError(errs)
    return Scenario(**sc)


def load_scenario(path) -> Scenario:
    return parse_scenario(json.loads(Path(path).read_text()))
