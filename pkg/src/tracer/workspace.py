"""Traceability domain model: locations, n-ary links, type assignments.

A :class:`TraceabilityInformation` is an immutable snapshot; every mutation
returns a new value with the revision bumped, so snapshots can be shared
across threads while a single owner serializes writes.

The workspace persists as canonical UTF-8 JSON (sorted keys, arrays sorted
by id) and converts to a relational universe + instance for analysis: one
atom per typed location (ordered lexicographically by id), sig relations
populated through the extends hierarchy, field relations from typed links.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    AbstractSignature,
    ArityMismatch,
    MalformedDocument,
    SubsetSignature,
    TypeViolation,
    UnknownLocation,
    UnknownSignature,
    UnknownTarget,
    UntypedEndpoint,
)
from .forl import TypedSpec
from .relational import Instance, Universe

LOCATION_KINDS = ("text", "file", "xmi", "java")
PROVENANCES = ("manual", "DL", "RL")


@dataclass(frozen=True)
class TraceLocation:
    id: str
    kind: str  # text | file | xmi | java
    path: str = ""
    offset: int = 0  # text only
    length: int = 0  # text only
    fragment: str = ""  # xmi only: opaque XPointer
    ast_path: tuple[str, ...] = ()  # java only: construct names
    parent: str | None = None

    def __post_init__(self):
        if self.kind not in LOCATION_KINDS:
            raise MalformedDocument(f"location {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "text" and (self.offset < 0 or self.length < 0):
            raise MalformedDocument(
                f"location {self.id!r}: negative offset or length"
            )


@dataclass(frozen=True)
class TraceLink:
    id: str
    endpoints: tuple[str, ...]
    relation: str | None = None
    provenance: str = "manual"
    accepted: bool = True

    def __post_init__(self):
        if len(self.endpoints) < 2:
            raise MalformedDocument(
                f"link {self.id!r}: needs at least two endpoints"
            )
        if self.provenance not in PROVENANCES:
            raise MalformedDocument(
                f"link {self.id!r}: unknown provenance {self.provenance!r}"
            )


@dataclass(frozen=True)
class TraceabilityInformation:
    locations: dict[str, TraceLocation] = field(default_factory=dict)
    links: dict[str, TraceLink] = field(default_factory=dict)
    types: dict[str, str] = field(default_factory=dict)
    revision: int = 0

    # -- construction ---------------------------------------------------------

    def with_location(self, loc: TraceLocation) -> "TraceabilityInformation":
        if loc.parent is not None:
            if loc.parent not in self.locations:
                raise UnknownLocation(f"parent {loc.parent!r} of {loc.id!r}")
            _check_containment_acyclic(self.locations, loc)
        locations = {**self.locations, loc.id: loc}
        return replace(self, locations=locations, revision=self.revision + 1)

    def with_link(self, link: TraceLink) -> "TraceabilityInformation":
        for e in link.endpoints:
            if e not in self.locations:
                raise UnknownLocation(f"endpoint {e!r} of link {link.id!r}")
        links = {**self.links, link.id: link}
        return replace(self, links=links, revision=self.revision + 1)

    def without_link(self, link_id: str) -> "TraceabilityInformation":
        if link_id not in self.links:
            raise UnknownLocation(f"link {link_id!r}")
        links = {k: v for k, v in self.links.items() if k != link_id}
        return replace(self, links=links, revision=self.revision + 1)

    def fresh_link_id(self) -> str:
        n = len(self.links)
        while f"l{n}" in self.links:
            n += 1
        return f"l{n}"


def _check_containment_acyclic(locations: dict[str, TraceLocation],
                               newest: TraceLocation) -> None:
    seen = {newest.id}
    cur = newest.parent
    while cur is not None:
        if cur in seen:
            raise MalformedDocument(
                f"containment cycle through location {newest.id!r}"
            )
        seen.add(cur)
        cur = locations[cur].parent if cur in locations else None


# ---------------------------------------------------------------------------
# Typing operations
# ---------------------------------------------------------------------------

def assign_type(info: TraceabilityInformation, loc_id: str, sig_name: str,
                spec: TypedSpec) -> TraceabilityInformation:
    """Annotate a location with a signature; reassignment replaces."""
    if loc_id not in info.locations:
        raise UnknownLocation(loc_id)
    if sig_name not in spec.sigs:
        raise UnknownSignature(sig_name)
    sig = spec.sigs[sig_name]
    if sig.kind == "subset":
        raise SubsetSignature(
            f"{sig_name!r} is a subset signature and cannot be assigned directly"
        )
    if sig.abstract:
        raise AbstractSignature(
            f"{sig_name!r} is abstract and cannot be instantiated directly"
        )
    types = {**info.types, loc_id: sig_name}
    return replace(info, types=types, revision=info.revision + 1)


def approximate_link_type(info: TraceabilityInformation, link: TraceLink,
                          spec: TypedSpec) -> list[str]:
    """Candidate field names for an untyped link, in declaration order.

    A field matches when its arity equals the link's and each column type
    is a supertype (in the sig hierarchy) of the respective endpoint type.
    """
    endpoint_sigs = []
    for e in link.endpoints:
        if e not in info.types:
            raise UntypedEndpoint(f"endpoint {e!r} of link {link.id!r} is untyped")
        endpoint_sigs.append(info.types[e])
    out = []
    for fname in spec.field_order:
        cols = spec.fields[fname].cols
        if len(cols) != len(endpoint_sigs):
            continue
        if all(t in spec.sigs[c].prims for t, c in zip(endpoint_sigs, cols)):
            out.append(fname)
    return out


def to_relational(info: TraceabilityInformation, spec: TypedSpec) -> Instance:
    """Build the relational instance for the current snapshot."""
    for loc_id, sig_name in info.types.items():
        if loc_id not in info.locations:
            raise UnknownLocation(loc_id)
        if sig_name not in spec.sigs:
            raise UnknownSignature(sig_name)
    universe = Universe(tuple(sorted(info.types)))
    relations: dict[str, frozenset] = {}
    for sname in spec.sig_order:
        sig = spec.sigs[sname]
        if sig.kind == "subset":
            relations[sname] = frozenset()
        else:
            relations[sname] = frozenset(
                (a,) for a, t in info.types.items() if t in sig.prims
            )
    by_field: dict[str, set[tuple[str, ...]]] = {f: set() for f in spec.field_order}
    for link in info.links.values():
        if link.relation is None:
            continue
        if link.relation not in spec.fields:
            raise UnknownTarget(
                f"link {link.id!r} has unknown relation {link.relation!r}"
            )
        cols = spec.fields[link.relation].cols
        if len(link.endpoints) != len(cols):
            raise ArityMismatch(
                f"link {link.id!r} has {len(link.endpoints)} endpoints, field "
                f"{link.relation!r} expects {len(cols)}"
            )
        for e in link.endpoints:
            if e not in info.types:
                raise UntypedEndpoint(
                    f"endpoint {e!r} of typed link {link.id!r} is untyped"
                )
        by_field[link.relation].add(tuple(link.endpoints))
    for fname, tuples in by_field.items():
        relations[fname] = frozenset(tuples)
    return Instance(universe, relations)


def add_typed_link(info: TraceabilityInformation, relation: str,
                   endpoints: tuple[str, ...], spec: TypedSpec,
                   provenance: str = "manual",
                   accepted: bool = True) -> tuple[TraceabilityInformation, bool]:
    """Materialize a trace-relation; the accept-trace workhorse.

    Returns ``(snapshot, added)`` — a duplicate is an idempotent no-op with
    ``added`` false and no revision bump.
    """
    if relation not in spec.fields:
        raise UnknownTarget(f"{relation!r} is not a declared field")
    cols = spec.fields[relation].cols
    if len(endpoints) != len(cols):
        raise TypeViolation(
            f"{relation!r} expects {len(cols)} endpoints, got {len(endpoints)}"
        )
    for e, c in zip(endpoints, cols):
        if e not in info.locations:
            raise UnknownLocation(e)
        if e not in info.types:
            raise TypeViolation(f"endpoint {e!r} is untyped")
        if info.types[e] not in spec.sigs[c].prims:
            raise TypeViolation(
                f"endpoint {e!r} of type {info.types[e]!r} does not conform "
                f"to column type {c!r} of {relation!r}"
            )
    for link in info.links.values():
        if link.relation == relation and link.endpoints == tuple(endpoints):
            return info, False
    link = TraceLink(id=info.fresh_link_id(), endpoints=tuple(endpoints),
                     relation=relation, provenance=provenance, accepted=accepted)
    return info.with_link(link), True


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save(info: TraceabilityInformation) -> bytes:
    doc = {
        "version": 1,
        "revision": info.revision,
        "locations": [
            _location_json(info.locations[i]) for i in sorted(info.locations)
        ],
        "links": [_link_json(info.links[i]) for i in sorted(info.links)],
        "types": {k: info.types[k] for k in sorted(info.types)},
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _location_json(loc: TraceLocation) -> dict:
    out: dict = {"id": loc.id, "kind": loc.kind}
    if loc.kind == "text":
        out.update(path=loc.path, offset=loc.offset, length=loc.length)
    elif loc.kind == "file":
        out.update(path=loc.path)
    elif loc.kind == "xmi":
        out.update(path=loc.path, fragment=loc.fragment)
    elif loc.kind == "java":
        out.update(path=loc.path, astPath=list(loc.ast_path))
    if loc.parent is not None:
        out["parent"] = loc.parent
    return out


def _link_json(link: TraceLink) -> dict:
    out: dict = {"id": link.id, "endpoints": list(link.endpoints)}
    if link.relation is not None:
        out["relation"] = link.relation
    if link.provenance != "manual":
        out["provenance"] = link.provenance
    if not link.accepted:
        out["accepted"] = False
    return out


def load(data: bytes | str) -> TraceabilityInformation:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedDocument(f"not UTF-8: {e}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"line {e.lineno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("/: document must be an object")
    if doc.get("version") != 1:
        raise MalformedDocument("/version: expected 1")

    locations: dict[str, TraceLocation] = {}
    for i, raw in enumerate(_expect_list(doc, "locations")):
        loc = _location_from_json(raw, f"/locations/{i}")
        if loc.id in locations:
            raise MalformedDocument(f"/locations/{i}: duplicate id {loc.id!r}")
        locations[loc.id] = loc
    for loc in locations.values():
        if loc.parent is not None:
            if loc.parent not in locations:
                raise MalformedDocument(
                    f"/locations: parent {loc.parent!r} of {loc.id!r} does not "
                    "resolve to a location (links cannot contain elements)"
                )
            _check_containment_acyclic(locations, loc)

    links: dict[str, TraceLink] = {}
    for i, raw in enumerate(_expect_list(doc, "links")):
        link = _link_from_json(raw, f"/links/{i}")
        if link.id in links or link.id in locations:
            raise MalformedDocument(f"/links/{i}: duplicate id {link.id!r}")
        for e in link.endpoints:
            if e not in locations:
                raise MalformedDocument(
                    f"/links/{i}: endpoint {e!r} does not resolve"
                )
        links[link.id] = link

    types_raw = doc.get("types", {})
    if not isinstance(types_raw, dict):
        raise MalformedDocument("/types: expected an object")
    for k, v in types_raw.items():
        if k not in locations:
            raise MalformedDocument(f"/types/{k}: no such location")
        if not isinstance(v, str):
            raise MalformedDocument(f"/types/{k}: signature name must be a string")

    revision = doc.get("revision", 0)
    if not isinstance(revision, int) or revision < 0:
        raise MalformedDocument("/revision: expected a non-negative integer")
    return TraceabilityInformation(
        locations=locations, links=links, types=dict(types_raw), revision=revision
    )


def _expect_list(doc: dict, key: str) -> list:
    v = doc.get(key, [])
    if not isinstance(v, list):
        raise MalformedDocument(f"/{key}: expected an array")
    return v


def _location_from_json(raw, where: str) -> TraceLocation:
    if not isinstance(raw, dict) or "id" not in raw or "kind" not in raw:
        raise MalformedDocument(f"{where}: location needs 'id' and 'kind'")
    try:
        return TraceLocation(
            id=str(raw["id"]),
            kind=str(raw["kind"]),
            path=str(raw.get("path", "")),
            offset=int(raw.get("offset", 0)),
            length=int(raw.get("length", 0)),
            fragment=str(raw.get("fragment", "")),
            ast_path=tuple(raw.get("astPath", [])),
            parent=raw.get("parent"),
        )
    except (TypeError, ValueError) as e:
        raise MalformedDocument(f"{where}: {e}") from None


def _link_from_json(raw, where: str) -> TraceLink:
    if not isinstance(raw, dict) or "id" not in raw or "endpoints" not in raw:
        raise MalformedDocument(f"{where}: link needs 'id' and 'endpoints'")
    endpoints = raw["endpoints"]
    if not isinstance(endpoints, list) or len(endpoints) < 2:
        raise MalformedDocument(f"{where}: endpoints must list at least two ids")
    try:
        return TraceLink(
            id=str(raw["id"]),
            endpoints=tuple(str(e) for e in endpoints),
            relation=raw.get("relation"),
            provenance=raw.get("provenance", "manual"),
            accepted=bool(raw.get("accepted", True)),
        )
    except MalformedDocument:
        raise
    except (TypeError, ValueError) as e:
        raise MalformedDocument(f"{where}: {e}") from None


def load_path(path: str | Path) -> TraceabilityInformation:
    return load(Path(path).read_bytes())


def save_path(info: TraceabilityInformation, path: str | Path) -> None:
    Path(path).write_bytes(save(info))


# ---------------------------------------------------------------------------
# Broken-location detection
# ---------------------------------------------------------------------------

def flag_broken(info: TraceabilityInformation,
                root: str | Path | None) -> frozenset[str]:
    """Ids of locations whose referenced documents do not resolve.

    Broken locations are retained (discovery and repair consume the stale
    records); with no workspace root nothing is resolvable and nothing is
    flagged.
    """
    if root is None:
        return frozenset()
    root = Path(root)
    broken: set[str] = set()
    for loc in info.locations.values():
        if loc.kind not in ("text", "file") or not loc.path:
            continue
        target = root / loc.path
        if not target.is_file():
            broken.add(loc.id)
            continue
        if loc.kind == "text":
            try:
                text = target.read_text("utf-8")
            except (OSError, UnicodeDecodeError):
                broken.add(loc.id)
                continue
            if loc.offset + loc.length > len(text):
                broken.add(loc.id)
    return frozenset(broken)
