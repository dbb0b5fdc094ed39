"""The in-memory model: id-bearing objects, bidirectional links, and the
three-map registry that governs object identity and lifecycle.

Objects live in one of three maps.  ``model_objects`` holds fully
initialized objects, ``frames`` holds context-only stand-ins created because
some command referenced their id before (or without) a creating command,
and ``parsed_objects`` temporarily shadows both during a parse pass so that
directly edited instances are reused instead of duplicated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .events import CesError


class SchemaError(CesError):
    pass


class TypeConflictError(CesError):
    pass


class UnknownObjectError(CesError):
    pass


@dataclass
class ModelObject:
    """An id-bearing node: attribute map, to-one links, and to-many link sets.

    Links hold target ids, never object references; empty values are
    canonicalized away (no empty-string attributes, no empty link entries).
    """

    object_type: str
    id: str
    attributes: dict[str, str] = field(default_factory=dict)
    to_one: dict[str, str] = field(default_factory=dict)
    to_many: dict[str, set[str]] = field(default_factory=dict)


@dataclass(frozen=True)
class Association:
    """One association: a forward end on the source type, a reverse end on
    the target type, each either to-one or to-many."""

    source_type: str
    forward: str
    forward_many: bool
    target_type: str
    reverse: str
    reverse_many: bool


@dataclass(frozen=True)
class LinkEnd:
    """A link name as seen from one side of an association."""

    owner_type: str
    name: str
    many: bool
    other_type: str
    other_name: str
    other_many: bool


class AssociationSchema:
    """Declares every link name of a metamodel exactly once."""

    def __init__(self, associations: Iterable[Association]):
        self.associations = tuple(associations)
        self._ends: dict[str, LinkEnd] = {}
        for a in self.associations:
            for end in (
                LinkEnd(a.source_type, a.forward, a.forward_many, a.target_type, a.reverse, a.reverse_many),
                LinkEnd(a.target_type, a.reverse, a.reverse_many, a.source_type, a.forward, a.forward_many),
            ):
                if end.name in self._ends:
                    raise SchemaError(f"link name {end.name!r} declared twice")
                self._ends[end.name] = end

    def end(self, link: str) -> LinkEnd:
        try:
            return self._ends[link]
        except KeyError:
            raise SchemaError(f"unknown link name {link!r}") from None

    def end_for(self, object_type: str, link: str) -> LinkEnd:
        end = self.end(link)
        if end.owner_type != object_type:
            raise SchemaError(
                f"link {link!r} belongs to {end.owner_type}, not {object_type}"
            )
        return end


class ObjectRegistry:
    """Three id-keyed maps plus a dirty set fed by every mutation.

    All attribute and link edits go through the registry so that both link
    ends stay consistent and changed objects are tracked for incremental
    parsing.
    """

    def __init__(self, schema: AssociationSchema):
        self.schema = schema
        self.model_objects: dict[str, ModelObject] = {}
        self.frames: dict[str, ModelObject] = {}
        self.parsed_objects: dict[str, ModelObject] = {}
        self._changed: dict[str, ModelObject] = {}

    # -- lookup and lifecycle -------------------------------------------------

    def find(self, id: str) -> ModelObject | None:
        for table in (self.parsed_objects, self.model_objects, self.frames):
            obj = table.get(id)
            if obj is not None:
                return obj
        return None

    def _checked(self, obj: ModelObject, object_type: str) -> ModelObject:
        if obj.object_type != object_type:
            raise TypeConflictError(
                f"id {obj.id!r} is a {obj.object_type}, requested {object_type}"
            )
        return obj

    def get_object_frame(self, object_type: str, id: str) -> ModelObject:
        """Fetch the object for a context reference, creating a frame on miss.

        Lookup order is parsed objects, model objects, frames.  Never
        promotes; a fresh object lands in ``frames``.
        """
        if not id:
            raise UnknownObjectError("object id must be non-empty")
        obj = self.find(id)
        if obj is not None:
            return self._checked(obj, object_type)
        obj = ModelObject(object_type, id)
        self.frames[id] = obj
        return obj

    def get_or_create(self, object_type: str, id: str) -> ModelObject:
        """Fetch or create the object as a full model object (promoting a
        frame or a parsed instance if one exists)."""
        if not id:
            raise UnknownObjectError("object id must be non-empty")
        obj = self.parsed_objects.get(id)
        if obj is not None:
            self._checked(obj, object_type)
            self.frames.pop(id, None)
            self.model_objects[id] = obj
            return obj
        obj = self.model_objects.get(id)
        if obj is not None:
            return self._checked(obj, object_type)
        obj = self.get_object_frame(object_type, id)
        self.frames.pop(id, None)
        self.model_objects[id] = obj
        return obj

    def remove_model_object(self, id: str) -> ModelObject | None:
        """Demote a model object to a frame; it may still serve as context.

        Returns whatever the frames map now holds for the id, or None if the
        id was never known.
        """
        obj = self.model_objects.pop(id, None)
        if obj is not None:
            self.frames[id] = obj
        return self.frames.get(id)

    def register_parsed(self, obj: ModelObject) -> None:
        self.parsed_objects[obj.id] = obj

    # -- change tracking ------------------------------------------------------

    @property
    def changed_ids(self) -> set[str]:
        return set(self._changed)

    def changed_objects(self) -> list[ModelObject]:
        return list(self._changed.values())

    def clear_changes(self) -> None:
        self._changed.clear()

    def _mark(self, obj: ModelObject) -> None:
        self._changed[obj.id] = obj

    # -- attribute and link mutation -------------------------------------------

    def set_attribute(self, obj: ModelObject, name: str, value: str) -> None:
        """Set an attribute; an empty value removes it (absent and empty are
        one canonical state)."""
        if value:
            if obj.attributes.get(name) != value:
                obj.attributes[name] = value
                self._mark(obj)
        elif name in obj.attributes:
            del obj.attributes[name]
            self._mark(obj)

    def _resolve(self, target: ModelObject | str | None, expected_type: str) -> ModelObject | None:
        if target is None:
            return None
        if isinstance(target, str):
            found = self.find(target)
            if found is None:
                raise UnknownObjectError(f"unknown object id {target!r}")
            target = found
        return self._checked(target, expected_type)

    def _drop_reverse(self, holder: ModelObject, end: LinkEnd, id: str) -> None:
        if end.other_many:
            members = holder.to_many.get(end.other_name)
            if members is not None:
                members.discard(id)
                if not members:
                    del holder.to_many[end.other_name]
        elif holder.to_one.get(end.other_name) == id:
            del holder.to_one[end.other_name]

    def set_link(self, obj: ModelObject, link: str, target: ModelObject | str | None) -> None:
        """Point a to-one link at ``target`` (object, id, or None to clear),
        keeping the reverse end consistent.  Reassignment detaches the old
        target first."""
        end = self.schema.end_for(obj.object_type, link)
        if end.many:
            raise SchemaError(f"link {link!r} is to-many; use add_to_many")
        target_obj = self._resolve(target, end.other_type)
        old_id = obj.to_one.get(link)
        new_id = target_obj.id if target_obj is not None else None
        if old_id == new_id:
            return
        if old_id is not None:
            old_obj = self.find(old_id)
            if old_obj is not None:
                self._drop_reverse(old_obj, end, obj.id)
                self._mark(old_obj)
            del obj.to_one[link]
        if target_obj is not None:
            obj.to_one[link] = target_obj.id
            if end.other_many:
                target_obj.to_many.setdefault(end.other_name, set()).add(obj.id)
            else:
                displaced_id = target_obj.to_one.get(end.other_name)
                if displaced_id is not None and displaced_id != obj.id:
                    displaced = self.find(displaced_id)
                    if displaced is not None:
                        displaced.to_one.pop(link, None)
                        self._mark(displaced)
                target_obj.to_one[end.other_name] = obj.id
            self._mark(target_obj)
        self._mark(obj)

    def unset_link(self, obj: ModelObject, link: str) -> None:
        self.set_link(obj, link, None)

    def add_to_many(self, obj: ModelObject, link: str, target: ModelObject | str) -> None:
        """Add ``target`` to a to-many link set.  If the reverse end is
        to-one this is the reverse view of a reassignment and delegates to
        :meth:`set_link`."""
        end = self.schema.end_for(obj.object_type, link)
        if not end.many:
            raise SchemaError(f"link {link!r} is to-one; use set_link")
        target_obj = self._resolve(target, end.other_type)
        if not end.other_many:
            self.set_link(target_obj, end.other_name, obj)
            return
        if target_obj.id in obj.to_many.get(link, ()):
            return
        obj.to_many.setdefault(link, set()).add(target_obj.id)
        target_obj.to_many.setdefault(end.other_name, set()).add(obj.id)
        self._mark(obj)
        self._mark(target_obj)

    def remove_from_many(self, obj: ModelObject, link: str, target: ModelObject | str) -> None:
        end = self.schema.end_for(obj.object_type, link)
        if not end.many:
            raise SchemaError(f"link {link!r} is to-one; use set_link")
        target_obj = self._resolve(target, end.other_type)
        if not end.other_many:
            if target_obj.to_one.get(end.other_name) == obj.id:
                self.set_link(target_obj, end.other_name, None)
            return
        if target_obj.id not in obj.to_many.get(link, ()):
            return
        self._drop_reverse(target_obj, end, obj.id)
        members = obj.to_many[link]
        members.discard(target_obj.id)
        if not members:
            del obj.to_many[link]
        self._mark(obj)
        self._mark(target_obj)

    # -- consistency audit -----------------------------------------------------

    def consistency_violations(self) -> list[str]:
        """Full graph scan: every link must be declared, typed correctly, and
        mirrored on its reverse end."""
        problems = []
        everything: dict[str, ModelObject] = {}
        for table in (self.frames, self.model_objects, self.parsed_objects):
            everything.update(table)
        for obj in everything.values():
            entries = [(k, (v,)) for k, v in obj.to_one.items()]
            entries += [(k, tuple(sorted(v))) for k, v in obj.to_many.items()]
            for link, targets in entries:
                try:
                    end = self.schema.end_for(obj.object_type, link)
                except SchemaError as exc:
                    problems.append(f"{obj.id}: {exc}")
                    continue
                if end.many != (link in obj.to_many):
                    problems.append(f"{obj.id}: link {link} stored with wrong cardinality")
                for target_id in targets:
                    other = everything.get(target_id)
                    if other is None:
                        problems.append(f"{obj.id}: link {link} targets unknown id {target_id!r}")
                        continue
                    if other.object_type != end.other_type:
                        problems.append(
                            f"{obj.id}: link {link} targets {other.object_type} {target_id!r}"
                        )
                        continue
                    if end.other_many:
                        back = obj.id in other.to_many.get(end.other_name, ())
                    else:
                        back = other.to_one.get(end.other_name) == obj.id
                    if not back:
                        problems.append(
                            f"{obj.id}: link {link}->{target_id} missing reverse {end.other_name}"
                        )
        return problems


# ---------------------------------------------------------------------------
# Model comparison
# ---------------------------------------------------------------------------


@dataclass
class ModelDiff:
    """Differences decide equality; warnings report asymmetric leftover
    frames (creation commands that never arrived)."""

    differences: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _attr_state(obj: ModelObject) -> dict[str, str]:
    return {k: v for k, v in obj.attributes.items() if v}


def _link_state(obj: ModelObject) -> dict[str, object]:
    state: dict[str, object] = {k: v for k, v in obj.to_one.items() if v}
    state.update({k: frozenset(v) for k, v in obj.to_many.items() if v})
    return state


def _render(value: object) -> str:
    if isinstance(value, frozenset):
        return "{" + ",".join(sorted(value)) + "}"
    return repr(value) if value is None else str(value)


def model_diff(a: ObjectRegistry, b: ObjectRegistry) -> ModelDiff:
    """Compare the model objects of two registries; frames are excluded from
    equality but reported as warnings when asymmetric."""
    diff = ModelDiff()
    ids_a, ids_b = set(a.model_objects), set(b.model_objects)
    for id in sorted(ids_a - ids_b):
        diff.differences.append(f"only in a: {a.model_objects[id].object_type} {id}")
    for id in sorted(ids_b - ids_a):
        diff.differences.append(f"only in b: {b.model_objects[id].object_type} {id}")
    for id in sorted(ids_a & ids_b):
        oa, ob = a.model_objects[id], b.model_objects[id]
        if oa.object_type != ob.object_type:
            diff.differences.append(
                f"{id}: type differs: {oa.object_type} != {ob.object_type}"
            )
            continue
        attrs_a, attrs_b = _attr_state(oa), _attr_state(ob)
        for key in sorted(set(attrs_a) | set(attrs_b)):
            if attrs_a.get(key) != attrs_b.get(key):
                diff.differences.append(
                    f"{id}: attribute {key!r} differs: "
                    f"{attrs_a.get(key, '')!r} != {attrs_b.get(key, '')!r}"
                )
        links_a, links_b = _link_state(oa), _link_state(ob)
        for key in sorted(set(links_a) | set(links_b)):
            if links_a.get(key) != links_b.get(key):
                diff.differences.append(
                    f"{id}: link {key} differs: "
                    f"{_render(links_a.get(key))} != {_render(links_b.get(key))}"
                )
    for id in sorted(set(a.frames) - set(b.frames)):
        diff.warnings.append(f"frame only in a: {id}")
    for id in sorted(set(b.frames) - set(a.frames)):
        diff.warnings.append(f"frame only in b: {id}")
    return diff


def model_equal(a: ObjectRegistry, b: ObjectRegistry) -> bool:
    return not model_diff(a, b).differences


def dump_model(registry: ObjectRegistry, include_frames: bool = False) -> str:
    """Deterministic one-line-per-object dump, used for golden-file tests.

    Format: ``TYPE id {attr=val,...} links{name->id,name->{ids}}`` with ids
    and link names ascending.
    """
    lines = []
    tables = [registry.model_objects]
    if include_frames:
        tables.append(registry.frames)
    for table, suffix in zip(tables, ("", " (frame)")):
        for id in sorted(table):
            obj = table[id]
            attrs = ",".join(f"{k}={v}" for k, v in sorted(_attr_state(obj).items()))
            links = ",".join(
                f"{k}->{_render(v)}" for k, v in sorted(_link_state(obj).items())
            )
            lines.append(f"{obj.object_type} {id} {{{attrs}}} links{{{links}}}{suffix}")
    return "\n".join(lines) + ("\n" if lines else "")
