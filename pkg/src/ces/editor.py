"""The editor: command execution with overwrite resolution, the active
command store, tombstoning removal, generic link commands, the incremental
parse driver, and event import/export.

The store keeps at most one event per command id (per scope, see below);
overwriting makes that sufficient to reconstruct the model.  Editors
interact with each other only through the encoded event text.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, replace

from .events import (
    CesError,
    Clock,
    Event,
    OverwriteStrategy,
    decode,
    encode,
    equals_but_time,
    overwrites,
)
from .objects import AssociationSchema, ModelObject, ObjectRegistry


class UnknownCommandError(CesError):
    pass


class IdCollisionError(CesError):
    pass


class CommandError(CesError):
    pass


class LoadError(CesError):
    """One or more events failed during a load; the rest were processed."""

    def __init__(self, failures: list[str], applied: int):
        super().__init__("; ".join(failures))
        self.failures = failures
        self.applied = applied


class CommandHandler:
    """Run/remove/parse triple for one command type.

    ``run`` edits exactly the command's increment: the core object sharing
    the event id, that object's attributes named by the params, and the
    increment's links, never state owned by another increment.  ``remove``
    undoes what run created; ``parse`` recognizes the increment on a model
    object and rebuilds the event from it.
    """

    type_tag: str = ""
    # Store scope: commands in distinct scopes may share a core object id
    # while editing disjoint slices of it (e.g. doc content vs. doc leaf).
    store_scope: str = ""
    strategy_override: OverwriteStrategy | None = None

    def run(self, editor: "Editor", event: Event) -> str | None:
        raise NotImplementedError

    def remove(self, editor: "Editor", event: Event) -> None:
        pass

    def parse(self, obj: ModelObject) -> Event | None:
        return None

    def derive_id(self, event: Event) -> str | None:
        return None


@dataclass(frozen=True)
class Domain:
    """A metamodel: its association schema, its command handlers in parse
    offering order, and the event types it shares by default."""

    name: str
    schema: AssociationSchema
    handlers: tuple[CommandHandler, ...]
    sync_filter: frozenset[str] = frozenset()


class RemoveCommandHandler(CommandHandler):
    """Removes the increment for an id and stays active as a tombstone so a
    late re-delivery of the removed command cannot resurrect it."""

    type_tag = "RemoveCommand"

    def run(self, editor: "Editor", event: Event) -> str | None:
        editor.registry.remove_model_object(event.id)
        old = editor.active_commands.get(("", event.id))
        if old is not None and old.type_tag != self.type_tag:
            editor.handlers[old.type_tag].remove(editor, old)
        return None


def link_event_id(params) -> str | None:
    source, target, link = params.get("source"), params.get("target"), params.get("link")
    if source and target and link:
        return f"{source}~{link}~{target}"
    return None


class _LinkCommandBase(CommandHandler):
    def derive_id(self, event: Event) -> str | None:
        # Composite id: a later DropLink overwrites an earlier HaveLink for
        # the same pair, and vice versa.
        return link_event_id(event.params)

    def _ends(self, editor: "Editor", event: Event):
        try:
            source_id = event.params["source"]
            target_id = event.params["target"]
            link = event.params["link"]
        except KeyError as exc:
            raise CommandError(f"{self.type_tag} {event.id!r}: missing param {exc}") from None
        end = editor.registry.schema.end(link)
        if not (end.many and end.other_many):
            raise CommandError(f"{self.type_tag}: link {link!r} is not many-to-many")
        source = editor.registry.get_object_frame(end.owner_type, source_id)
        target = editor.registry.get_object_frame(end.other_type, target_id)
        return source, target, link


class HaveLinkHandler(_LinkCommandBase):
    type_tag = "HaveLink"

    def run(self, editor: "Editor", event: Event) -> str | None:
        source, target, link = self._ends(editor, event)
        editor.registry.add_to_many(source, link, target)
        return None


class DropLinkHandler(_LinkCommandBase):
    type_tag = "DropLink"

    def run(self, editor: "Editor", event: Event) -> str | None:
        source, target, link = self._ends(editor, event)
        editor.registry.remove_from_many(source, link, target)
        return None


_BUILTIN_HANDLERS = (RemoveCommandHandler, HaveLinkHandler, DropLinkHandler)


class Editor:
    """Owns a registry and the active command store for one model replica.

    ``sync_filter`` restricts which event types this editor exchanges with
    others (empty means all); RemoveCommand always passes so removals
    propagate under partial synchronization.
    """

    def __init__(
        self,
        domain: Domain,
        *,
        strategy: OverwriteStrategy = OverwriteStrategy.LAST_EDIT_WINS,
        clock: Clock | None = None,
        sync_filter: frozenset[str] | None = None,
    ):
        self.domain = domain
        self.registry = ObjectRegistry(domain.schema)
        self.strategy = strategy
        self.clock = clock or Clock()
        self.sync_filter = frozenset(
            domain.sync_filter if sync_filter is None else sync_filter
        )
        self.handlers: dict[str, CommandHandler] = {}
        for handler in domain.handlers:
            self.register_handler(handler)
        for factory in _BUILTIN_HANDLERS:
            if factory.type_tag not in self.handlers:
                self.register_handler(factory())
        # (scope, id) -> the single surviving event for that increment
        self.active_commands: dict[tuple[str, str], Event] = {}

    def register_handler(self, handler: CommandHandler) -> None:
        if handler.type_tag in self.handlers:
            raise IdCollisionError(f"handler for {handler.type_tag!r} already registered")
        self.handlers[handler.type_tag] = handler

    # -- execution --------------------------------------------------------------

    def _scope(self, type_tag: str) -> str:
        handler = self.handlers.get(type_tag)
        return handler.store_scope if handler is not None else ""

    def execute(self, event: Event) -> Event | None:
        """Run one event against the model, unless an already-stored event
        for the same id wins under the overwrite strategy.

        Missing id and time are assigned here (auto ids follow the store
        size: "obj0", "obj1", ...).  Returns the stored event when applied,
        None when the event was ignored.
        """
        handler = self.handlers.get(event.type_tag)
        if handler is None:
            raise UnknownCommandError(f"no handler for command {event.type_tag!r}")
        event_id = event.id
        if not event_id:
            derived = handler.derive_id(event)
            if derived:
                event_id = derived
            else:
                event_id = f"obj{len(self.active_commands)}"
                if (handler.store_scope, event_id) in self.active_commands:
                    raise IdCollisionError(
                        f"auto id {event_id!r} collides with an existing command id"
                    )
        time = event.time or self.clock.now()
        if event_id != event.id or time != event.time:
            event = replace(event, id=event_id, time=time)
        key = (handler.store_scope, event_id)
        old = self.active_commands.get(key)
        if old is not None:
            strategy = handler.strategy_override or self.strategy
            if not overwrites(event, old, strategy):
                return None
        handler.run(self, event)
        self.active_commands[key] = event
        return event

    def _shared(self, type_tag: str) -> bool:
        if not self.sync_filter or type_tag == "RemoveCommand":
            return True
        return type_tag in self.sync_filter

    def load_events(self, text: str) -> int:
        """Decode and execute events in textual order (order is immaterial
        for commutative sets); returns the number applied.

        Events excluded by the sync filter are skipped.  Per-event failures
        are collected; the rest of the text is still processed, then a
        single :class:`LoadError` reports them.
        """
        applied = 0
        failures: list[str] = []
        for event in decode(text):
            if not self._shared(event.type_tag):
                continue
            try:
                if self.execute(event) is not None:
                    applied += 1
            except CesError as exc:
                failures.append(f"{event.type_tag} {event.id!r}: {exc}")
        if failures:
            raise LoadError(failures, applied)
        return applied

    # -- parsing ----------------------------------------------------------------

    def parse(self, objects) -> int:
        """Rebuild commands from (possibly directly edited) model objects.

        Registers the objects so that re-executed commands reuse them, offers
        each object to every handler's parse, and executes each recovered
        event only when it differs from the stored one in some field other
        than time; unchanged increments keep their original timestamps.
        Returns the number of new or updated commands.
        """
        objects = list(objects)
        for obj in objects:
            self.registry.register_parsed(obj)
        try:
            collected: list[Event] = []
            for obj in objects:
                for handler in self.handlers.values():
                    found = handler.parse(obj)
                    if found is not None:
                        collected.append(found)
            changed = 0
            for event in collected:
                key = (self._scope(event.type_tag), event.id)
                old = self.active_commands.get(key)
                if old is None or not equals_but_time(old, event):
                    if self.execute(event) is not None:
                        changed += 1
            return changed
        finally:
            self.registry.parsed_objects.clear()

    # -- exchange ----------------------------------------------------------------

    def active_events(self, sync_filter: frozenset[str] | None = None) -> list[Event]:
        """Active commands in deterministic (id, type) order, restricted to
        the given filter (default: this editor's own)."""
        if sync_filter is None:
            shared = self._shared
        else:
            shared = lambda tag: not sync_filter or tag == "RemoveCommand" or tag in sync_filter
        events = [e for e in self.active_commands.values() if shared(e.type_tag)]
        events.sort(key=lambda e: (e.id, e.type_tag))
        return events

    def export_active(self, sync_filter: frozenset[str] | None = None) -> str:
        return encode(self.active_events(sync_filter))

    def get_active(self, id: str, scope: str = "") -> Event | None:
        return self.active_commands.get((scope, id))

    def clone(self) -> "Editor":
        """Independent deep copy (registry and store); shares handlers."""
        twin = Editor(
            self.domain,
            strategy=self.strategy,
            clock=Clock(),
            sync_filter=self.sync_filter,
        )
        twin.registry = copy.deepcopy(self.registry)
        twin.active_commands = dict(self.active_commands)
        return twin
