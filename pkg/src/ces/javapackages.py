"""Reference metamodel A: JavaPackage trees with JavaClass leaves.

Commands: HaveRoot detaches a package from any parent, HaveSubUnit hangs a
package under a parent, HaveLeaf places a class in a package and stamps its
vTag.  Each command's increment is the core object plus its upward link, so
distinct-id commands never touch the same attribute or link.
"""

from __future__ import annotations

from .editor import CommandError, CommandHandler, Domain, Editor
from .events import Event
from .objects import Association, AssociationSchema, ModelObject

JAVA_PACKAGES_SCHEMA = AssociationSchema(
    [
        Association("JavaPackage", "pPack", False, "JavaPackage", "subPackages", True),
        Association("JavaClass", "pack", False, "JavaPackage", "classes", True),
    ]
)


def _parent(event: Event) -> str:
    parent = event.params.get("parent")
    if not parent:
        raise CommandError(f"{event.type_tag} {event.id!r}: missing 'parent' param")
    return parent


class HaveRoot(CommandHandler):
    type_tag = "HaveRoot"

    def run(self, editor: Editor, event: Event) -> str | None:
        registry = editor.registry
        package = registry.get_or_create("JavaPackage", event.id)
        registry.set_link(package, "pPack", None)
        return package.id

    def remove(self, editor: Editor, event: Event) -> None:
        editor.registry.remove_model_object(event.id)

    def parse(self, obj: ModelObject) -> Event | None:
        if obj.object_type != "JavaPackage":
            return None
        if obj.to_one.get("pPack"):
            return None
        if not obj.to_many.get("subPackages") and not obj.to_many.get("classes"):
            # Isolated and empty: nothing references it, collect it.
            return Event("RemoveCommand", id=obj.id)
        return Event("HaveRoot", id=obj.id)


class HaveSubUnit(CommandHandler):
    type_tag = "HaveSubUnit"

    def run(self, editor: Editor, event: Event) -> str | None:
        registry = editor.registry
        package = registry.get_or_create("JavaPackage", event.id)
        parent = registry.get_object_frame("JavaPackage", _parent(event))
        registry.set_link(package, "pPack", parent)
        return package.id

    def remove(self, editor: Editor, event: Event) -> None:
        package = editor.registry.remove_model_object(event.id)
        if package is not None:
            editor.registry.set_link(package, "pPack", None)

    def parse(self, obj: ModelObject) -> Event | None:
        if obj.object_type != "JavaPackage":
            return None
        parent = obj.to_one.get("pPack")
        if not parent:
            return None
        return Event("HaveSubUnit", id=obj.id, params={"parent": parent})


class HaveLeaf(CommandHandler):
    type_tag = "HaveLeaf"

    def run(self, editor: Editor, event: Event) -> str | None:
        registry = editor.registry
        leaf = registry.get_or_create("JavaClass", event.id)
        package = registry.get_object_frame("JavaPackage", _parent(event))
        registry.set_link(leaf, "pack", package)
        registry.set_attribute(leaf, "vTag", event.params.get("vTag", ""))
        return leaf.id

    def remove(self, editor: Editor, event: Event) -> None:
        leaf = editor.registry.remove_model_object(event.id)
        if leaf is not None:
            editor.registry.set_link(leaf, "pack", None)

    def parse(self, obj: ModelObject) -> Event | None:
        if obj.object_type != "JavaClass":
            return None
        parent = obj.to_one.get("pack")
        if not parent:
            # A class without a package is garbage, same as an empty root.
            return Event("RemoveCommand", id=obj.id)
        return Event(
            "HaveLeaf",
            id=obj.id,
            params={"parent": parent, "vTag": obj.attributes.get("vTag", "")},
        )


JAVA_PACKAGES = Domain(
    name="javapackages",
    schema=JAVA_PACKAGES_SCHEMA,
    handlers=(HaveRoot(), HaveSubUnit(), HaveLeaf()),
)
