"""Walkthrough: build a package tree from commands, sync it into the doc
model, repair a detached subtree, and sync again without cascading deletes."""

from __future__ import annotations

from ces import Editor, Event, JAVA_DOC, JAVA_PACKAGES, dump_model, model_diff

START = [
    Event("HaveRoot", id="org", time="2020-01-01T13:00:00.000Z"),
    Event("HaveSubUnit", id="fulib", time="2020-01-01T13:01:00.000Z", params={"parent": "org"}),
    Event("HaveSubUnit", id="serv", time="2020-01-01T13:02:00.000Z", params={"parent": "fulib"}),
    Event("HaveLeaf", id="Editor", time="2020-01-01T13:03:00.000Z", params={"parent": "serv", "vTag": "1.0"}),
]


def main() -> None:
    packages = Editor(JAVA_PACKAGES)
    for event in START:
        packages.execute(event)
    print("package model after the start situation:")
    print(dump_model(packages.registry))

    doc = Editor(JAVA_DOC)
    applied = doc.load_events(packages.export_active())
    print(f"doc model after syncing {applied} commands:")
    print(dump_model(doc.registry))

    before = doc.clone()
    print("repair: make fulib a root (one command, subtree survives)")
    packages.execute(Event("HaveRoot", id="fulib", time="2020-01-01T14:00:00.000Z"))
    doc.load_events(packages.export_active())
    print(dump_model(doc.registry))

    print("what changed on the doc side:")
    for line in model_diff(before.registry, doc.registry).differences:
        print(f"  {line}")


if __name__ == "__main__":
    main()
