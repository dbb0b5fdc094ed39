"""Commutative event sourcing: model synchronization via overwriting and
commutative edit commands that survive lossy, reordering, duplicating
transports."""

from .editor import (
    CommandError,
    CommandHandler,
    Domain,
    Editor,
    IdCollisionError,
    LoadError,
    UnknownCommandError,
)
from .events import (
    CesError,
    Clock,
    DecodeError,
    EncodeError,
    Event,
    OverwriteStrategy,
    decode,
    encode,
    equals_but_time,
    overwrites,
    stepping_clock,
)
from .javadoc import JAVA_DOC
from .javapackages import JAVA_PACKAGES
from .objects import (
    Association,
    AssociationSchema,
    ModelObject,
    ObjectRegistry,
    SchemaError,
    TypeConflictError,
    dump_model,
    model_diff,
    model_equal,
)
from .simulate import Channel, ConvergenceReport, Session, run_script

__version__ = "0.1.0"
