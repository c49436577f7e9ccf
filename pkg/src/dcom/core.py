"""Core value types shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError

# Separator used when joining column values into one text.  The bare token is
# what the tokenizer recognizes; the joined form carries one space on each side.
SEP_TOKEN = "<SEP>"
SEP_TEXT = " <SEP> "
# Raw cell values that happen to contain the separator are escaped at ingest so
# a constructed text can always be split back into its source values.
SEP_ESCAPED = "<\\SEP>"

# Marker for a padded slot in multi-sequence inputs.
PAD_VALUE = ""


def escape_value(value: str) -> str:
    """Escape separator collisions in a raw cell value."""
    return value.replace(SEP_TOKEN, SEP_ESCAPED)


@dataclass(frozen=True)
class ColumnInstance:
    """One data column: an ordered list of raw cell values, optionally labeled."""

    values: tuple[str, ...]
    label: str | None = None

    def __post_init__(self):
        if len(self.values) == 0:
            raise ParseError("column has no values")

    @property
    def n(self) -> int:
        return len(self.values)


def make_instance(values, label=None) -> ColumnInstance:
    """Build a ColumnInstance, escaping separator collisions in each value."""
    return ColumnInstance(tuple(escape_value(str(v)) for v in values), label)


@dataclass(frozen=True)
class ClassVocabulary:
    """Stable bijection between class names and dense integer ids.

    Names are kept in lexicographic order so the mapping survives save/load.
    """

    names: tuple[str, ...]
    index: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate class names")
        object.__setattr__(self, "index", {n: i for i, n in enumerate(self.names)})

    @classmethod
    def from_labels(cls, labels) -> "ClassVocabulary":
        return cls(tuple(sorted(set(labels))))

    def id_of(self, name: str) -> int:
        return self.index[name]

    def name_of(self, class_id: int) -> str:
        return self.names[class_id]

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name) -> bool:
        return name in self.index
