"""
Collections are designated containers of objects of a particular type.

"""

#
# _|_|_|_|_|  _|_|_|    _|_|_|  _|_|_|
#     _|      _|    _|    _|    _|    _|
#     _|      _|_|_|      _|    _|_|_|
#     _|      _|    _|    _|    _|
#     _|      _|    _|  _|_|_|  _|
#
#

from __future__ import annotations
from typing import Any
from typing import Callable
from typing import TypeVar
from dataclasses import dataclass, field


# pylint: disable=invalid-name
TK = TypeVar("TK")
TV = TypeVar("TV")
# pylint: enable=invalid-name


@dataclass(repr=False)
class Collection(dict[TK, TV]):
    """
    Collection of objects, keyed by their `uid`.

    Attributes:
        parent: Object to which the Collection belongs.

    Example:
        >>> from types import SimpleNamespace
        >>> my_collection = Collection(parent=None)
        >>> my_collection.add(SimpleNamespace(uid=(0, 0), size=64))
        >>> len(my_collection)
        1
        >>> my_collection.add(42)
        Traceback (most recent call last):
            ...
        KeyError: 'Object does not have a uid attribute'
        >>> my_collection.add(SimpleNamespace(uid=(0, 0), size=32))
        Traceback (most recent call last):
            ...
        KeyError: 'uid (0, 0) already exists'
        >>> my_collection.__srepr__()
        '[Collection of 1 items]'

    """

    parent: Any = field(repr=False)

    def add(self, obj: Any) -> None:
        """
        Add an object to the collection. The object needs to have
        a unique id attribute, `uid`.

        Arguments:
          obj: Object to be added.

        """
        if not hasattr(obj, "uid"):
            raise KeyError("Object does not have a uid attribute")
        if obj.uid in self:
            raise KeyError(f"uid {obj.uid} already exists")
        self[obj.uid] = obj

    def __srepr__(self):
        """
        Concise version of `repr`.

        """
        return f"[Collection of {len(self)} items]"

    def __repr__(self):
        res = ""
        res += "Collection Object\n"
        res += f"ID: {id(self)}\n"
        res += f"Parent object: {self.parent}\n"
        res += f"Registry size: {len(self)}\n"
        return res


@dataclass(repr=False)
class TileCollection(Collection[tuple[int, int], TV]):
    """
    Collection of square map tiles keyed by their (tx, ty) tile index.
    Tiles are created on first access.

    Attributes:
        factory: Callable building an empty tile from its uid.

    Example:
        >>> from types import SimpleNamespace
        >>> tiles = TileCollection(parent=None, factory=lambda uid:
        ...     SimpleNamespace(uid=uid))
        >>> tiles.retrieve_or_create((2, -1)).uid
        (2, -1)
        >>> len(tiles)
        1
        >>> tiles.retrieve_or_create((2, -1)) is tiles[(2, -1)]
        True
        >>> tiles.sorted_uids()
        [(2, -1)]

    """

    factory: Callable[[tuple[int, int]], TV] = field(default=lambda uid: None)

    def retrieve_or_create(self, uid: tuple[int, int]) -> TV:
        """
        The tile with the given uid, allocated if missing.

        """
        if uid not in self:
            self.add(self.factory(uid))
        return self[uid]

    def sorted_uids(self) -> list[tuple[int, int]]:
        """
        Tile uids ordered by (ty, tx), the row-major order of the
        world lattice.

        """
        return sorted(self.keys(), key=lambda uid: (uid[1], uid[0]))

    def __srepr__(self):
        return f"[TileCollection of {len(self)} tiles]"
