"""Runtime values: 32-bit integer arithmetic, objects, and builtin collections.

Iteration orders are fixed per implementation so that runs are reproducible:

* ArrayListImpl, LinkedListImpl, LinkedMapImpl: insertion order
* TreeSetImpl, TreeMapImpl: ascending key order (false < true)
* HashSetImpl, HashMapImpl: ascending ``key_hash``, ties by insertion order
"""

from __future__ import annotations

from typing import Any, Optional

MASK32 = 0xFFFFFFFF
INT_MIN = -(1 << 31)
GOLDEN = 2654435761


class SubjectException(Exception):
    """An exception raised inside the subject program (catchable by ``try``)."""

    def __init__(self, message: Optional[str]):
        super().__init__(message)
        self.message = message


def wrap32(x: int) -> int:
    x &= MASK32
    return x - (1 << 32) if x & 0x80000000 else x


def int_div(a: int, b: int) -> int:
    if b == 0:
        raise SubjectException("ArithmeticException: / by zero")
    q = abs(a) // abs(b)
    return wrap32(q if (a < 0) == (b < 0) else -q)


def int_mod(a: int, b: int) -> int:
    if b == 0:
        raise SubjectException("ArithmeticException: % by zero")
    q = abs(a) // abs(b)
    q = q if (a < 0) == (b < 0) else -q
    return wrap32(a - b * q)


def key_hash(key: Any) -> int:
    """Unsigned 32-bit hash that fixes HashSetImpl/HashMapImpl iteration order."""
    if isinstance(key, bool):
        return 1231 if key else 1237
    if isinstance(key, int):
        return ((key & MASK32) * GOLDEN) & MASK32
    if isinstance(key, str):
        h = 0
        for ch in key:
            h = (h * 31 + ord(ch)) & MASK32
        return h
    raise TypeError(f"unhashable key {key!r}")


def _check_key(key: Any) -> None:
    if key is None:
        raise SubjectException("NullPointerException: null key")


class Obj:
    __slots__ = ("cls", "fields", "ident")

    def __init__(self, cls_name: str, ident: int):
        self.cls = cls_name
        self.fields: dict[str, Any] = {}
        self.ident = ident


class ListValue:
    __slots__ = ("impl", "items")

    def __init__(self, impl: str):
        self.impl = impl
        self.items: list = []

    def _index(self, i: int, limit: int) -> None:
        if not 0 <= i < limit:
            raise SubjectException(f"IndexOutOfBoundsException: index {i}, size {len(self.items)}")

    def call(self, name: str, args: list) -> Any:
        items = self.items
        if name == "add":
            items.append(args[0])
            return None
        if name == "get":
            self._index(args[0], len(items))
            return items[args[0]]
        if name == "set":
            self._index(args[0], len(items))
            items[args[0]] = args[1]
            return None
        if name == "size":
            return len(items)
        if name == "isEmpty":
            return not items
        if name == "contains":
            return any(values_equal(x, args[0]) for x in items)
        if name == "indexOf":
            for i, x in enumerate(items):
                if values_equal(x, args[0]):
                    return i
            return -1
        if name == "removeAt":
            self._index(args[0], len(items))
            return items.pop(args[0])
        if name == "clear":
            items.clear()
            return None
        raise AttributeError(name)

    def iterate(self) -> list:
        return list(self.items)


def _tree_key(k: Any):
    return (0, k) if isinstance(k, bool) else (1, k)


class SetValue:
    __slots__ = ("impl", "items")

    def __init__(self, impl: str):
        self.impl = impl
        self.items: dict = {}  # insertion-ordered

    def iterate(self) -> list:
        keys = list(self.items)
        if self.impl == "TreeSetImpl":
            return sorted(keys, key=_tree_key)
        return sorted(keys, key=key_hash)

    def call(self, name: str, args: list) -> Any:
        if name in ("add", "contains", "remove"):
            _check_key(args[0])
        if name == "add":
            if args[0] in self.items:
                return False
            self.items[args[0]] = True
            return True
        if name == "contains":
            return args[0] in self.items
        if name == "remove":
            return self.items.pop(args[0], None) is not None
        if name == "size":
            return len(self.items)
        if name == "isEmpty":
            return not self.items
        if name == "clear":
            self.items.clear()
            return None
        if name == "toList":
            out = ListValue("ArrayListImpl")
            out.items = self.iterate()
            return out
        raise AttributeError(name)


class MapValue:
    __slots__ = ("impl", "entries")

    def __init__(self, impl: str):
        self.impl = impl
        self.entries: dict = {}  # insertion-ordered; re-put keeps the first position

    def ordered_keys(self) -> list:
        keys = list(self.entries)
        if self.impl == "TreeMapImpl":
            return sorted(keys, key=_tree_key)
        if self.impl == "HashMapImpl":
            return sorted(keys, key=key_hash)
        return keys

    def call(self, name: str, args: list) -> Any:
        if name in ("put", "get", "getOrDefault", "containsKey", "remove"):
            _check_key(args[0])
        if name == "put":
            self.entries[args[0]] = args[1]
            return None
        if name == "get":
            if args[0] not in self.entries:
                raise SubjectException(f"NoSuchElementException: missing key {to_display(args[0])}")
            return self.entries[args[0]]
        if name == "getOrDefault":
            return self.entries.get(args[0], args[1])
        if name == "containsKey":
            return args[0] in self.entries
        if name == "remove":
            self.entries.pop(args[0], None)
            return None
        if name == "size":
            return len(self.entries)
        if name == "isEmpty":
            return not self.entries
        if name == "clear":
            self.entries.clear()
            return None
        if name in ("keys", "values"):
            out = ListValue("ArrayListImpl")
            keys = self.ordered_keys()
            out.items = keys if name == "keys" else [self.entries[k] for k in keys]
            return out
        raise AttributeError(name)


COLLECTION_CLASSES = {
    "ArrayListImpl": ListValue,
    "LinkedListImpl": ListValue,
    "HashSetImpl": SetValue,
    "TreeSetImpl": SetValue,
    "HashMapImpl": MapValue,
    "LinkedMapImpl": MapValue,
    "TreeMapImpl": MapValue,
}


def string_call(s: str, name: str, args: list) -> Any:
    if name == "length":
        return len(s)
    if name == "charAt":
        i = args[0]
        if not 0 <= i < len(s):
            raise SubjectException(f"StringIndexOutOfBoundsException: index {i}")
        return s[i]
    if name == "substring":
        b, e = args
        if not 0 <= b <= e <= len(s):
            raise SubjectException(f"StringIndexOutOfBoundsException: range [{b}, {e})")
        return s[b:e]
    if name == "indexOf":
        if args[0] is None:
            raise SubjectException("NullPointerException: indexOf(null)")
        return s.find(args[0])
    if name == "equals":
        return s == args[0]
    if name == "isEmpty":
        return not s
    if name == "startsWith":
        if args[0] is None:
            raise SubjectException("NullPointerException: startsWith(null)")
        return s.startswith(args[0])
    raise AttributeError(name)


def values_equal(a: Any, b: Any) -> bool:
    """``==`` semantics: value equality for int/bool/string, identity otherwise."""
    if a is None or b is None:
        return a is b
    if isinstance(a, (int, str)):
        return type(a) is type(b) and a == b
    return a is b


def to_display(v: Any) -> str:
    """String conversion used by ``+`` concatenation and assertion messages."""
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, str)):
        return str(v)
    if isinstance(v, Obj):
        return f"{v.cls}@{v.ident}"
    if isinstance(v, (ListValue, SetValue)):
        items = v.iterate()
        return "[" + ", ".join(to_display(x) for x in items) + "]"
    if isinstance(v, MapValue):
        return "{" + ", ".join(f"{to_display(k)}={to_display(v.entries[k])}" for k in v.ordered_keys()) + "}"
    return repr(v)
