"""Builtin types of MiniLang and the assignability relation."""

from __future__ import annotations

from typing import Optional

from nvgen.minilang.ast import BOOL, INT, NULL, STRING, TypeRef

PRIMITIVES = {"int", "bool", "string"}
KEY_TYPES = {"int", "bool", "string"}

# interface name -> number of type arguments
COLLECTION_INTERFACES = {"List": 1, "Set": 1, "Map": 2}

# implementation class -> implemented collection interface
COLLECTION_IMPLS = {
    "ArrayListImpl": "List",
    "LinkedListImpl": "List",
    "HashSetImpl": "Set",
    "TreeSetImpl": "Set",
    "HashMapImpl": "Map",
    "LinkedMapImpl": "Map",
    "TreeMapImpl": "Map",
}

BUILTIN_TYPE_NAMES = PRIMITIVES | set(COLLECTION_INTERFACES) | set(COLLECTION_IMPLS)

# Method tables use the type variables E (element), K (key), V (value).
# name -> (parameter types, return type or None for void)
_LIST = {
    "add": (["E"], None),
    "get": (["int"], "E"),
    "set": (["int", "E"], None),
    "size": ([], "int"),
    "isEmpty": ([], "bool"),
    "contains": (["E"], "bool"),
    "indexOf": (["E"], "int"),
    "removeAt": (["int"], "E"),
    "clear": ([], None),
}
_SET = {
    "add": (["E"], "bool"),
    "contains": (["E"], "bool"),
    "remove": (["E"], "bool"),
    "size": ([], "int"),
    "isEmpty": ([], "bool"),
    "clear": ([], None),
    "toList": ([], "List<E>"),
}
_MAP = {
    "put": (["K", "V"], None),
    "get": (["K"], "V"),
    "getOrDefault": (["K", "V"], "V"),
    "containsKey": (["K"], "bool"),
    "remove": (["K"], None),
    "size": ([], "int"),
    "isEmpty": ([], "bool"),
    "clear": ([], None),
    "keys": ([], "List<K>"),
    "values": ([], "List<V>"),
}
COLLECTION_METHODS = {"List": _LIST, "Set": _SET, "Map": _MAP}

# Methods that never mutate their receiver.
PURE_COLLECTION_METHODS = {
    "get", "size", "isEmpty", "contains", "indexOf", "toList", "getOrDefault",
    "containsKey", "keys", "values",
}

STRING_METHODS = {
    "length": ([], "int"),
    "charAt": (["int"], "string"),
    "substring": (["int", "int"], "string"),
    "indexOf": (["string"], "int"),
    "equals": (["string"], "bool"),
    "isEmpty": ([], "bool"),
    "startsWith": (["string"], "bool"),
}

# name -> parameter types; all return void. Callable only from tests.
ASSERTIONS = {
    "assertEquals": 2,
    "assertTrue": 1,
    "assertFalse": 1,
}


def collection_interface(t: TypeRef) -> Optional[str]:
    if t.name in COLLECTION_INTERFACES:
        return t.name
    return COLLECTION_IMPLS.get(t.name)


def _subst(spec: str, t: TypeRef) -> TypeRef:
    iface = collection_interface(t)
    names = ["E"] if COLLECTION_INTERFACES[iface] == 1 else ["K", "V"]
    mapping = dict(zip(names, t.args))
    if spec in mapping:
        return mapping[spec]
    if "<" in spec:
        head, arg = spec[:-1].split("<")
        return TypeRef(head, (mapping[arg],))
    return TypeRef(spec)


def collection_method(t: TypeRef, name: str) -> Optional[tuple[list[TypeRef], Optional[TypeRef]]]:
    iface = collection_interface(t)
    if iface is None:
        return None
    entry = COLLECTION_METHODS[iface].get(name)
    if entry is None:
        return None
    params, ret = entry
    return [_subst(p, t) for p in params], (None if ret is None else _subst(ret, t))


def string_method(name: str) -> Optional[tuple[list[TypeRef], Optional[TypeRef]]]:
    entry = STRING_METHODS.get(name)
    if entry is None:
        return None
    params, ret = entry
    return [TypeRef(p) for p in params], TypeRef(ret)


def element_type(t: TypeRef) -> Optional[TypeRef]:
    """Element type for for-each iteration (List and Set only)."""
    iface = collection_interface(t)
    if iface in ("List", "Set") and t.args:
        return t.args[0]
    return None


def is_reference(t: TypeRef) -> bool:
    return t.name not in ("int", "bool")


def default_value(t: TypeRef):
    if t == INT:
        return 0
    if t == BOOL:
        return False
    return None


__all__ = [
    "BOOL", "INT", "NULL", "STRING",
    "PRIMITIVES", "KEY_TYPES", "COLLECTION_INTERFACES", "COLLECTION_IMPLS",
    "BUILTIN_TYPE_NAMES", "COLLECTION_METHODS", "PURE_COLLECTION_METHODS",
    "STRING_METHODS", "ASSERTIONS",
    "collection_interface", "collection_method", "string_method", "element_type",
    "is_reference", "default_value",
]
