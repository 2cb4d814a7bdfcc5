"""Entities, component storage, scenegraph structure, traversal and events.

Entities are bare grouping nodes with an id and parent/child links. Components
are plain data records stored per kind in columns keyed by entity id. All
behaviour lives in systems, which walk the scenegraph through
:func:`traverse_dfs` as visitors.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

from .errors import CycleError, DuplicateComponent, EventDeliveryError, HierarchyError, UnknownEntity

log = logging.getLogger(__name__)

NO_ENTITY = 0


class ComponentKind(enum.Enum):
    BASIC_TRANSFORM = "basic_transform"
    GA_TRANSFORM = "ga_transform"
    CAMERA = "camera"
    RENDER_MESH = "render_mesh"
    SKINNED_MESH = "skinned_mesh"
    VERTEX_ARRAY = "vertex_array"
    SHADER_PARAMS = "shader_params"

    @property
    def visit_method(self) -> str:
        return _VISIT_METHODS[self]


_VISIT_METHODS = {k: f"visit_{k.value}" for k in ComponentKind}

# kinds sharing one slot per entity
UNIQUE_GROUPS: dict[ComponentKind, str] = {
    ComponentKind.BASIC_TRANSFORM: "transform",
    ComponentKind.GA_TRANSFORM: "transform",
    ComponentKind.CAMERA: "camera",
}
TRANSFORM_KINDS = (ComponentKind.BASIC_TRANSFORM, ComponentKind.GA_TRANSFORM)


@dataclass(frozen=True)
class ComponentKey:
    owner: int
    kind: ComponentKind
    slot: int = 0


@dataclass
class Entity:
    id: int
    name: str
    parent: int = NO_ENTITY
    children: list[int] = field(default_factory=list)
    components: list[ComponentKey] = field(default_factory=list)
    alive: bool = True


@dataclass(frozen=True)
class Event:
    topic: str
    payload: Any = None


class Visitor:
    """Base visitor; every callback is a no-op.

    ``visit_ga_transform`` falls back to ``visit_basic_transform`` so a system
    written for plain transforms digests the decorated variant unchanged.
    """

    def visit_entity(self, world: "World", entity: Entity) -> None:
        pass

    def visit_basic_transform(self, world, entity, component) -> None:
        pass

    def visit_ga_transform(self, world, entity, component) -> None:
        self.visit_basic_transform(world, entity, component)

    def visit_camera(self, world, entity, component) -> None:
        pass

    def visit_render_mesh(self, world, entity, component) -> None:
        pass

    def visit_skinned_mesh(self, world, entity, component) -> None:
        self.visit_render_mesh(world, entity, component)

    def visit_vertex_array(self, world, entity, component) -> None:
        pass

    def visit_shader_params(self, world, entity, component) -> None:
        pass


class World:
    """Scenegraph container: entity arena, columnar component stores, event bus.

    The first entity created becomes the root. Entity ids start at 1 and are
    never reused; 0 means "no entity".
    """

    def __init__(self, name: str = "world"):
        self.name = name
        self._entities: dict[int, Entity] = {}
        self._next_id = 1
        self.root: int = NO_ENTITY
        self._stores: dict[ComponentKind, dict[int, list[Any]]] = {k: {} for k in ComponentKind}
        self._listeners: dict[str, list[tuple[int, Callable[[Event], Any]]]] = {}
        self._next_sub = 1
        self._version = 0
        self._order_cache: tuple[int, list[int]] | None = None
        self._plan_cache: tuple[int, list] | None = None
        self._derived: dict[str, tuple[int, Any]] = {}
        # per-frame results published by the systems
        self.l2w: dict[int, Any] = {}
        self.camera_entity: int | None = None
        self.view_pos: Any = None
        # scene-level data set by the scene loader
        self.scene: Any = None

    # -- entities -------------------------------------------------------------

    def create_entity(self, name: str = "") -> int:
        eid = self._next_id
        self._next_id += 1
        self._entities[eid] = Entity(eid, name or f"Entity{eid}")
        if self.root == NO_ENTITY:
            self.root = eid
        self._touch()
        self.publish(Event("entity_created", eid))
        return eid

    def entity(self, eid: int) -> Entity:
        ent = self._entities.get(eid)
        if ent is None or not ent.alive:
            raise UnknownEntity(eid)
        return ent

    def is_alive(self, eid: int) -> bool:
        ent = self._entities.get(eid)
        return ent is not None and ent.alive

    def entities(self) -> Iterator[Entity]:
        return (e for e in self._entities.values() if e.alive)

    def find(self, name: str) -> int:
        for e in self.entities():
            if e.name == name:
                return e.id
        raise UnknownEntity(name)

    def __len__(self) -> int:
        return sum(1 for _ in self.entities())

    def is_ancestor(self, ancestor: int, eid: int) -> bool:
        cur = self.entity(eid).parent
        while cur != NO_ENTITY:
            if cur == ancestor:
                return True
            cur = self._entities[cur].parent
        return False

    def add_entity_child(self, parent: int, child: int, reparent: bool = False) -> None:
        p = self.entity(parent)
        c = self.entity(child)
        if parent == child or self.is_ancestor(child, parent):
            raise CycleError(f"attaching {c.name!r} under {p.name!r} would create a cycle")
        if child == self.root:
            raise HierarchyError("the root entity cannot be given a parent")
        if c.parent != NO_ENTITY:
            if not reparent:
                raise HierarchyError(f"{c.name!r} already has a parent; pass reparent=True")
            self._entities[c.parent].children.remove(child)
        p.children.append(child)
        c.parent = parent
        self._touch()
        self.publish(Event("entity_attached", (parent, child)))

    def remove_entity(self, eid: int) -> None:
        """Tombstone an entity and its subtree; ids stay retired."""
        ent = self.entity(eid)
        if ent.parent != NO_ENTITY:
            self._entities[ent.parent].children.remove(eid)
        stack = [eid]
        while stack:
            e = self._entities[stack.pop()]
            stack.extend(e.children)
            for store in self._stores.values():
                store.pop(e.id, None)
            e.components.clear()
            e.children.clear()
            e.parent = NO_ENTITY
            e.alive = False
        if eid == self.root:
            self.root = NO_ENTITY
        self._touch()
        self.publish(Event("entity_removed", eid))

    # -- components -----------------------------------------------------------

    def add_component(self, owner: int, component) -> ComponentKey:
        ent = self.entity(owner)
        kind: ComponentKind = component.kind
        group = UNIQUE_GROUPS.get(kind)
        if group is not None:
            for key in ent.components:
                if UNIQUE_GROUPS.get(key.kind) == group:
                    raise DuplicateComponent(f"{ent.name!r} already has a {group} component")
        column = self._stores[kind].setdefault(owner, [])
        key = ComponentKey(owner, kind, len(column))
        column.append(component)
        ent.components.append(key)
        self._touch()
        self.publish(Event("component_added", key))
        return key

    def get_component(self, owner: int, kind) -> Any:
        self.entity(owner)
        kind = _as_kind(kind)
        column = self._stores[kind].get(owner)
        return column[0] if column else None

    def get_components(self, owner: int, kind) -> list[Any]:
        self.entity(owner)
        return list(self._stores[_as_kind(kind)].get(owner, ()))

    def component(self, key: ComponentKey) -> Any:
        return self._stores[key.kind][key.owner][key.slot]

    def get_transform(self, owner: int):
        """The entity's BasicTransform or GATransform, whichever is attached."""
        for kind in TRANSFORM_KINDS:
            column = self._stores[kind].get(owner)
            if column:
                return column[0]
        return None

    def components_of(self, kind) -> Iterator[tuple[int, Any]]:
        """Iterate ``(owner, component)`` over one column, in owner order."""
        for owner, column in self._stores[_as_kind(kind)].items():
            for comp in column:
                yield owner, comp

    def components_in_order(self, owner: int) -> list[tuple[ComponentKey, Any]]:
        return [(k, self.component(k)) for k in self.entity(owner).components]

    # -- traversal ------------------------------------------------------------

    def preorder(self) -> list[int]:
        """Entity ids reachable from the root, parents before children.

        Cached until the structure changes.
        """
        if self._order_cache is not None and self._order_cache[0] == self._version:
            return self._order_cache[1]
        order: list[int] = []
        if self.root != NO_ENTITY:
            stack = [self.root]
            while stack:
                eid = stack.pop()
                order.append(eid)
                stack.extend(reversed(self._entities[eid].children))
        self._order_cache = (self._version, order)
        return order

    def dispatch_plan(self) -> list[tuple[Entity, tuple[tuple[str, Any], ...]]]:
        """Pre-order ``(entity, ((visit_method, component), ...))`` pairs, cached like :meth:`preorder`."""
        if self._plan_cache is not None and self._plan_cache[0] == self._version:
            return self._plan_cache[1]
        plan = []
        for eid in self.preorder():
            ent = self._entities[eid]
            calls = tuple((_VISIT_METHODS[k.kind], self._stores[k.kind][eid][k.slot]) for k in ent.components)
            plan.append((ent, calls))
        self._plan_cache = (self._version, plan)
        return plan

    def cached(self, name: str, build: Callable[[], Any]) -> Any:
        """``build()``'s result, kept until the entity/component structure changes."""
        hit = self._derived.get(name)
        if hit is not None and hit[0] == self._version:
            return hit[1]
        value = build()
        self._derived[name] = (self._version, value)
        return value

    def _touch(self) -> None:
        self._version += 1

    # -- events ---------------------------------------------------------------

    def subscribe(self, topic: str, listener: Callable[[Event], Any]) -> int:
        sid = self._next_sub
        self._next_sub += 1
        self._listeners.setdefault(topic, []).append((sid, listener))
        return sid

    def unsubscribe(self, sid: int) -> bool:
        for subs in self._listeners.values():
            for i, (s, _) in enumerate(subs):
                if s == sid:
                    del subs[i]
                    return True
        return False

    def publish(self, event: Event) -> None:
        subs = self._listeners.get(event.topic)
        if not subs:
            return
        errors = []
        for _, listener in list(subs):
            try:
                listener(event)
            except Exception as exc:  # collected, raised after full delivery
                errors.append((listener, exc))
        if errors:
            raise EventDeliveryError(event.topic, errors)


def _as_kind(kind) -> ComponentKind:
    if isinstance(kind, ComponentKind):
        return kind
    k = getattr(kind, "kind", None)
    if isinstance(k, ComponentKind):
        return k
    return ComponentKind(kind)


def traverse_dfs(world: World, visitor: Visitor) -> None:
    """Pre-order walk: entity callback, its components in attachment order,
    then its children in insertion order."""
    methods = _live_methods(visitor)
    visit_entity = visitor.visit_entity
    for ent, calls in world.dispatch_plan():
        visit_entity(world, ent)
        for name, comp in calls:
            m = methods[name]
            if m is not None:
                m(world, ent, comp)


_FALLBACKS = {"visit_ga_transform": "visit_basic_transform", "visit_skinned_mesh": "visit_render_mesh"}


def _overridden(visitor: Visitor, name: str) -> bool:
    if name in getattr(visitor, "__dict__", {}) or getattr(type(visitor), name) is not getattr(Visitor, name):
        return True
    return name in _FALLBACKS and _overridden(visitor, _FALLBACKS[name])


def _live_methods(visitor: Visitor) -> dict[str, Any]:
    """Bound callbacks by name, ``None`` where the base no-op would run."""
    return {name: getattr(visitor, name) if _overridden(visitor, name) else None for name in _VISIT_METHODS.values()}


# Listing-style free functions, for callers who prefer them over methods.


def create_entity(world: World, name: str = "") -> int:
    return world.create_entity(name)


def add_entity_child(world: World, parent: int, child: int, reparent: bool = False) -> None:
    world.add_entity_child(parent, child, reparent)


def add_component(world: World, owner: int, component) -> ComponentKey:
    return world.add_component(owner, component)


def get_component(world: World, owner: int, kind):
    return world.get_component(owner, kind)


def subscribe(world: World, topic: str, listener) -> int:
    return world.subscribe(topic, listener)


def publish(world: World, event: Event) -> None:
    world.publish(event)
