import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecss import core
from ecss.components import BasicTransform, Camera, GATransform, RenderMesh, ShaderParams, VertexArray
from ecss.core import ComponentKind, Event, Visitor, World, traverse_dfs
from ecss.errors import CycleError, DuplicateComponent, EventDeliveryError, HierarchyError, UnknownEntity


class Recorder(Visitor):
    def __init__(self):
        self.log = []

    def visit_entity(self, world, entity):
        self.log.append(entity.name)

    def visit_basic_transform(self, world, entity, component):
        self.log.append(f"{entity.name}:transform")

    def visit_render_mesh(self, world, entity, component):
        self.log.append(f"{entity.name}:mesh")


def test_entity_ids_start_at_one_and_increase():
    w = World()
    a = core.create_entity(w, "a")
    b = core.create_entity(w, "b")
    assert a == 1 and b > a


def test_ids_never_reused():
    w = World()
    root = w.create_entity("root")
    issued = {root}
    for _ in range(5):
        e = w.create_entity()
        w.add_entity_child(root, e)
        issued.add(e)
    w.remove_entity(max(issued))
    fresh = w.create_entity()
    assert fresh not in issued
    with pytest.raises(UnknownEntity):
        w.entity(max(issued))


def test_chain_dfs_order():
    w = World()
    root = w.create_entity("root")
    e1, e2 = w.create_entity("E1"), w.create_entity("E2")
    core.add_entity_child(w, e1, e2)
    core.add_entity_child(w, root, e1)
    assert w.preorder() == [root, e1, e2]


def test_cycle_and_reparent_rules():
    w = World()
    root = w.create_entity("root")
    e1, e2 = w.create_entity("E1"), w.create_entity("E2")
    w.add_entity_child(root, e1)
    w.add_entity_child(e1, e2)
    with pytest.raises(CycleError):
        w.add_entity_child(e2, e1, reparent=True)
    with pytest.raises(CycleError):
        w.add_entity_child(e1, e1)
    with pytest.raises(HierarchyError):
        w.add_entity_child(root, e2)
    w.add_entity_child(root, e2, reparent=True)
    assert w.entity(root).children == [e1, e2]
    with pytest.raises(HierarchyError):
        w.add_entity_child(e1, root)


def test_children_keep_insertion_order():
    w = World()
    root = w.create_entity("root")
    kids = [w.create_entity(n) for n in "abc"]
    for k in kids:
        w.add_entity_child(root, k)
    assert w.entity(root).children == kids


def test_listing_style_attachments():
    w = World()
    root = w.create_entity("Root")
    e1, e2 = w.create_entity("Entity1"), w.create_entity("Entity2")
    w.add_entity_child(root, e1)
    w.add_entity_child(e1, e2)
    tr = BasicTransform()
    cam = Camera.ortho()
    core.add_component(w, e2, tr)
    core.add_component(w, e2, cam)
    assert core.get_component(w, e2, ComponentKind.BASIC_TRANSFORM) is tr
    assert core.get_component(w, e2, Camera) is cam
    keys = {w.add_component(e1, c) for c in (RenderMesh(), VertexArray(), ShaderParams())}
    assert len(keys) == 3
    with pytest.raises(DuplicateComponent):
        w.add_component(e2, BasicTransform())
    # a GA transform occupies the same slot
    with pytest.raises(DuplicateComponent):
        w.add_component(e2, GATransform())


def test_get_component_absent_and_dead():
    w = World()
    root = w.create_entity("root")
    e = w.create_entity("e")
    w.add_entity_child(root, e)
    assert w.get_component(e, ComponentKind.CAMERA) is None
    w.remove_entity(e)
    with pytest.raises(UnknownEntity):
        w.get_component(e, ComponentKind.CAMERA)


def test_remove_subtree_drops_components():
    w = World()
    root = w.create_entity("root")
    a, b = w.create_entity("a"), w.create_entity("b")
    w.add_entity_child(root, a)
    w.add_entity_child(a, b)
    w.add_component(b, BasicTransform())
    w.remove_entity(a)
    assert not w.is_alive(b)
    assert list(w.components_of(ComponentKind.BASIC_TRANSFORM)) == []
    assert w.preorder() == [root]


def test_traversal_preorder_and_component_order():
    w = World()
    root = w.create_entity("root")
    a, b, c = (w.create_entity(n) for n in "abc")
    w.add_entity_child(root, a)
    w.add_entity_child(root, b)
    w.add_entity_child(a, c)
    w.add_component(a, BasicTransform())
    w.add_component(a, RenderMesh())
    rec = Recorder()
    traverse_dfs(w, rec)
    assert rec.log == ["root", "a", "a:transform", "a:mesh", "c", "b"]


def test_ga_transform_falls_back_to_basic_callback():
    w = World()
    root = w.create_entity("root")
    w.add_component(root, GATransform((1, 0, 0)))
    rec = Recorder()
    traverse_dfs(w, rec)
    assert rec.log == ["root", "root:transform"]


def test_instance_override_is_honoured():
    w = World()
    root = w.create_entity("root")
    w.add_component(root, Camera())
    seen = []
    v = Visitor()
    v.visit_camera = lambda world, ent, comp: seen.append(comp)
    traverse_dfs(w, v)
    assert len(seen) == 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=10_000), min_size=0, max_size=40))
def test_counting_visitor_sees_every_entity(parent_picks):
    w = World()
    ids = [w.create_entity("root")]
    for pick in parent_picks:
        e = w.create_entity()
        w.add_entity_child(ids[pick % len(ids)], e)
        ids.append(e)

    class Count(Visitor):
        n = 0

        def visit_entity(self, world, entity):
            self.n += 1

    c = Count()
    traverse_dfs(w, c)
    assert c.n == len(ids)
    order = w.preorder()
    pos = {e: i for i, e in enumerate(order)}
    assert all(pos[w.entity(e).parent] < pos[e] for e in ids[1:])


def test_structure_change_invalidates_plan():
    w = World()
    root = w.create_entity("root")
    first = w.dispatch_plan()
    assert w.dispatch_plan() is first
    w.add_component(root, BasicTransform())
    assert w.dispatch_plan() is not first
    assert w.cached("x", lambda: [1]) is w.cached("x", lambda: [2])


def test_events_order_once_and_no_subscribers():
    w = World()
    got = []
    core.subscribe(w, "tick", lambda e: got.append(("A", e.payload)))
    w.subscribe("tick", lambda e: got.append(("B", e.payload)))
    core.publish(w, Event("tick", 7))
    assert got == [("A", 7), ("B", 7)]
    w.publish(Event("nobody", 1))


def test_failing_listener_does_not_block_others():
    w = World()
    got = []

    def bad(e):
        raise RuntimeError("boom")

    w.subscribe("t", bad)
    sid = w.subscribe("t", lambda e: got.append(e.payload))
    with pytest.raises(EventDeliveryError):
        w.publish(Event("t", 1))
    assert got == [1]
    assert w.unsubscribe(sid) and not w.unsubscribe(sid)


def test_world_publishes_structure_events():
    w = World()
    topics = []
    for t in ("entity_created", "entity_attached", "component_added"):
        w.subscribe(t, lambda e, t=t: topics.append(t))
    root = w.create_entity("root")
    e = w.create_entity("e")
    w.add_entity_child(root, e)
    w.add_component(e, BasicTransform(np.eye(4)))
    assert topics == ["entity_created", "entity_created", "entity_attached", "component_added"]
