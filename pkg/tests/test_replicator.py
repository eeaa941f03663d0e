from __future__ import annotations

import json
from dataclasses import replace

import pytest
from hypothesis import given, settings

from edgeoffload.replicator import (
    MANAGED_FIELDS,
    SOURCE_GENERATION,
    Replicator,
    ServiceSpec,
    ServiceStore,
    Source,
    load_manifest,
    merge,
    needs_apply,
    reconcile_loop,
)

from .strategies import spec_pairs

BASE = {"image": "reg/app:1", "profile": "image", "concurrency_limit": 4, "env": {"A": "1"}}


def stores():
    cloud, edge = ServiceStore(Source.CLOUD), ServiceStore(Source.EDGE)
    return cloud, edge, Replicator(cloud, edge)


def test_identical_specs_merge_to_edge():
    cloud = ServiceSpec("svc", 3, dict(BASE))
    edge = ServiceSpec("svc", 7, dict(BASE), {"ready": True})
    merged = merge(cloud, edge)
    assert merged.managed_spec == edge.managed_spec
    assert merged.status == edge.status
    assert merged.annotations == {SOURCE_GENERATION: "3"}


def test_cloud_image_change_keeps_edge_status():
    cloud = ServiceSpec("svc", 2, {**BASE, "image": "reg/app:2"})
    edge = ServiceSpec("svc", 1, dict(BASE), {"ready": True})
    merged = merge(cloud, edge)
    assert merged.managed_spec["image"] == "reg/app:2"
    assert merged.status == {"ready": True}


def test_foreign_annotation_preserved():
    edge = ServiceSpec("svc", 1, dict(BASE), annotations={"autoscaler.hint": "x"})
    assert merge(ServiceSpec("svc", 1, dict(BASE)), edge).annotations["autoscaler.hint"] == "x"


def test_merge_rejects_name_mismatch():
    with pytest.raises(ValueError):
        merge(ServiceSpec("a"), ServiceSpec("b"))


def test_needs_apply_cases():
    cloud = ServiceSpec("svc", 1, dict(BASE))
    current = merge(cloud, ServiceSpec("svc"))
    assert not needs_apply(current, current)
    assert not needs_apply(replace(current, status={"ready": False}), current)
    changed = replace(current, managed_spec={**BASE, "env": {"A": "2"}})
    assert needs_apply(changed, current)


def test_one_cloud_change_one_apply_then_quiet():
    cloud, edge, rep = stores()
    cloud.apply(ServiceSpec("svc", managed_spec=dict(BASE)))
    assert rep.applied == 1
    cloud.apply(replace(cloud.get("svc"), managed_spec={**BASE, "image": "reg/app:2"}))
    assert rep.applied == 2
    assert edge.get("svc").managed_spec["image"] == "reg/app:2"
    assert rep.sync_all() == 0


def test_edge_status_updates_cause_no_applies():
    cloud, edge, rep = stores()
    cloud.apply(ServiceSpec("svc", managed_spec=dict(BASE)))
    before = rep.applied
    for i in range(100):
        edge.update_status("svc", replicas=i, ready=bool(i % 2))
    assert rep.applied == before
    assert edge.get("svc").status == {"replicas": 99, "ready": True}


def test_cloud_delete_propagates():
    cloud, edge, rep = stores()
    cloud.apply(ServiceSpec("svc", managed_spec=dict(BASE)))
    cloud.delete("svc")
    assert "svc" not in edge


def test_edge_created_services_are_left_alone():
    cloud, edge, rep = stores()
    edge.apply(ServiceSpec("local-only", managed_spec=dict(BASE)))
    edge.update_status("local-only", ready=True)
    assert rep.sync_all() == 0
    assert "local-only" in edge
    assert rep.applied == 0


def test_edge_drift_is_repaired():
    cloud, edge, rep = stores()
    cloud.apply(ServiceSpec("svc", managed_spec=dict(BASE)))
    edge.apply(replace(edge.get("svc"), managed_spec={**BASE, "concurrency_limit": 99}))
    assert edge.get("svc").managed_spec["concurrency_limit"] == 4


def test_reconcile_loop_counts_applies():
    cloud, edge = ServiceStore(Source.CLOUD), ServiceStore(Source.EDGE)
    for name in ("a", "b", "c"):
        cloud.apply(ServiceSpec(name, managed_spec=dict(BASE)))
    assert reconcile_loop(cloud, edge) == 3
    assert sorted(edge.names()) == ["a", "b", "c"]


@settings(max_examples=300)
@given(spec_pairs())
def test_merge_is_idempotent(pair):
    cloud, edge = pair
    once = merge(cloud, edge)
    assert merge(cloud, once) == once


@settings(max_examples=300)
@given(spec_pairs())
def test_merge_preserves_status_and_foreign_annotations(pair):
    cloud, edge = pair
    merged = merge(cloud, edge)
    assert merged.status == edge.status
    assert merged.foreign_annotations() == edge.foreign_annotations()
    for key in MANAGED_FIELDS:
        assert merged.managed_spec.get(key, edge.managed_spec.get(key)) == \
            cloud.managed_spec.get(key, edge.managed_spec.get(key))


@settings(max_examples=300)
@given(spec_pairs())
def test_self_merge_needs_no_apply(pair):
    cloud, edge = pair
    merged = merge(cloud, edge)
    assert not needs_apply(merge(cloud, merged), merged)


def test_manifest_roundtrip(tmp_path):
    path = tmp_path / "services.json"
    path.write_text(json.dumps([
        {"name": "mm", "profile": "matmult", "concurrency_limit": 2},
        {"name": "im", "profile": "image", "concurrency_limit": "4", "env": {"K": "v"}},
    ]))
    specs = load_manifest(path)
    assert [s.name for s in specs] == ["mm", "im"]
    assert specs[1].managed_spec["concurrency_limit"] == 4
    assert specs[1].managed_spec["env"] == {"K": "v"}


def test_manifest_missing_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([{"name": "x"}]))
    with pytest.raises(ValueError, match="profile"):
        load_manifest(path)
