import json
from pathlib import Path

import pytest

from geneo_lab import geo as G
from geneo_lab.perception import FiniteGroup, finite_space, space_to_json

jsonschema = pytest.importorskip("jsonschema")
ROOT = Path(__file__).resolve().parents[1]
SCHEMAS = ROOT / "docs" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / name).read_text())


def registry():
    from referencing import Registry, Resource
    docs = [schema(p.name) for p in SCHEMAS.glob("*.json")]
    return Registry().with_resources((d["$id"], Resource.from_contents(d)) for d in docs)


@pytest.mark.parametrize("name", ["desk", "full"])
def test_preset_configs_match_schema(name):
    jsonschema.validate(json.loads((ROOT / "configs" / f"{name}.json").read_text()), schema("config.schema.json"))


def test_unknown_config_field_fails_schema():
    doc = json.loads((ROOT / "configs" / "desk.json").read_text()) | {"epochs": 3}
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(doc, schema("config.schema.json"))


def test_serialized_space_and_geo_match_schemas():
    s = finite_space("s2", 2, group=FiniteGroup.cyclic(2), action_table=[[0, 1], [1, 0]])
    jsonschema.validate(space_to_json(s), schema("space.schema.json"))
    g = G.Geo(s, s, table=[1, 0], hom=G.GroupHom.identity(s.group))
    jsonschema.validate(G.geo_to_json(g), schema("lookup-geo.schema.json"))


def test_observer_example_matches_schema():
    doc = {"translations": {"objects": ["img28", "img14"], "arrows": [
        {"id": "down", "dom": "img28", "cod": "img14", "kind": "rescale2x2max"}]},
        "complexity": {"cnn": "inf", "relu": 1}}
    s = schema("observer.schema.json")
    jsonschema.Draft202012Validator(s, registry=registry()).validate(doc)
