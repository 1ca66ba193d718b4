import json

import numpy as np
import pytest

from igabem import models
from igabem.model_io import (ModelFileError, build_model, load_model_file, parse_model, solve_options,
                             volume_options)


@pytest.mark.parametrize("name", ["test1_d02", "test1_d01", "test1_d005", "test1_d0025", "test2", "test3",
                                  "patchtest"])
def test_bundled_models_parse(name):
    mf = parse_model(models.load_bundled(name))
    m = build_model(mf)
    assert len(m.patches) == len(mf.patches)


def test_bundled_files_match_builders():
    for name, kw in models.BUNDLED.items():
        assert models.load_bundled(name) == json.loads(json.dumps(models.test1(**kw)))
    assert models.load_bundled("test3") == json.loads(json.dumps(models.test3()))
    assert models.load_bundled("test2") == json.loads(json.dumps(models.test2()))


def test_unknown_field_rejected():
    doc = models.cube_patch_test()
    doc["patches"][0]["colour"] = "red"
    with pytest.raises(ModelFileError, match="colour"):
        parse_model(doc)


def test_inclusion_needs_one_of_top_thickness():
    doc = models.test1()
    doc["inclusions"][0]["thickness"] = 0.2
    with pytest.raises(ModelFileError, match="exactly one"):
        parse_model(doc)


def test_duplicate_patch_names():
    doc = models.cube_patch_test()
    doc["patches"][1]["name"] = doc["patches"][0]["name"]
    with pytest.raises(ModelFileError, match="unique"):
        parse_model(doc)


def test_bad_geometry_wrapped():
    doc = models.cube_patch_test()
    doc["patches"][0]["surface"]["knots_u"] = [0, 0, 0.5, 1]
    with pytest.raises(ModelFileError):
        build_model(parse_model(doc))


def test_json_syntax_error_location(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{\n  "material": {"E": 1, "nu": 0.2},\n  "patches": [,]\n}\n')
    with pytest.raises(ModelFileError, match="line 3 column"):
        load_model_file(f)


def test_options_from_file():
    mf = parse_model(models.test1(option=1))
    assert volume_options(mf.solve).option == 1
    assert volume_options(mf.solve, 2).option == 2
    assert solve_options(mf).scheme == "one-step"
    assert solve_options(mf, "iterative").scheme == "iterative"


def test_control_net_numbering():
    # flat list runs first along xi, then along eta
    doc = models.cube_patch_test()
    s = parse_model(doc).patches[0].surface.build()
    P = np.array(doc["patches"][0]["surface"]["control"])
    np.testing.assert_allclose(s([1.0], [0.0])[0], P[1])
    np.testing.assert_allclose(s([0.0], [1.0])[0], P[2])


def test_line_points():
    mf = parse_model(models.test1())
    ln = mf.outputs.lines[0]
    P = ln.points()
    assert P.shape == (ln.n, 3)
    np.testing.assert_allclose(P[0], ln.start)
    np.testing.assert_allclose(P[-1], ln.end)
