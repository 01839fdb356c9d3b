# Copyright 2026 The shapeabs Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import shapeabs
import pytest


def test_parse_execute_roundtrip():
    expr = "SymRef(Move(Rect(0.1,0.2),0.3,0.1),AX)"
    assert shapeabs.canonical(expr) == expr
    prims = sorted(shapeabs.execute(expr))
    assert prims == sorted([[0.1, 0.2, 0.3, 0.1], [0.1, 0.2, -0.3, 0.1]])
    assert shapeabs.complexity(expr) == pytest.approx(3 + 4 * 2.0 + 0.5)


def test_bad_expression_raises_value_error():
    with pytest.raises(ValueError):
        shapeabs.execute("Rect(0.1")


def test_match_is_permutation_invariant():
    a = [[0.1, 0.1, 0.0, 0.0], [0.2, 0.2, 0.5, 0.5]]
    valid, err, assign = shapeabs.match(a, list(reversed(a)))
    assert valid and err == 0.0 and assign == [1, 0]


def test_refactor_uses_library_function():
    lib = (
        '{"config": {}, "abstractions": [{"name": "Abs_0", "params": ["FLOAT", "FLOAT"],'
        ' "body": "SymRef(Move(Rect(P0,P1),Add(P0,P1),Sub(P1,P0)),AX)", "omega": 0.25}]}'
    )
    assert shapeabs.refactor("SymRef(Move(Rect(0.1,0.2),0.3,0.1),AX)", lib) == "Abs_0(0.1,0.2)"


def test_small_run_and_phi():
    scenes, latent, cats = shapeabs.synthetic_corpus(16, seed=3)
    assert len(scenes) == len(latent) == len(cats) == 16
    out = shapeabs.run(scenes, "rounds = 1\ndreams_per_source = 10\nproposal_iterations = 40\n")
    trace = [f for _, _, f in out["trace"]]
    assert trace[0] == pytest.approx(out["naive_objective"])
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
    progs, f, calls = shapeabs.phi(scenes, out["library"])
    assert len(progs) == 16 and f <= out["naive_objective"] + 1e-9 and calls >= 0


def test_render_has_one_rect_per_primitive():
    svg = shapeabs.render_svg([[0.2, 0.2, 0.0, 0.0], [0.1, 0.3, 0.5, -0.5]])
    assert svg.count("<rect ") == 2
