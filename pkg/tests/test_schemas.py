import json
import math

import pytest
from pydantic import ValidationError

from cone_rigidity.models import Coupled3Block, ScalarBlock
from cone_rigidity.schemas import BlockEntry, RunConfig


def _write(tmp_path, payload):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig.load(overrides={"geometry": {"beta": 2.0}})
        assert config.geometry.n == 3
        assert config.modes.p_max == 2
        assert config.output.format == "json"
        assert config.block.to_block() is None

    def test_cli_angle_replaces_file_angle(self, tmp_path):
        path = _write(tmp_path, {"geometry": {"alpha": math.pi, "tube_radius": 0.8}})
        config = RunConfig.load(path, {"geometry": {"beta": 1.5, "alpha": None}})
        assert config.geometry.alpha is None
        assert config.geometry.beta == 1.5
        assert config.geometry.tube_radius == 0.8

    def test_unset_overrides_keep_file_values(self, tmp_path):
        path = _write(tmp_path, {"geometry": {"beta": 2.0}, "solver": {"mesh_points": 64}})
        config = RunConfig.load(path, {"solver": {"mesh_points": None, "rhs": "zero"}})
        assert config.solver.mesh_points == 64
        assert config.solver.rhs == "zero"

    def test_block_selection(self):
        config = RunConfig.load(overrides={"geometry": {"beta": 2.0}, "block": {"kind": "coupled3", "p": -1}})
        assert config.block.to_block() == Coupled3Block(lambda_prime=1.0, p=-1)

    @pytest.mark.parametrize(
        "payload",
        [
            {"geometry": {}},
            {"geometry": {"beta": 2.0, "n": 2}},
            {"geometry": {"beta": 2.0, "eigendata": "missing.jsonl"}},
            {"geometry": {"beta": 2.0}, "verify": {"identities": ["W7"]}},
            {"geometry": {"beta": 2.0}, "verify": {"r_bounds": [0.8, 0.3]}},
            {"geometry": {"beta": 2.0}, "solver": {"mesh_points": 4}},
            {"geometry": {"beta": 2.0}, "unknown": {}},
        ],
    )
    def test_invalid(self, payload):
        with pytest.raises(ValidationError):
            RunConfig.model_validate(payload)

    def test_config_must_be_object(self, tmp_path):
        with pytest.raises(ValueError):
            RunConfig.load(_write(tmp_path, [1, 2]))

    def test_echo_drops_output_path(self):
        config = RunConfig.load(overrides={"geometry": {"beta": 2.0}, "output": {"path": "out.json"}})
        assert "path" not in config.echo()["output"]
        assert config.echo()["geometry"]["beta"] == 2.0


def test_block_entry_hides_unused_eigenvalue():
    entry = BlockEntry.from_block(ScalarBlock(mu_prime=0.5, p_prime=2), 2.0)
    assert entry.lambda_prime is None
