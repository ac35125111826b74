import json

import numpy as np
import pytest

from cone_rigidity.models import ConeGeometry, Coupled2Block, Coupled3Block, ScalarBlock
from cone_rigidity.services.indicial import indicial_matrix
from cone_rigidity.services.modes import (
    CouplingConvention,
    circle_cross_section_modes,
    coupled_potential,
    dump_cross_section_modes,
    load_cross_section_modes,
    radial_operator,
    sorted_blocks,
)
from cone_rigidity.utils.errors import EigendataParseError, EigendataValidationError

R = np.linspace(0.05, 1.0, 20)


class TestRadialOperator:
    def test_shift(self, torus_geometry, coupled3):
        L = radial_operator(torus_geometry, coupled3, "L")
        bare = radial_operator(torus_geometry, coupled3, "nabla_star_nabla")
        np.testing.assert_allclose(L.Q(R) - bare.Q(R), np.broadcast_to(2 * np.eye(3), (R.size, 3, 3)))

    @pytest.mark.parametrize("block", [Coupled3Block(lambda_prime=2.0, p=1), Coupled2Block(p=-2), ScalarBlock(mu_prime=1.0, p_prime=3)])
    def test_hermitian(self, torus_geometry, block):
        Q = radial_operator(torus_geometry, block).Q(R)
        np.testing.assert_allclose(Q, np.conj(np.swapaxes(Q, -1, -2)), atol=1e-13)

    def test_printed_convention_not_hermitian(self, torus_geometry, coupled3):
        op = radial_operator(torus_geometry, coupled3, convention="printed")
        assert not op.is_self_adjoint
        Q = op.Q(0.5)
        assert Q[0, 2] == pytest.approx(-Q[2, 0])

    def test_coupled2_is_sub_block(self):
        full = coupled_potential(R, 3, 2.0, 0.0, CouplingConvention.SYMMETRIC, size=3)
        reduced = coupled_potential(R, 3, 2.0, 0.0, CouplingConvention.SYMMETRIC, size=2)
        np.testing.assert_allclose(full[:, :2, :2], reduced)
        np.testing.assert_allclose(full[:, :2, 2], 0)

    def test_coefficient_p(self, half_plane_geometry, scalar):
        op = radial_operator(half_plane_geometry, scalar)
        np.testing.assert_allclose(op.P(R), 1 / np.tanh(R) + 2 * np.tanh(R))

    @pytest.mark.parametrize("block", [Coupled3Block(lambda_prime=1.0, p=1), Coupled2Block(p=2), ScalarBlock(mu_prime=0.0, p_prime=1)])
    def test_series_matches_closed_form(self, torus_geometry, block):
        op = radial_operator(torus_geometry, block)
        N = 14
        p, q = op.radial_coefficients(N)
        r = 0.05
        powers = r ** np.arange(N + 1)
        np.testing.assert_allclose(powers @ p, r * op.P(r), rtol=1e-12)
        np.testing.assert_allclose(np.einsum("j,jab->ab", powers, q), r * r * op.Q(r), rtol=1e-10, atol=1e-12)

    def test_indicial_constant(self, torus_geometry, coupled3):
        op = radial_operator(torus_geometry, coupled3)
        np.testing.assert_allclose(
            op.indicial_constant(), indicial_matrix(coupled3, 0.0, torus_geometry.beta), atol=1e-12
        )


class TestCircleModes:
    def test_counts(self, torus_geometry):
        blocks = circle_cross_section_modes(torus_geometry, 2, 2)
        assert len(blocks) == 30
        assert sum(isinstance(b, Coupled3Block) for b in blocks) == 20
        assert blocks == sorted_blocks(blocks)

    def test_eigenvalues(self):
        geom = ConeGeometry(n=3, beta=2.0, cross_section={"kind": "circle", "length": 1.0})
        blocks = circle_cross_section_modes(geom, 0, 1)
        coupled = [b for b in blocks if isinstance(b, Coupled3Block)]
        assert coupled[0].lambda_prime == pytest.approx((2 * np.pi) ** 2)

    def test_needs_circle(self, half_plane_geometry):
        with pytest.raises(ValueError):
            circle_cross_section_modes(half_plane_geometry, 1, 1)

    def test_negative_bounds(self, torus_geometry):
        with pytest.raises(ValueError):
            circle_cross_section_modes(torus_geometry, -1, 0)


class TestEigendata:
    def _write(self, tmp_path, lines):
        path = tmp_path / "modes.jsonl"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_load(self, tmp_path):
        path = self._write(
            tmp_path,
            [
                json.dumps({"kind": "coupled3", "lambda_prime": 2.0, "p": 1}),
                "",
                json.dumps({"kind": "scalar", "mu_prime": 0.5, "p_prime": -1}),
            ],
        )
        blocks = load_cross_section_modes(path)
        assert blocks == [Coupled3Block(lambda_prime=2.0, p=1), ScalarBlock(mu_prime=0.5, p_prime=-1)]

    def test_dump_then_load(self, tmp_path, sample_blocks):
        path = tmp_path / "dumped.jsonl"
        dump_cross_section_modes(sample_blocks, path)
        assert load_cross_section_modes(path) == sample_blocks

    def test_empty_file(self, tmp_path):
        assert load_cross_section_modes(self._write(tmp_path, [""])) == []

    @pytest.mark.parametrize(
        "record",
        ["{not json", "[1, 2]", json.dumps({"kind": "quartic", "p": 1}), json.dumps({"kind": "coupled2"})],
    )
    def test_malformed(self, tmp_path, record):
        path = self._write(tmp_path, [json.dumps({"kind": "coupled2", "p": 0}), record])
        with pytest.raises(EigendataParseError) as info:
            load_cross_section_modes(path)
        assert info.value.line == 2

    @pytest.mark.parametrize(
        "record",
        [{"kind": "scalar", "mu_prime": -0.1, "p_prime": 0}, {"kind": "coupled3", "lambda_prime": 0.0, "p": 1}],
    )
    def test_invalid_values(self, tmp_path, record):
        path = self._write(tmp_path, [json.dumps(record)])
        with pytest.raises(EigendataValidationError) as info:
            load_cross_section_modes(path)
        assert info.value.line == 1
