import json

import numpy as np
import pytest

from modules.codes import (
    CodeSpec,
    Deformation,
    StabilizerOrigin,
    build_elongated_code,
    build_gauge_group,
    code_description,
    code_distance_bruteforce,
    verify_code,
)
from modules.deformation import deformation_mask
from modules.errors import InvalidSpecError, SizeError
from modules.pauli import commutes, gf2_rank, in_row_span

from tests.conftest import cached_code, code_grid


@pytest.mark.parametrize("L, links", [(2, 2), (3, 6), (5, 20)])
def test_gauge_group_counts(L, links):
    gauges = build_gauge_group(L)
    assert sum(g.kind == "X" for g in gauges) == links
    assert sum(g.kind == "Z" for g in gauges) == links


def test_gauge_group_rejects_tiny_lattice():
    with pytest.raises(InvalidSpecError):
        build_gauge_group(1)


def test_x_links_are_horizontal_and_z_links_vertical():
    for g in build_gauge_group(4):
        (r0, c0), (r1, c1) = g.qubits
        if g.kind == "X":
            assert (r1, c1) == (r0, c0 + 1)
        else:
            assert (r1, c1) == (r0 + 1, c0)


@pytest.mark.parametrize("L, ell", [(3, 3), (3, 1), (2, 2), (5, 5)])
def test_invalid_specs_rejected(L, ell):
    with pytest.raises(InvalidSpecError):
        CodeSpec(L, ell)


def test_spec_parses_deformation_aliases():
    assert CodeSpec(3, 2, "xzzx").deformation == Deformation.XZZX_SQ
    assert CodeSpec(3, 2, "CSS").deformation == Deformation.NONE
    with pytest.raises(InvalidSpecError):
        CodeSpec(3, 2, "YZZY")


def test_rotated_surface_code_at_ell_two(surface3):
    code = surface3
    origins_x = sorted(s.origin.value for s in code.x_stabilizers)
    origins_z = sorted(s.origin.value for s in code.z_stabilizers)
    assert len(code.x_stabilizers) == 4
    assert len(code.z_stabilizers) == 4
    assert origins_x.count(StabilizerOrigin.FIXED_PLAQUETTE.value) == 2
    assert origins_z.count(StabilizerOrigin.Z_RECTANGLE.value) == 2
    assert sorted(code.fixed_plaquettes()) == [(0, 0), (1, 1)]
    assert sorted(s.weight for s in code.stabilizers) == [2, 2, 2, 2, 4, 4, 4, 4]


def test_plaquettes_and_rectangles_for_ell_three():
    code = cached_code(4, 3)
    assert sorted(code.fixed_plaquettes()) == [(0, 0), (1, 1), (2, 2)]
    rectangles = [s for s in code.z_stabilizers if s.origin == StabilizerOrigin.Z_RECTANGLE]
    assert max(s.weight for s in rectangles) == 6


@pytest.mark.parametrize("L, ell", code_grid())
def test_structural_invariants(L, ell):
    code = cached_code(L, ell)
    n = code.n
    sx = np.vstack([s.pauli.x_bits for s in code.stabilizers])
    sz = np.vstack([s.pauli.z_bits for s in code.stabilizers])
    assert gf2_rank(np.hstack([sx, sz])) == n - 1
    assert not ((sx.astype(int) @ sz.T.astype(int) + sz.astype(int) @ sx.T.astype(int)) % 2).any()
    for h in (code.h_x, code.h_z):
        assert set(h.column_weights().tolist()) <= {1, 2}

    assert not commutes(code.logical_x, code.logical_z)
    for s in code.stabilizers:
        assert commutes(code.logical_x, s.pauli)
        assert commutes(code.logical_z, s.pauli)
    assert not in_row_span(code.h_x, code.logical_x.x_bits)
    assert not in_row_span(code.h_z, code.logical_z.z_bits)
    verify_code(code)


@pytest.mark.parametrize("L, ell", code_grid(sizes=(5, 7, 9)))
def test_interior_rectangles_have_weight_two_ell(L, ell):
    code = cached_code(L, ell)
    rectangles = [s for s in code.z_stabilizers if s.origin == StabilizerOrigin.Z_RECTANGLE]
    assert max(s.weight for s in rectangles) == 2 * ell


def test_minimum_weight_logicals_small_code(surface3):
    assert surface3.logical_z.weight() == 3
    assert surface3.logical_x.weight() == 3


@pytest.mark.parametrize("L, ell", [(3, 2), (4, 2), (4, 3)])
def test_bruteforce_distance(L, ell):
    assert code_distance_bruteforce(cached_code(L, ell)) == (L, L)


@pytest.mark.slow
@pytest.mark.parametrize("L, ell", [(5, 2), (5, 3), (5, 4)])
def test_bruteforce_distance_five(L, ell):
    assert code_distance_bruteforce(cached_code(L, ell)) == (L, L)


def test_bruteforce_distance_refuses_large_codes():
    with pytest.raises(SizeError):
        code_distance_bruteforce(cached_code(7, 2))


def test_build_is_deterministic():
    a = build_elongated_code(CodeSpec(5, 3))
    b = build_elongated_code(CodeSpec(5, 3))
    assert [s.pauli for s in a.stabilizers] == [s.pauli for s in b.stabilizers]


def test_description_lists_deformed_labels():
    code = build_elongated_code(CodeSpec(3, 2, "XZZX_SQ"))
    description = code_description(code, deformation_mask(code))
    json.dumps(description)
    plaquettes = [s for s in description["stabilizers"] if s["origin"] == "FIXED_PLAQUETTE"]
    assert {s["deformed"] for s in plaquettes} == {"XZZX"}
    assert description["mask"]["kind"] == "XZZX_SQ"
    assert len(description["stabilizers"]) == 8
