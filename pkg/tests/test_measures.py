"""Volume and p-Area: closed forms, adaptive quadrature, and the
independent voxel/triangulation oracles."""

import math

import numpy as np
import pytest
from scipy import integrate

from conftest import make_acceptance_bodies, random_motion
from h1geom import (
    Ball,
    Box,
    Ellipsoid,
    EllipsoidPatch,
    QuadratureError,
    RectanglePatch,
    TrianglePatch,
    horizontal_normal_norm,
    p_area,
    p_area_triangulation_oracle,
    transform_body,
    volume,
    volume_voxel_oracle,
)

BODIES = make_acceptance_bodies()


def test_volume_exact_values():
    assert abs(volume(BODIES["ball"]).value - 4.0 * math.pi / 3.0) < 1e-12
    assert volume(BODIES["box"]).value == 1.0
    e = BODIES["ellipsoid"]
    expected = 4.0 * math.pi / 3.0 * float(np.prod(np.diag(e.lin)))
    assert abs(volume(e).value - expected) < 1e-12
    res = volume(BODIES["ball"])
    assert res.method == "exact"
    assert res.resolution == 0 and res.error_estimate == 0.0


def test_volume_quadrature_matches_exact():
    for name in ("ball", "ellipsoid"):
        body = BODIES[name]
        res = volume(body, method="quadrature")
        assert res.method == "quadrature"
        assert abs(res.value - body.volume_exact()) < 1e-5 * body.volume_exact()
    # flat faces make the flux midpoint rule exact up to rounding
    res = volume(BODIES["box"], method="quadrature")
    assert abs(res.value - 1.0) < 1e-9


def test_volume_method_validation():
    with pytest.raises(ValueError):
        volume(BODIES["ball"], method="montecarlo")


def test_voxel_oracle():
    res = volume_voxel_oracle(BODIES["ball"], resolution=200)
    assert res.method == "voxel-oracle"
    assert abs(res.value - 4.0 * math.pi / 3.0) < 0.01 * 4.0 * math.pi / 3.0
    with pytest.raises(ValueError):
        volume_voxel_oracle(BODIES["ball"], resolution=4)


def test_voxel_oracle_refines():
    # offset bodies so voxel faces are not aligned with body faces
    bodies = [
        BODIES["ball"],
        BODIES["ellipsoid"],
        Box((0.05, 0.1, -0.03), (1.13, 0.97, 1.08)),
    ]
    for body in bodies:
        errs = [
            abs(volume_voxel_oracle(body, resolution=r).value - body.volume_exact())
            for r in (25, 50, 100, 200)
        ]
        assert errs[-1] < errs[0]
        assert errs[-1] < 0.01 * body.volume_exact()


def test_p_area_ball_value():
    # reduce the sphere integral to a 1D profile: total = 2 pi times the
    # integral of sqrt(1 - z^4) dz over [-1, 1]
    profile, _ = integrate.quad(lambda z: math.sqrt(1.0 - z**4), -1.0, 1.0)
    expected = 2.0 * math.pi * profile
    res = p_area(BODIES["ball"])
    assert res.method == "quadrature"
    assert abs(res.value - expected) < 1e-9 * expected


def test_p_area_box_value():
    # four vertical faces have |N_H| = 1; top and bottom integrate the
    # cylinder radius sqrt(x^2 + y^2) over the unit square
    cap, _ = integrate.dblquad(
        lambda y, x: math.hypot(x, y), 0.0, 1.0, 0.0, 1.0
    )
    expected = 4.0 + 2.0 * cap
    res = p_area(BODIES["box"])
    assert abs(res.value - expected) < 1e-9 * expected


def test_p_area_triangulation_oracle_agrees():
    for name in ("ball", "ellipsoid"):
        quad = p_area(BODIES[name]).value
        tri = p_area_triangulation_oracle(BODIES[name], resolution=256)
        assert tri.method == "triangulation-oracle"
        assert abs(tri.value - quad) < 0.005 * quad
    with pytest.raises(ValueError):
        p_area_triangulation_oracle(BODIES["ball"], resolution=4)


def test_p_area_polytope_matches_box():
    # the six-halfspace polytope is the same set as the unit box, with
    # triangle patches instead of rectangles
    normals = np.vstack([np.eye(3), -np.eye(3)])
    offsets = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    from h1geom import Polytope

    poly = Polytope(normals, offsets)
    assert abs(p_area(poly).value - p_area(BODIES["box"]).value) < 1e-6


def test_p_area_vertical_translation_invariance():
    base = p_area(BODIES["ball"]).value
    lifted = p_area(Ball((0.0, 0.0, 1.0e6), 1.0)).value
    assert abs(lifted - base) < 1e-9 * base


def test_p_area_rigid_motion_invariance():
    rng = np.random.default_rng(2718)
    for name in ("ball", "ellipsoid", "box"):
        body = BODIES[name]
        base = p_area(body).value
        for _ in range(2):
            m = random_motion(rng, 1.5)
            moved = p_area(transform_body(m, body)).value
            assert abs(moved - base) < 5e-3 * base, name


def test_integrand_vanishes_at_characteristic_points():
    # poles of the unit sphere, where the tangent plane is the contact plane
    pts = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    normals = pts.copy()
    assert np.all(horizontal_normal_norm(pts, normals) == 0.0)
    # generic point: |N_H|^2 = n1^2 + n2^2 + (x n2 - y n1) 2 n3 + (x^2+y^2) n3^2
    pt = np.array([0.3, -0.2, 0.7])
    n = np.array([0.48, 0.6, 0.64])
    got = horizontal_normal_norm(pt, n)
    expected = math.hypot(n[0] + pt[1] * n[2], n[1] - pt[0] * n[2])
    assert abs(got - expected) < 1e-15


def test_patch_area_elements():
    rect = RectanglePatch(
        origin=(0.0, 0.0, 0.0), eu=(2.0, 0.0, 0.0), ev=(0.0, 0.0, 1.5), normal=(0.0, -1.0, 0.0)
    )
    u = np.array([0.25, 0.75])
    v = np.array([0.5, 0.5])
    pts, normals, jac = rect.evaluate(u, v)
    assert np.allclose(pts[0], [0.5, 0.0, 0.75])
    assert np.allclose(normals, [[0.0, -1.0, 0.0]] * 2)
    assert np.allclose(jac, 3.0)

    tri = TrianglePatch(
        (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), normal=(0.0, 0.0, 1.0)
    )
    # integral of the area element over the unit square equals the area
    grid = (np.arange(64) + 0.5) / 64
    uu, vv = np.meshgrid(grid, grid, indexing="ij")
    _, _, jac = tri.evaluate(uu, vv)
    assert abs(jac.mean() - 0.5) < 1e-12

    patch = EllipsoidPatch((0.0, 0.0, 0.0), np.diag([1.0, 2.0, 0.5]))
    pts, normals, jac = patch.evaluate(uu, vv)
    # normals are unit and outward
    assert np.allclose(np.linalg.norm(normals, axis=-1), 1.0)
    assert np.all(np.sum(pts * normals, axis=-1) > 0.0)
    # the area element integrates to the ellipsoid surface area; compare
    # against the degree-1.6 approximation accurate to 1.2 percent
    area = jac.mean()
    a, b, c = 1.0, 2.0, 0.5
    p = 1.6075
    knud = 4.0 * math.pi * (((a * b) ** p + (a * c) ** p + (b * c) ** p) / 3.0) ** (1.0 / p)
    assert abs(area - knud) < 0.015 * knud


def test_quadrature_error_when_budget_too_small():
    with pytest.raises(QuadratureError):
        p_area(BODIES["ellipsoid"], rel_tol=1e-13, max_resolution=32)


def test_measure_result_fields():
    res = p_area(BODIES["ball"])
    assert res.resolution >= 16
    assert res.error_estimate >= 0.0
    oracle = volume_voxel_oracle(BODIES["box"], resolution=64)
    assert oracle.resolution == 64
    assert oracle.error_estimate >= 0.0
