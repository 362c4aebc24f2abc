"""
Tests for analytic shapes, the equal-area family and grid masks
"""
import numpy as np
import pytest
from pydantic import ValidationError

from src.constants import ShapeKind
from src.errors import DomainError, MaskError
from src.geometry import (Annulus, Disk, Ellipse, Rectangle, Stadium, build_mask, equal_area_family,
                          family_member, shift)


class TestShapes:
    """Tests for the analytic shape classes"""

    def test_disk_measures(self):
        """Disk area, perimeter and inradius are the closed forms"""
        disk = Disk(radius=2.0)
        assert disk.area() == pytest.approx(4.0 * np.pi, rel=1e-15)
        assert disk.perimeter() == pytest.approx(4.0 * np.pi, rel=1e-15)
        assert disk.inradius() == 2.0

    def test_circular_ellipse_perimeter(self):
        """An ellipse with equal axes has the circle's perimeter"""
        assert Ellipse(a=1.5, b=1.5).perimeter() == pytest.approx(3.0 * np.pi, rel=1e-12)

    def test_ellipse_perimeter_known_value(self):
        """2:1 ellipse perimeter matches the complete elliptic integral value"""
        # 4 a E(e^2) with a = 2, b = 1: 9.688448220547675
        assert Ellipse(a=2.0, b=1.0).perimeter() == pytest.approx(9.688448220547675, rel=1e-10)

    def test_level_sign(self):
        """level is negative inside, zero on the boundary, positive outside"""
        for shape in equal_area_family(np.pi):
            xmin, xmax, _, _ = shape.bbox()
            assert shape.level(xmax, 0.0) == pytest.approx(0.0, abs=1e-12)
            assert shape.level(xmax + 0.1, 0.0) > 0
            assert not shape.contains(xmax, 0.0)

    def test_annulus_centre_is_outside(self):
        """The hole of the annulus is not part of the domain"""
        ring = Annulus(r0=0.5, r1=1.0)
        assert not ring.contains(0.0, 0.0)
        assert ring.contains(0.75, 0.0)

    def test_annulus_requires_ordered_radii(self):
        """r0 >= r1 is rejected"""
        with pytest.raises(ValidationError):
            Annulus(r0=1.0, r1=1.0)

    def test_nonpositive_size_rejected(self):
        """Sizes must be positive"""
        with pytest.raises(ValidationError):
            Disk(radius=-1.0)
        with pytest.raises(ValidationError):
            Rectangle(width=1.0, height=0.0)

    def test_shapes_are_frozen(self):
        """Shapes are immutable"""
        disk = Disk(radius=1.0)
        with pytest.raises(ValidationError):
            disk.radius = 2.0

    def test_scaled(self):
        """Scaling multiplies area by the square of the factor"""
        for shape in equal_area_family(2.0):
            assert shape.scaled(3.0).area() == pytest.approx(18.0, rel=1e-12)


class TestDistanceToBoundary:
    """Tests for the analytic distance functions"""

    @staticmethod
    def _sampled_distance(shape, x, y, n=200000):
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        bx, by = shape.a * np.cos(t), shape.b * np.sin(t)
        return float(np.min(np.hypot(bx - x, by - y)))

    def test_disk_distance(self):
        """Disk distance is R - |x|"""
        disk = Disk(radius=1.0)
        assert disk.distance_to_boundary(0.3, 0.4) == pytest.approx(0.5)

    @pytest.mark.parametrize("point", [(0.0, 0.0), (0.5, 0.2), (1.2, 0.1), (0.3, 0.6), (1.0, 0.0)])
    def test_ellipse_distance_matches_sampling(self, point):
        """Ellipse distance agrees with brute-force sampling of the boundary"""
        ellipse = Ellipse(a=1.6, b=0.8)
        x, y = point
        expected = self._sampled_distance(ellipse, x, y)
        assert ellipse.distance_to_boundary(x, y) == pytest.approx(expected, abs=1e-4)

    def test_ellipse_distance_tall(self):
        """An ellipse taller than wide gives the minor semi-axis at the centre"""
        assert Ellipse(a=0.5, b=2.0).distance_to_boundary(0.0, 0.0) == pytest.approx(0.5, abs=1e-10)

    def test_stadium_distance(self):
        """Stadium distance is r minus the distance to the core segment"""
        stadium = Stadium(r=1.0, length=2.0)
        assert stadium.distance_to_boundary(0.5, 0.25) == pytest.approx(0.75)
        assert stadium.distance_to_boundary(1.6, 0.0) == pytest.approx(0.4)

    def test_rectangle_distance(self):
        """Rectangle distance is the nearest side"""
        rect = Rectangle(width=4.0, height=1.0)
        assert rect.distance_to_boundary(1.0, 0.2) == pytest.approx(0.3)


class TestEqualAreaFamily:
    """Tests for equal_area_family"""

    def test_member_kinds(self):
        """The family holds the six comparison shapes in a fixed order"""
        names = [shape.name for shape in equal_area_family(np.pi)]
        assert names == [ShapeKind.DISK, ShapeKind.SQUARE, ShapeKind.ELLIPSE,
                         ShapeKind.RECTANGLE, ShapeKind.STADIUM, ShapeKind.ANNULUS]

    @pytest.mark.parametrize("area", [np.pi, 1.0, 7.5])
    def test_equal_areas(self, area):
        """Every member has the target area to 1e-12 relative"""
        for shape in equal_area_family(area):
            assert abs(shape.area() - area) / area <= 1e-12

    def test_sizes_at_area_pi(self):
        """Area pi gives the unit disk, a sqrt(pi) square and a sqrt(2) x sqrt(2)/2 ellipse"""
        disk = family_member(ShapeKind.DISK, np.pi)
        square = family_member(ShapeKind.SQUARE, np.pi)
        ellipse = family_member(ShapeKind.ELLIPSE, np.pi)
        assert disk.radius == pytest.approx(1.0, rel=1e-15)
        assert square.width == pytest.approx(np.sqrt(np.pi)) and square.height == square.width
        assert ellipse.a == pytest.approx(np.sqrt(2.0))
        assert ellipse.b == pytest.approx(np.sqrt(2.0) / 2.0)

    def test_aspect_ratios(self):
        """4:1 rectangle, stadium with straight part equal to the cap diameter, annulus r1 = 2 r0"""
        rect = family_member(ShapeKind.RECTANGLE, 2.0)
        stadium = family_member(ShapeKind.STADIUM, 2.0)
        ring = family_member(ShapeKind.ANNULUS, 2.0)
        assert rect.width / rect.height == pytest.approx(4.0)
        assert stadium.length == pytest.approx(2.0 * stadium.r)
        assert ring.r1 == pytest.approx(2.0 * ring.r0)

    def test_disk_has_least_perimeter(self):
        """The disk has strictly the smallest perimeter in the family"""
        family = equal_area_family(np.pi)
        disk = family[0]
        assert disk.isoperimetric_ratio() == pytest.approx(1.0, rel=1e-12)
        for shape in family[1:]:
            assert shape.perimeter() > disk.perimeter()
            assert shape.isoperimetric_ratio() > 1.0

    def test_invalid_area(self):
        """Nonpositive area raises DomainError"""
        with pytest.raises(DomainError):
            equal_area_family(0.0)

    def test_unknown_member(self):
        """Unknown shape kinds raise DomainError"""
        with pytest.raises(DomainError, match="Invalid shape"):
            family_member("triangle", 1.0)


class TestBuildMask:
    """Tests for build_mask and GridMask"""

    def test_unit_square_quarter_spacing(self):
        """rectangle(1,1), h=0.25 has the 3x3 interior nodes at offsets 0.25, 0.5, 0.75"""
        mask = build_mask(Rectangle(width=1.0, height=1.0), 0.25)
        assert mask.count == 9
        X, Y = mask.coords
        xs = np.unique(X[mask.interior])
        np.testing.assert_allclose(xs - (-0.5), [0.25, 0.5, 0.75], atol=1e-15)

    def test_disk_interior_strictly_inside(self):
        """disk(R=1), h=0.5: every interior node has x^2 + y^2 < 1"""
        mask = build_mask(Disk(radius=1.0), 0.5)
        X, Y = mask.coords
        assert mask.count > 0
        assert np.all(X[mask.interior] ** 2 + Y[mask.interior] ** 2 < 1.0)

    def test_disk_count_area(self):
        """disk(R=1), h=0.01: count * h^2 within 1% of pi"""
        mask = build_mask(Disk(radius=1.0), 0.01)
        assert abs(mask.count * 0.01 ** 2 - np.pi) / np.pi < 0.01

    def test_outer_ring_exterior(self):
        """The outermost ring of nodes is exterior"""
        for shape in equal_area_family(np.pi):
            mask = build_mask(shape, 0.1)
            assert not mask.interior[0, :].any() and not mask.interior[-1, :].any()
            assert not mask.interior[:, 0].any() and not mask.interior[:, -1].any()

    def test_cut_fractions(self):
        """Cuts lie in (0, 1] and are 1 where the neighbour is interior"""
        mask = build_mask(family_member(ShapeKind.ELLIPSE, np.pi), 0.05)
        for d in "ewns":
            cut = mask.cut(d)[mask.interior]
            assert np.all(cut > 0) and np.all(cut <= 1.0)
            inner = mask.neighbor_interior(d)[mask.interior]
            assert np.all(cut[inner] == 1.0)

    def test_cut_points_on_boundary(self):
        """Each eastward cut lands on the disk boundary"""
        mask = build_mask(Disk(radius=1.0), 0.07)
        X, Y = mask.coords
        sel = mask.interior & ~mask.neighbor_interior("e")
        bx = X[sel] + mask.cut_e[sel] * mask.h
        np.testing.assert_allclose(np.hypot(bx, Y[sel]), 1.0, atol=1e-12)

    def test_mask_symmetric(self):
        """The disk mask is symmetric under both reflections"""
        mask = build_mask(Disk(radius=1.0), 0.03)
        assert np.array_equal(mask.interior, mask.interior[:, ::-1])
        assert np.array_equal(mask.interior, mask.interior[::-1, :])
        np.testing.assert_array_equal(mask.cut_e, mask.cut_w[:, ::-1])

    def test_weights_sum_to_area(self):
        """Cut-cell weights integrate to the area within a few percent"""
        for shape in equal_area_family(np.pi):
            mask = build_mask(shape, 1 / 64)
            assert mask.weights.sum() == pytest.approx(np.pi, rel=0.03)
            assert mask.area == pytest.approx(np.pi, rel=1e-12)

    def test_enclosed_area_converges(self):
        """The polygon through the cut points converges to the disk area at least linearly"""
        disk = Disk(radius=1.0)
        errors = [abs(build_mask(disk, h).enclosed_area() - np.pi) for h in (0.05, 0.025, 0.0125)]
        assert errors[1] <= 0.75 * errors[0]
        assert errors[2] <= 0.75 * errors[1]

    def test_enclosed_area_fine_grid(self):
        """Chords through the cut points lose only a sliver of the disk"""
        area = build_mask(Disk(radius=1.0), 0.02).enclosed_area()
        assert area < np.pi
        assert area == pytest.approx(np.pi, rel=1e-3)

    def test_spacing_too_coarse(self):
        """h at or above the inradius raises MaskError"""
        with pytest.raises(MaskError):
            build_mask(Disk(radius=1.0), 1.0)
        with pytest.raises(MaskError):
            build_mask(Disk(radius=1.0), -0.1)

    def test_arrays_read_only(self):
        """Mask arrays cannot be modified"""
        mask = build_mask(Disk(radius=1.0), 0.25)
        with pytest.raises(ValueError):
            mask.interior[0, 0] = True


class TestShift:
    """Tests for the shift helper"""

    def test_shift_east(self):
        """shift(arr, 1, 0)[j, i] = arr[j, i + 1]"""
        arr = np.arange(12.0).reshape(3, 4)
        out = shift(arr, 1, 0, fill=-1.0)
        np.testing.assert_array_equal(out[:, :3], arr[:, 1:])
        assert np.all(out[:, 3] == -1.0)

    def test_shift_south(self):
        """shift(arr, 0, -1)[j, i] = arr[j - 1, i]"""
        arr = np.arange(12.0).reshape(3, 4)
        out = shift(arr, 0, -1)
        np.testing.assert_array_equal(out[1:, :], arr[:-1, :])
        assert np.all(out[0, :] == 0.0)
