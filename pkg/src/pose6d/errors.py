"""Exception types shared across the toolkit.

Every error carries a short machine-readable ``code`` so the CLI and the
HTTP service can map failures to exit codes / response bodies without
string matching.
"""


class Pose6dError(Exception):
    """Base class for all toolkit errors."""

    code = "error"


class SingularRotation(Pose6dError):
    """Rotation is at (or numerically on top of) the 180-degree singularity
    where the (a, b, c) encoding has no finite value."""

    code = "singular_rotation"


class DegenerateDepth(Pose6dError):
    """A point's camera-frame depth fell below the projection cutoff."""

    code = "degenerate_depth"

    def __init__(self, index: int, depth: float):
        super().__init__(f"point {index} has camera-frame depth {depth:g} "
                         f"at or below the projection cutoff")
        self.index = index
        self.depth = depth


class LengthMismatch(Pose6dError):
    """Two point lists that must correspond have different lengths."""

    code = "length_mismatch"


class OutOfFrustum(Pose6dError):
    """Translation projects outside the image (or behind the camera), so no
    grid cell can own it."""

    code = "out_of_frustum"


class UnencodableOffset(Pose6dError):
    """No grid cell yields a sub-cell offset inside the open interval the
    sigmoid can produce."""

    code = "unencodable_offset"


class EmptyGrid(Pose6dError):
    """Cell selection was asked to pick from an empty grid."""

    code = "empty_grid"


class DegenerateAnnotation(Pose6dError):
    """Two of the drawn axis lines coincide, leaving rotation underdetermined."""

    code = "degenerate_annotation"


class RankDeficient(Pose6dError):
    """The tangency system is rank deficient (degenerate box)."""

    code = "rank_deficient"


class SingularTransform(Pose6dError):
    """Affine keypoint transform is not invertible."""

    code = "singular_transform"


class ParseError(Pose6dError):
    """A ground-truth file failed to parse; carries file position."""

    code = "parse_error"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class NonOrthonormal(Pose6dError):
    """A parsed rotation matrix is too far from orthonormal to repair."""

    code = "non_orthonormal"


class EmptySet(Pose6dError):
    """An aggregate metric was requested over zero reports."""

    code = "empty_set"
