"""Spectral analysis of countable direct sums of finite matrix blocks."""

from .boundedness import (
    BlockBound,
    FamilyBoundReport,
    Verdict,
    kreiss_constant,
    poly_bound_block,
    poly_bound_family,
    poly_sup_norm,
    power_bound_block,
    power_bound_family,
)
from .envelope import Envelope, EnvelopeSyntaxError
from .family import (
    BlockFamily,
    BlockMatrix,
    ConstructionError,
    MeasureSpec,
    TailCertificate,
    make_explicit,
    make_generator,
    truncate,
)
from .fixtures import FixtureSpec, OracleReport, ResourceError, assemble, make_fixture, oracle_check
from .kernel import (
    Diverged,
    KernelError,
    Polynomial,
    apply_polynomial,
    eigenvalues,
    power_norms,
    resolvent_norm,
    singular_values,
    spectral_radius,
)
from .schatten import (
    Compactness,
    Membership,
    compactness_verdict,
    merged_singular_values,
    schatten_decision,
)
from .spectrum import (
    Kind,
    PointSpectrumError,
    SupStatus,
    classify_point,
    minimal_support,
    point_spectrum,
    resolvent_sup,
)

__version__ = "0.1.0"
