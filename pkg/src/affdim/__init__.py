"""Affinity dimension, Lyapunov dimension of Bernoulli measures and the
dimension gap for affine iterated function systems."""

__version__ = "0.1.0"

from .errors import (
    AffdimError,
    BadOrder,
    BudgetExceeded,
    EmptyWord,
    InadmissibleForm,
    NoSignChange,
    NotContracting,
    SingularMatrix,
    ValidationError,
)
from .linalg import (
    CartanVector,
    LinearForm,
    WeightVector,
    cartan_projection,
    eigen_moduli,
    exterior_power,
    jordan_projection,
    phi,
    singular_values,
    sv_potential,
    xi,
    xi_potential,
)
from .words import enumerate_products, level_table, word_product
from .pressure import (
    DimensionValue,
    PressureBracket,
    affinity_dimension,
    cartan_pressure,
    check_contraction,
    finite_pressure,
    pressure_bracket,
)
from .measures import BernoulliMeasure, GapReport, entropy, gamma_sup, lyapunov_dimension, lyapunov_functional
from .structure import check_irreducible, check_similitude, hypothesis_report
from .gibbs import (
    DefectWitness,
    GibbsAudit,
    defect_witness_search,
    det_potential_pressure,
    gibbs_audit,
    quasimult_estimate,
)
from .render import AffineIFS, RasterImage, natural_projection_point, render_attractor, render_measure
from .document import IFSDocument, load_document
