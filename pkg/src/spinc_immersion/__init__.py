"""Spinorial (Spin^C) representation of isometric immersions into flat space, checked numerically.

Typical use::

    from spinc_immersion import pipeline
    run = pipeline.run_scenario("sphere", 128)
    run.summary["roundtrip_rms"]
"""

from .clifford import (
    Multivector,
    Signature,
    SpinCElement,
    adjoint_action,
    cl_inner,
    extract_real_vector,
    mv_product,
    spin_lift,
    tau,
    vector_embed,
)
from .frames import (
    AdaptedFrame,
    ConnectionFormField,
    ImmersionPatch,
    SecondFundamentalFormField,
    build_adapted_frame,
    connection_forms,
    induced_metric,
    second_fundamental_form,
)
from .grid import ChartGrid
from .scenarios import Scenario, catalog, sample
from .spinfield import (
    SpinorField,
    U1ConnectionField,
    adapted_covariant_derivative,
    ambient_covariant_derivative,
    combine_connections,
    gauge_transform,
    killing_residual,
    restricted_parallel_spinor,
)
from .weierstrass import (
    OneFormField,
    ReconstructedImmersion,
    build_one_form,
    closedness_residual,
    integrate_one_form,
    rigid_align,
    verify_isometry,
    verify_normal_connection,
    verify_second_fundamental_form,
)

__version__ = "0.1.0"
