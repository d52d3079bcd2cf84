"""antnet: simulation engine and exact oracles for reinforced ant walks.

The package simulates "ant processes": repeated weighted random walks from a
nest vertex N to a food vertex F on a finite multigraph, each walk followed
by a +1 reinforcement of a path chosen from its trace.  Alongside the
engine it ships exact analytic oracles (electrical-network conductances,
absorbing-chain hitting probabilities, urn laws) used to validate the
simulations.
"""

from .graphs import (
    Graph,
    SpExpression,
    Base,
    Series,
    Parallel,
    parse_sp,
    render_sp,
    sp_to_graph,
    h_min,
    h_max,
    geodesic_dag,
    losange,
    counterexample,
    sublinear_demo,
    double_sierpinski,
)
from .rng import PhiloxStream
from .walks import (
    ReinforcementRule,
    WeightState,
    run_process,
    geometric_schedule,
    CapExceeded,
)
from .conductance import (
    phi,
    sp_conductance,
    laplacian_conductance,
    hitting_probability,
)
from .losange import LosangeWeights, p_vector_exact, drift_F
from .urns import UrnSpec, run_urn, exact_urn_distribution, rubin_sampler
from .counterexample import p_exact, drift_exact, simulate_left_fraction

# importing the analytics submodule rebinds the package attribute
# "losange" to the module; restore the graph constructor
from .graphs import losange

__version__ = "0.1.0"
