"""paraform: exact-arithmetic reduction of formal connections carrying
weighted (parahoric) filtrations, with replayable gauge certificates."""

__version__ = "0.1.0"

from .series import INF, LaurentSeries, RamifiedContext, frac, frac_str
from .liealg import (ConstMat, MatSeries, Sl2Triple, Subalgebra, bracket,
                     centralizer, exp_trunc, jacobson_morozov,
                     jordan_chevalley, solve_commutator)
from .gauge import (CocharFactor, Connection, ConstFactor, ExpFactor,
                    GaugeWord, RamifyFactor, ShearFactor, birkhoff_factor,
                    gauge, gauge_matrix, word_matrix)
from .parahoric import (Weight, depth_at, in_depth_filtration, in_filtration,
                        iwahori_weight, leading_index, residue, residue0,
                        residue_transport, weight_rep)
from .reduction import (FieldExtensionNeeded, ReductionBudget, ReductionReport,
                        full_reduce, reduce_by_nilpotent, reduce_by_semisimple,
                        reduce_by_semisimple_family, reduce_to_cartan, shear,
                        shear_invariants, slope)
from .regularity import (RegularityVerdict, boalch_normalize, deligne_twist,
                         is_regular, reduce_with_normalization,
                         relative_regularity)
from .borel import (BorelBudget, SearchExhausted, borel_reduce,
                    borel_shape_ok, nilpotent_transport_ok,
                    springer_tangent_dim)
