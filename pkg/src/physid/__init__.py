"""physid: turn one mesh plus predicted material properties into an
interactive soft- or rigid-body simulation, with the surrounding
classification pipeline, metrics, and a live session service."""

from .camera import Camera
from .collision import Contact, Environment, HalfSpace, detect, resolve
from .integrator import (ForceAccumulator, ImpulseEvent, NodeState,
                         SoftBodyState, apply_impulse_node,
                         apply_impulse_spatial, damp_velocities, step)
from .mesh import MassDistribution, TriMesh, load_obj, lump_mass, save_obj
from .metrics import (LabeledPredictions, PropertyPredictions, f1_score,
                      image_metrics, weighted_mae, weighted_mse)
from .pipeline import (PipelineResult, PromptTemplate, SessionSpec,
                       configure_simulation, parse_classification,
                       parse_properties, run_pipeline)
from .rigidbody import (HingeConeConstraint, RigidState, apply_impulse_rigid,
                        choose_hinge_anchor, clamp_cone_twist, step_rigid)
from .session import (EventScript, PointerSample, SimConfig,
                      SimulationSession, run_batch, touch_to_impulse)
from .softbody import (MaterialProperties, StaticMask, apply_static_mask,
                       bending_forces, map_pixels_to_nodes, spring_forces,
                       volume_forces)

__version__ = "0.1.0"
