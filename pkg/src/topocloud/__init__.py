"""Point cloud classification from cubical persistent homology features."""

__version__ = "0.1.0"

from .pc_io import PointCloud, TriangleMesh, load_cloud, load_off, load_xyz, sample_mesh  # noqa: E402
from .voxelizer import BinaryImage3D, voxelize  # noqa: E402
from .filtration import FiltrationSpec, GrayscaleImage3D, apply_filtration  # noqa: E402
from .cubical import PersistenceDiagram, build_complex, compute_persistence  # noqa: E402
from .vectorize import SamplingConfig, vectorize_diagram  # noqa: E402
from .features import FULL57, MN40, FiltrationBank, featurize_cloud, featurize_dataset  # noqa: E402
from .corrupt import CorruptionSpec, apply_corruption  # noqa: E402
