"""minr: meta-initialized implicit neural representations for volume sequences.

Pretrain a shared sine-MLP initialization on a sparsely subsampled volume
sequence, finetune it per volume in a few gradient steps, reconstruct and
score the results, and analyze the adapted parameter vectors.
"""

__version__ = "0.1.0"

from .errors import DataError, FormatError, MinrError, SchemaError
from .siren import (
    LayerSchema,
    MlpParameters,
    backward,
    default_schema,
    flatten,
    forward,
    init_siren,
    param_count,
    siren_schema,
    unflatten,
)
from .optim import AdamState, adam_init, adam_step, sgd_step
from .volume import (
    CoordBatch,
    DatasetDescriptor,
    Volume,
    coord_of_index,
    load_descriptor,
    load_raw,
    normalize,
    denormalize,
    sample_batch,
    subsample_dataset,
    write_raw,
)
from .training import (
    AdaptedModelSet,
    FinetuneConfig,
    MetaConfig,
    encode_dataset,
    finetune_volume,
    inner_adapt,
    meta_pretrain,
    pretrain_vanilla,
    train_scratch,
)
from .metrics import QualityReport, evaluate_member, psnr, reconstruct_volume
from .marching import TriangleMesh, marching_cubes, write_obj
from .chamfer import chamfer
from .analysis import (
    ParamMatrix,
    Projection2D,
    SelectionResult,
    param_matrix,
    pca_project,
    select_timesteps,
    smoothness_score,
    tsne_project,
)
from .checkpoint import read_checkpoint, write_checkpoint
