"""Block recurrent stochastic configuration networks."""

from ._core import (
    BlockModel,
    ConstructionStalled,
    ConvergenceRow,
    Dataset,
    DegenerateTarget,
    Error,
    InvalidArgument,
    IoError,
    NumericFailure,
    ParseError,
    TrainConfig,
    least_squares_readout,
    load_csv,
    mackey_glass,
    max_singular_value,
    mg_task,
    nrmse,
    plant_task,
    projection_step,
    spectral_radius,
    train_brscn,
    train_esn,
    train_rscn,
    write_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
