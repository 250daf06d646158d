from .data import (
    DataShard,
    Dataset,
    load_dataset,
    make_gaussian_mixture,
    partition_dirichlet,
    partition_iid,
    save_dataset,
    train_test_split,
)
from .models import LogisticModel, MLPModel, accuracy, loss_and_gradient, make_model
from .training import (
    FLConfig,
    FLRun,
    RoundMetrics,
    aggregate,
    aggregation_weights,
    client_losses,
    local_update,
    rounds_to_fraction,
    run_nfl,
)
