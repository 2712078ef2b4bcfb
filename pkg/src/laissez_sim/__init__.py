"""Market-based dynamic allocation simulator for heterogeneous accelerator clouds.

Tenants submit prioritized launch tables with maximum bid rates, a
cluster-local exchange clears each hardware class continuously at the second
price, economic agents rebid and migrate around checkpoint boundaries, and a
billing ledger meters every held interval. The whole simulation is a
deterministic discrete-event replay: same scenario, same trace bytes.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    AcceleratorType,
    Duration,
    FunctionalCluster,
    Instance,
    LaunchEntry,
    LaunchTable,
    Money,
    Rate,
    SimTime,
    UserRequest,
    WorkloadProfile,
    break_even_bid,
    cost_to_complete,
    remaining_time,
    validate_launch_table,
)
