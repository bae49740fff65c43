"""Channel assignment for hardware-constrained cognitive radio networks."""
from .model import (
    Assignment,
    AvailabilityModel,
    MacTiming,
    Scenario,
    ScenarioError,
    SensingModel,
    derive_views,
    table1_assignment,
    validate_scenario,
)

__version__ = "0.1.0"
