"""Three-panel figure rendering for the density-comparison CSV contract."""

__version__ = "0.1.0"

from .render import (  # noqa: F401
    EXPECTED_HEADER,
    ContractError,
    PanelSpec,
    build_figure,
    load_grid,
    panel_series,
    render,
)
