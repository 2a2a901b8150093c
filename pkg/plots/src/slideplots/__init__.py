"""Figure rendering for slideregret CSV outputs."""

from .render import PlotSpec, render_regexp, render_trace

__version__ = "0.1.0"
