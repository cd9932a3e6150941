"""Strategy discovery for plannable environments via metalevel policy search."""

__version__ = "0.1.0"
