from .console import main
