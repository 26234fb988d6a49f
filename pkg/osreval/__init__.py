from .app import entry_point as cli  # noqa: F401
from .app import main as main
