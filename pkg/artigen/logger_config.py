import logging
import os
from logging.handlers import RotatingFileHandler

DEFAULT_LOG_DIR = 'logs'


def setup_logger(name, log_file='artigen.log', level=logging.INFO, verbose=False):
    """Set up a named logger writing to a rotating file under the log directory.

    The directory defaults to ``logs`` and can be moved with ``ARTIGEN_LOG_DIR``.
    """
    log_dir = os.environ.get('ARTIGEN_LOG_DIR', DEFAULT_LOG_DIR)
    os.makedirs(log_dir, exist_ok=True)

    log_path = os.path.join(log_dir, log_file)

    logger = logging.getLogger(f'artigen.{name}')
    logger.setLevel(logging.DEBUG if verbose else level)

    # Prevent adding handlers multiple times
    if not logger.handlers:
        file_handler = RotatingFileHandler(
            log_path,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5
        )
        file_handler.setLevel(logging.DEBUG if verbose else level)
        file_formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        file_handler.setFormatter(file_formatter)
        logger.addHandler(file_handler)

    return logger
