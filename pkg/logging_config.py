import os
import logging
from logging.handlers import RotatingFileHandler
from datetime import datetime

from config_manager import densops_home

def setup_logging(log_level=logging.WARNING, log_to_file=False):
    """
    Set up logging configuration for the entire application.

    The console always gets a handler; a rotating file under
    ~/.densops/logs is added when log_to_file is set (development mode).
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    
    # Remove existing handlers to avoid duplicates if setup_logging is called multiple times
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
    
    console_formatter = logging.Formatter(
        '%(levelname)-8s | %(name)-25s | %(message)s'
    )
    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(console_formatter)
    root_logger.addHandler(console_handler)
    
    log_file = None
    if log_to_file:
        log_dir = os.path.join(densops_home(), 'logs')
        os.makedirs(log_dir, exist_ok=True)
        date_str = datetime.now().strftime('%Y-%m-%d')
        log_file = os.path.join(log_dir, f'densops_{date_str}.log')
        
        file_formatter = logging.Formatter(
            '%(asctime)s | %(levelname)-8s | %(name)-25s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        file_handler = RotatingFileHandler(
            log_file, 
            maxBytes=5*1024*1024,  # 5 MB
            backupCount=10
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(file_formatter)
        root_logger.addHandler(file_handler)
    
    logging.info("=" * 80)
    logging.info("densops starting")
    logging.info("Log level: %s", logging.getLevelName(log_level))
    logging.info("Log file: %s", log_file or "none")
    logging.info("=" * 80)
    
    return root_logger
