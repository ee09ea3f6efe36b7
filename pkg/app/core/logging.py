import os
import sys
from loguru import logger
from app.core.config import settings


def setup_logging(level: str = None, log_file: str = None):
    """Configura o sistema de logging do simulador"""

    level = level or settings.log_level
    log_file = settings.log_file if log_file is None else log_file

    # Remove o handler padrão do loguru
    logger.remove()

    # Formato personalizado
    log_format = (
        "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
        "<level>{level: <8}</level> | "
        "<cyan>{extra[name]}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
        "<level>{message}</level>"
    )
    logger.configure(extra={"name": "skyedge"})

    # Handler para console (stderr, para não misturar com saídas da CLI)
    logger.add(
        sys.stderr,
        format=log_format,
        level=level,
        colorize=True,
        backtrace=True,
        diagnose=settings.debug
    )

    # Handler para arquivo
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)

        logger.add(
            log_file,
            format=log_format,
            level=level,
            rotation="10 MB",
            retention="30 days",
            compression="zip",
            backtrace=True,
            diagnose=settings.debug
        )

    logger.debug("Sistema de logging configurado")


def get_logger(name: str = None):
    """Retorna uma instância do logger"""
    if name:
        return logger.bind(name=name)
    return logger
