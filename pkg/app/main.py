import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app import __version__
from app.core.config import settings
from app.core.exceptions import SimulationError
from app.core.logging import setup_logging, get_logger
from app.api.config import router as config_router
from app.api.runs import router as runs_router


# Setup inicial
setup_logging()
logger = get_logger("main")


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Gerencia o ciclo de vida da aplicação"""

    logger.info("🚀 Iniciando SkyEdge Swarm API...")
    logger.info(f"Precisão numérica: {settings.float_dtype}; saídas em {settings.output_dir}")
    try:
        yield
    finally:
        logger.info("🔄 Finalizando SkyEdge Swarm API...")


# Criar aplicação FastAPI
app = FastAPI(
    title="SkyEdge Swarm",
    description="Simulador de MEC com enxames de UAVs treinados por EPS-PPO com GAT",
    version=__version__,
    lifespan=lifespan
)


# Configuração CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["*"],
)


# Incluir routers
app.include_router(config_router)
app.include_router(runs_router)


@app.get("/")
async def root():
    """Endpoint raiz"""
    return {
        "service": "SkyEdge Swarm",
        "version": __version__,
        "status": "online",
        "endpoints": {
            "health": "/health",
            "config_defaults": "/api/config/defaults",
            "trace": "/api/runs/trace",
            "evaluate": "/api/runs/evaluate"
        }
    }


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "timestamp": time.time(),
        "config": {
            "float_dtype": settings.float_dtype,
            "output_dir": settings.output_dir,
            "default_config_path": settings.default_config_path
        }
    }


@app.exception_handler(SimulationError)
async def simulation_exception_handler(request: Request, exc: SimulationError):
    """Erros de configuração, dimensão ou checkpoint viram 422"""

    logger.warning(f"Requisição rejeitada em {request.url.path}: {exc}")
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)}
    )


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Handler global para exceções"""

    logger.error(f"Erro não tratado: {exc}")

    return JSONResponse(
        status_code=500,
        content={
            "error": "Internal server error",
            "detail": str(exc) if settings.debug else "An unexpected error occurred",
            "path": str(request.url.path)
        }
    )
