from typing import Any, Dict, List

from fastapi import APIRouter, HTTPException, Query
from pydantic import BaseModel

from app.core.config import PROFILES, RunConfig, load_profile
from app.core.exceptions import ConfigurationError
from app.core.logging import get_logger

logger = get_logger("config_routes")

router = APIRouter(prefix="/api/config", tags=["config"])


class ConfigKey(BaseModel):
    """Uma chave da configuração de execução"""
    section: str
    key: str
    field: str
    default: Any
    value: Any
    description: str


class ConfigDefaultsResponse(BaseModel):
    profile: str
    keys: List[ConfigKey]
    config: Dict[str, Any]


@router.get("/defaults", response_model=ConfigDefaultsResponse)
async def get_config_defaults(profile: str = Query(default="desk", description=f"Perfil: {', '.join(PROFILES)}")):
    """Todas as chaves com padrão, valor no perfil e descrição"""
    try:
        config = load_profile(profile)
    except ConfigurationError as e:
        raise HTTPException(status_code=422, detail=str(e))

    keys = []
    for section, alias, field_name, default, description in RunConfig.describe():
        value = getattr(getattr(config, section), field_name)
        keys.append(ConfigKey(
            section=section,
            key=alias,
            field=field_name,
            default=default,
            value=value,
            description=description
        ))
    logger.info(f"Padrões consultados para o perfil {profile}")
    return ConfigDefaultsResponse(profile=profile, keys=keys, config=config.to_json_dict())
