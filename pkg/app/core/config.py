import json
import math
import os
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings

from app.core.exceptions import ConfigurationError


class Settings(BaseSettings):
    """Configurações do processo (não da simulação)"""

    # API Settings
    api_host: str = Field(default="0.0.0.0", env="API_HOST")
    api_port: int = Field(default=int(os.getenv("PORT", "8001")), env="API_PORT")
    debug: bool = Field(default=False, env="DEBUG")

    # Simulação
    output_dir: str = Field(default="./runs", env="OUTPUT_DIR")
    default_config_path: str = Field(default="./data/desk.json", env="DEFAULT_CONFIG_PATH")
    float_dtype: Literal["float64", "float32"] = Field(default="float64", env="FLOAT_DTYPE")

    # Logging
    log_level: str = Field(default="INFO", env="LOG_LEVEL")
    log_file: str = Field(default="./logs/skyedge.log", env="LOG_FILE")

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False


# Instância global das configurações
settings = Settings()


class _Section(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid", frozen=True)


class EnvironmentConfig(_Section):
    """Parâmetros físicos do cenário (nomes da tabela de parâmetros de simulação)"""

    num_uavs: int = Field(default=10, alias="M", gt=0, description="Número de UAVs")
    num_users: int = Field(default=50, alias="N", ge=0, description="Número de usuários")
    num_slots: int = Field(default=80, alias="T", gt=0, description="Slots de tempo por episódio")
    area_size: float = Field(default=250.0, alias="L", gt=0, description="Lado da área quadrada (m)")
    altitude: float = Field(default=100.0, alias="H", gt=0, description="Altitude dos UAVs (m)")
    task_size_kb: Tuple[float, float] = Field(default=(100.0, 200.0), alias="S_kb", description="Faixa do tamanho das tarefas (Kb)")
    cycles_per_bit: Tuple[float, float] = Field(default=(150.0, 200.0), alias="C", description="Faixa de ciclos de CPU por bit")
    tasks_per_user: int = Field(default=3, alias="U", gt=0, description="Tarefas por usuário no início do episódio")
    min_distance: float = Field(default=10.0, alias="d_min", gt=0, description="Separação mínima entre UAVs (m)")
    coverage_radius: float = Field(default=25.0, alias="R_cov", gt=0, description="Raio de cobertura (m)")
    comm_radius: float = Field(default=60.0, alias="R_com", gt=0, description="Raio de comunicação entre UAVs (m)")
    max_neighbors: int = Field(default=4, alias="K", ge=0, description="Número máximo de vizinhos por UAV")
    bandwidth_hz: float = Field(default=10e6, alias="B", gt=0, description="Largura de banda (Hz)")
    power_gain_db: float = Field(default=-50.0, alias="G0_dB", description="Ganho de potência na distância de referência (dB)")
    noise_dbm: float = Field(default=-90.0, alias="noise_dBm", description="Potência do ruído (dBm)")
    user_tx_power: float = Field(default=0.1, alias="P_n", gt=0, description="Potência de transmissão do usuário (W)")
    receive_power: float = Field(default=0.1, alias="P_r", gt=0, description="Potência de recepção do UAV (W)")
    battery_j: float = Field(default=100e3, alias="battery_J", gt=0, description="Bateria inicial do UAV (J)")
    kappa: float = Field(default=1e-27, alias="kappa", gt=0, description="Energia por ciclo de CPU (J)")
    max_speed: float = Field(default=2.0, alias="V_max", gt=0, description="Velocidade máxima do UAV (m/s)")
    hover_power: float = Field(default=1.0, alias="P_h", gt=0, description="Potência de pairar (W)")
    fly_power: float = Field(default=10.0, alias="P_f", gt=0, description="Potência de voo na velocidade máxima (W)")
    penalty: float = Field(default=500.0, alias="lambda_penalty", gt=0, description="Penalidade por colisão ou borda")
    w1: float = Field(default=0.5, alias="w1", ge=0, description="Peso da energia no objetivo")
    w2: float = Field(default=0.5, alias="w2", ge=0, description="Peso das tarefas processadas no objetivo")
    slot_duration: float = Field(default=1.0, alias="dt", gt=0, description="Duração do slot (s)")
    user_speed_max: float = Field(default=1.0, alias="v_user_max", ge=0, description="Velocidade máxima dos usuários (m/s)")
    grid_cell: float = Field(default=10.0, alias="grid_cell", gt=0, description="Lado da célula do mapa de visitas (m)")
    coverage_3d: bool = Field(default=False, alias="coverage_3d", description="Usa a distância 3-D literal na cobertura")
    reject_close_placement: bool = Field(default=False, alias="reject_close_placement", description="Reamostra UAVs iniciais mais próximos que d_min")
    placement_retries: int = Field(default=1000, alias="placement_retries", gt=0, description="Tentativas da amostragem com rejeição")
    cooperative_penalty: bool = Field(default=False, alias="cooperative_penalty", description="Penaliza todos os UAVs quando qualquer violação ocorre")
    normalize_energy: bool = Field(default=False, alias="normalize_energy", description="Normaliza a energia do objetivo pela energia máxima do enxame")

    @model_validator(mode="after")
    def _check_physics(self) -> "EnvironmentConfig":
        if self.min_distance >= self.area_size:
            raise ValueError("d_min deve ser menor que L")
        for name in ("task_size_kb", "cycles_per_bit"):
            low, high = getattr(self, name)
            if low <= 0 or high < low:
                raise ValueError(f"{name} deve ser uma faixa positiva e ordenada")
        return self

    @property
    def grid_size(self) -> int:
        return int(math.ceil(self.area_size / self.grid_cell))

    @property
    def step_limit(self) -> float:
        return self.max_speed * self.slot_duration


class EncoderConfig(_Section):
    """Dimensões do codificador CNN/MLP e das camadas GAT"""

    max_obs_users: int = Field(default=10, alias="max_obs_users", gt=0, description="Slots de usuários na observação")
    mlp_hidden: int = Field(default=64, alias="mlp_hidden", gt=0, description="Largura da MLP de status")
    cnn_channels: Tuple[int, int] = Field(default=(8, 16), alias="cnn_channels", description="Kernels das duas convoluções")
    cnn_kernels: Tuple[int, int] = Field(default=(5, 3), alias="cnn_kernels", description="Tamanho dos kernels")
    cnn_strides: Tuple[int, int] = Field(default=(2, 2), alias="cnn_strides", description="Passo das convoluções")
    cnn_out: int = Field(default=64, alias="cnn_out", gt=0, description="Saída densa da CNN")
    gat_dim: int = Field(default=128, alias="gat_dim", gt=0, description="Largura das camadas GAT")
    heads: int = Field(default=4, alias="K_heads", gt=0, description="Cabeças de atenção por camada GAT")
    leaky_slope: float = Field(default=0.01, alias="leaky_slope", gt=0, lt=1, description="Inclinação da leaky-ReLU")

    @model_validator(mode="after")
    def _check_cnn(self) -> "EncoderConfig":
        if min(self.cnn_channels) <= 0 or min(self.cnn_kernels) <= 0 or min(self.cnn_strides) <= 0:
            raise ValueError("camadas da CNN devem ter dimensões positivas")
        return self

    @property
    def feature_dim(self) -> int:
        return self.cnn_out + self.mlp_hidden

    @property
    def z_dim(self) -> int:
        return self.feature_dim + self.gat_dim


class PPOConfig(_Section):
    """Hiperparâmetros do EPS-PPO"""

    gamma: float = Field(default=0.99, alias="gamma", gt=0, le=1, description="Fator de desconto")
    gae_lambda: float = Field(default=0.95, alias="gae_lambda", ge=0, le=1, description="Lambda do GAE")
    clip_eps: float = Field(default=0.2, alias="clip_eps", gt=0, lt=1, description="Clip do surrogate")
    epochs: int = Field(default=4, alias="epochs", gt=0, description="Épocas por rodada")
    minibatch_size: int = Field(default=64, alias="minibatch", gt=0, description="Tamanho do minibatch")
    value_coef: float = Field(default=0.5, alias="c_v", ge=0, description="Coeficiente da perda do crítico")
    entropy_coef: float = Field(default=0.01, alias="c_e", ge=0, description="Coeficiente do bônus de entropia")
    max_grad_norm: float = Field(default=0.5, alias="max_grad_norm", gt=0, description="Clip da norma do gradiente")
    clip_per_group: bool = Field(default=True, alias="clip_per_group", description="Clip separado para ator, crítico e codificador compartilhado")
    normalize_returns: bool = Field(default=True, alias="normalize_returns", description="Escala as recompensas pelo RMS corrente do retorno descontado")
    reward_clip: float = Field(default=10.0, alias="reward_clip", gt=0, description="Limite das recompensas escaladas")
    buffer_capacity: int = Field(default=4096, alias="buffer_capacity", gt=0, description="Capacidade do buffer por UAV")
    learning_rate: float = Field(default=3e-4, alias="lr", gt=0, description="Taxa de aprendizado do Adam")
    adam_betas: Tuple[float, float] = Field(default=(0.9, 0.999), alias="adam_betas", description="Betas do Adam")
    adam_eps: float = Field(default=1e-8, alias="adam_eps", gt=0, description="Epsilon do Adam")
    actor_hidden: int = Field(default=64, alias="actor_hidden", gt=0, description="Camada oculta do ator")
    critic_hidden: int = Field(default=64, alias="critic_hidden", gt=0, description="Camada oculta do crítico")
    init_log_std: float = Field(default=0.0, alias="init_log_std", description="log-desvio inicial da cabeça contínua")
    update_every: int = Field(default=0, alias="update_every", ge=0, description="Slots entre rodadas de aprendizado (0 = fim do episódio)")
    sharing_mode: Literal["eps", "ps", "independent"] = Field(default="eps", alias="sharing_mode", description="eps, ps ou independent")
    train_encoder: bool = Field(default=True, alias="train_encoder", description="Propaga o gradiente do PPO até o codificador e a GAT")


class TrainingConfig(_Section):
    """Laço de treinamento"""

    episodes: int = Field(default=900, alias="episodes", gt=0, description="Número máximo de episódios")
    seed: int = Field(default=0, alias="seed", description="Semente mestre")
    checkpoint_interval: int = Field(default=25, alias="checkpoint_interval", gt=0, description="Episódios entre checkpoints")
    output_dir: Optional[str] = Field(default=None, alias="output_dir", description="Diretório de saída (padrão: settings.output_dir)")


SECTIONS = ("environment", "encoder", "ppo", "training")


class RunConfig(BaseModel):
    """Configuração completa de uma execução"""

    model_config = ConfigDict(populate_by_name=True, extra="forbid", frozen=True)

    environment: EnvironmentConfig = Field(default_factory=EnvironmentConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    ppo: PPOConfig = Field(default_factory=PPOConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)

    @model_validator(mode="after")
    def _check_map_fits_cnn(self) -> "RunConfig":
        size = self.environment.grid_size
        for kernel, stride in zip(self.encoder.cnn_kernels, self.encoder.cnn_strides):
            if kernel > size:
                raise ValueError(
                    f"kernel {kernel} não cabe no mapa {size}x{size} (L/grid_cell)"
                )
            size = (size - kernel) // stride + 1
        return self

    @property
    def cnn_output_side(self) -> int:
        size = self.environment.grid_size
        for kernel, stride in zip(self.encoder.cnn_kernels, self.encoder.cnn_strides):
            size = (size - kernel) // stride + 1
        return size

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)

    @classmethod
    def resolve_param(cls, name: str) -> Tuple[str, str]:
        """Localiza um parâmetro pelo alias ou pelo nome do campo"""
        for section in SECTIONS:
            model = cls.model_fields[section].annotation
            for field_name, info in model.model_fields.items():
                if name in (field_name, info.alias):
                    return section, field_name
        raise ConfigurationError(f"Parâmetro desconhecido: {name}")

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Retorna uma nova configuração validada com os valores substituídos"""
        data = self.model_dump(by_alias=False)
        for name, value in overrides.items():
            section, field_name = self.resolve_param(name)
            data[section][field_name] = value
        return build_run_config(data)

    @classmethod
    def describe(cls) -> Iterator[Tuple[str, str, str, Any, str]]:
        """(seção, alias, campo, padrão, descrição) para cada chave"""
        for section in SECTIONS:
            model = cls.model_fields[section].annotation
            for field_name, info in model.model_fields.items():
                yield section, info.alias or field_name, field_name, info.default, info.description or ""


def build_run_config(data: Dict[str, Any]) -> RunConfig:
    """Valida um documento de configuração já carregado"""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigurationError(f"Configuração inválida: {problems}") from e


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """Carrega e valida um arquivo JSON de configuração"""
    config_path = Path(path or settings.default_config_path)
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError("Arquivo de configuração não encontrado", path=str(config_path)) from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"JSON inválido: {e}", path=str(config_path)) from e
    return build_run_config(data)


def config_help_lines() -> List[str]:
    """Linhas de ajuda com todas as chaves e padrões"""
    lines = []
    for section, alias, field_name, default, description in RunConfig.describe():
        lines.append(f"{section}.{alias} ({field_name}) = {default!r}: {description}")
    return lines


PROFILE_DIR = Path(__file__).resolve().parents[2] / "data"
PROFILES = ("desk", "paper")


def load_profile(name: str) -> RunConfig:
    """Perfil embarcado em data/<name>.json"""
    if name not in PROFILES:
        raise ConfigurationError(f"Perfil desconhecido: {name} (disponíveis: {', '.join(PROFILES)})")
    return load_run_config(str(PROFILE_DIR / f"{name}.json"))
